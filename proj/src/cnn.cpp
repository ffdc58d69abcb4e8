#include "gait/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "gait/adam.hpp"
#include "gait/binio.hpp"
#include "gait/errors.hpp"
#include "gait/rng.hpp"

namespace gait {

namespace {

constexpr uint16_t kModelVersion = 1;
constexpr double kStandardizeClamp = 6.0;  // z-scores are clipped to +/- 6
constexpr float kStdFloor = 1e-6f;

double relu(double v) { return v > 0.0 ? v : 0.0; }

void softmax_inplace(std::vector<double>& v) {
  const double hi = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (auto& x : v) {
    x = std::exp(x - hi);
    sum += x;
  }
  for (auto& x : v) x /= sum;
}

}  // namespace

size_t ModelConfig::param_count() const {
  size_t n = conv_weight_count() + static_cast<size_t>(conv_filters);
  for (int l = 0; l < kDenseLayers; ++l)
    n += static_cast<size_t>(dense_in(l)) * static_cast<size_t>(dense_out(l)) +
         static_cast<size_t>(dense_out(l));
  return n;
}

void ModelConfig::validate() const {
  if (input_rows <= 0 || input_cols <= 0 || conv_filters <= 0 ||
      conv_kernel <= 0 || pool <= 0)
    throw ConfigError("model dimensions must be positive");
  if (n_classes < 2) throw ConfigError("model needs at least 2 classes");
  for (int u : dense_units)
    if (u <= 0) throw ConfigError("dense layer widths must be positive");
  if (conv_kernel % 2 == 0)
    throw ConfigError("conv kernel must be odd for same padding");
  if (pool_rows() == 0 || pool_cols() == 0)
    throw ConfigError("input too small for the pooling stage");
}

size_t ModelParams::dense_w_off(int layer) const {
  size_t off = config.conv_weight_count() + static_cast<size_t>(config.conv_filters);
  for (int l = 0; l < layer; ++l)
    off += static_cast<size_t>(config.dense_in(l)) *
               static_cast<size_t>(config.dense_out(l)) +
           static_cast<size_t>(config.dense_out(l));
  return off;
}

size_t ModelParams::dense_b_off(int layer) const {
  return dense_w_off(layer) + static_cast<size_t>(config.dense_in(layer)) *
                                  static_cast<size_t>(config.dense_out(layer));
}

void ModelParams::validate() const {
  config.validate();
  if (data.size() != config.param_count())
    throw ShapeError("parameter block size " + std::to_string(data.size()) +
                     " does not match config (" +
                     std::to_string(config.param_count()) + ")");
  const size_t cells =
      static_cast<size_t>(config.input_rows) * static_cast<size_t>(config.input_cols);
  if (feat_mean.size() != cells || feat_std.size() != cells)
    throw ShapeError("normalization tensors do not match the input shape");
  for (float v : data)
    if (!std::isfinite(v)) throw ShapeError("non-finite model parameter");
  for (size_t i = 0; i < cells; ++i)
    if (!std::isfinite(feat_mean[i]) || !(feat_std[i] >= kStdFloor))
      throw ShapeError("invalid normalization statistics");
}

ModelParams build_model(const ModelConfig& config, uint64_t seed) {
  config.validate();
  ModelParams p;
  p.config = config;
  p.data.assign(config.param_count(), 0.0f);
  const size_t cells =
      static_cast<size_t>(config.input_rows) * static_cast<size_t>(config.input_cols);
  p.feat_mean.assign(cells, 0.0f);
  p.feat_std.assign(cells, 1.0f);

  Rng rng(seed);
  auto he_fill = [&](size_t off, size_t count, int fan_in) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (size_t i = 0; i < count; ++i)
      p.data[off + i] = static_cast<float>(rng.uniform(-limit, limit));
  };
  he_fill(p.conv_w_off(), config.conv_weight_count(),
          config.conv_kernel * config.conv_kernel);
  for (int l = 0; l < ModelConfig::kDenseLayers; ++l)
    he_fill(p.dense_w_off(l),
            static_cast<size_t>(config.dense_in(l)) *
                static_cast<size_t>(config.dense_out(l)),
            config.dense_in(l));
  return p;
}

double Activations::loss_for(int label) const {
  const double p = std::max(probs[static_cast<size_t>(label)], 1e-300);
  return -std::log(p);
}

void forward_full(const ModelParams& params, const FeatureGrid& grid,
                  Activations& acts) {
  const ModelConfig& cfg = params.config;
  if (grid.axes != cfg.input_cols ||
      static_cast<int>(grid.size()) != cfg.input_rows * cfg.input_cols)
    throw ShapeError("feature grid is " + std::to_string(grid.size() / std::max(grid.axes, 1)) +
                     "x" + std::to_string(grid.axes) + ", model expects " +
                     std::to_string(cfg.input_rows) + "x" +
                     std::to_string(cfg.input_cols));

  const int R = cfg.input_rows, C = cfg.input_cols, F = cfg.conv_filters;
  const int K = cfg.conv_kernel, PR = cfg.pool_rows(), PC = cfg.pool_cols();
  const int half = K / 2;

  // Standardize the input; z-scores are clamped to tame out-of-range data.
  acts.input.resize(static_cast<size_t>(R * C));
  for (int i = 0; i < R * C; ++i) {
    const size_t si = static_cast<size_t>(i);
    double z = (grid.values[si] - params.feat_mean[si]) / params.feat_std[si];
    acts.input[si] = std::clamp(z, -kStandardizeClamp, kStandardizeClamp);
  }

  // Conv 3x3, same padding, stride 1, single input channel.
  const auto cw = params.conv_w();
  const auto cb = params.conv_b();
  acts.conv_pre.resize(static_cast<size_t>(F * R * C));
  acts.conv_post.resize(acts.conv_pre.size());
  for (int f = 0; f < F; ++f) {
    const size_t wbase = static_cast<size_t>(f * K * K);
    for (int r = 0; r < R; ++r) {
      for (int c = 0; c < C; ++c) {
        double acc = cb[static_cast<size_t>(f)];
        for (int dr = 0; dr < K; ++dr) {
          const int rr = r + dr - half;
          if (rr < 0 || rr >= R) continue;
          for (int dc = 0; dc < K; ++dc) {
            const int cc = c + dc - half;
            if (cc < 0 || cc >= C) continue;
            acc += static_cast<double>(cw[wbase + static_cast<size_t>(dr * K + dc)]) *
                   acts.input[static_cast<size_t>(rr * C + cc)];
          }
        }
        const size_t oi = static_cast<size_t>((f * R + r) * C + c);
        acts.conv_pre[oi] = acc;
        acts.conv_post[oi] = relu(acc);
      }
    }
  }

  // Max pool 2x2 stride 2 (floor); remember which input won each cell.
  acts.pool.resize(static_cast<size_t>(F * PR * PC));
  acts.pool_src.resize(acts.pool.size());
  for (int f = 0; f < F; ++f) {
    for (int pr = 0; pr < PR; ++pr) {
      for (int pc = 0; pc < PC; ++pc) {
        int best = (f * R + pr * 2) * C + pc * 2;
        double hi = acts.conv_post[static_cast<size_t>(best)];
        for (int dr = 0; dr < cfg.pool; ++dr) {
          for (int dc = 0; dc < cfg.pool; ++dc) {
            const int idx = (f * R + pr * 2 + dr) * C + pc * 2 + dc;
            const double v = acts.conv_post[static_cast<size_t>(idx)];
            if (v > hi) {
              hi = v;
              best = idx;
            }
          }
        }
        const size_t pi = static_cast<size_t>((f * PR + pr) * PC + pc);
        acts.pool[pi] = hi;
        acts.pool_src[pi] = best;
      }
    }
  }

  // Dense stack. Layer 3 is the linear head feeding softmax.
  const std::vector<double>* in = &acts.pool;
  for (int l = 0; l < ModelConfig::kDenseLayers; ++l) {
    const int nin = cfg.dense_in(l), nout = cfg.dense_out(l);
    const auto w = params.dense_w(l);
    const auto b = params.dense_b(l);
    auto& pre = acts.dense_pre[static_cast<size_t>(l)];
    auto& post = acts.dense_post[static_cast<size_t>(l)];
    pre.resize(static_cast<size_t>(nout));
    post.resize(static_cast<size_t>(nout));
    for (int i = 0; i < nout; ++i) {
      double acc = b[static_cast<size_t>(i)];
      const size_t row = static_cast<size_t>(i) * static_cast<size_t>(nin);
      for (int j = 0; j < nin; ++j)
        acc += static_cast<double>(w[row + static_cast<size_t>(j)]) *
               (*in)[static_cast<size_t>(j)];
      pre[static_cast<size_t>(i)] = acc;
      post[static_cast<size_t>(i)] =
          l + 1 < ModelConfig::kDenseLayers ? relu(acc) : acc;
    }
    in = &post;
  }

  acts.probs = acts.dense_post[3];
  softmax_inplace(acts.probs);
  acts.dense_post[3] = acts.probs;
}

std::vector<double> forward(const ModelParams& params, const FeatureGrid& grid) {
  Activations acts;
  forward_full(params, grid, acts);
  return acts.probs;
}

double backward_into(const ModelParams& params, const Activations& acts,
                     int label, std::span<double> grads) {
  const ModelConfig& cfg = params.config;
  if (label < 0 || label >= cfg.n_classes)
    throw InvalidInput("label " + std::to_string(label) + " out of range");
  if (grads.size() != params.data.size())
    throw ShapeError("gradient buffer size mismatch");

  const int R = cfg.input_rows, C = cfg.input_cols, F = cfg.conv_filters;
  const int K = cfg.conv_kernel;
  const int half = K / 2;

  // Softmax + cross-entropy collapses to (p - one_hot) at the logits.
  std::vector<double> delta = acts.probs;
  delta[static_cast<size_t>(label)] -= 1.0;

  for (int l = ModelConfig::kDenseLayers - 1; l >= 0; --l) {
    const int nin = cfg.dense_in(l), nout = cfg.dense_out(l);
    const auto w = params.dense_w(l);
    const std::vector<double>& in =
        l == 0 ? acts.pool : acts.dense_post[static_cast<size_t>(l - 1)];
    double* gw = grads.data() + params.dense_w_off(l);
    double* gb = grads.data() + params.dense_b_off(l);

    std::vector<double> din(static_cast<size_t>(nin), 0.0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < nout; ++i) {
      const double d = delta[static_cast<size_t>(i)];
      const size_t row = static_cast<size_t>(i) * static_cast<size_t>(nin);
      for (int j = 0; j < nin; ++j)
        gw[row + static_cast<size_t>(j)] += d * in[static_cast<size_t>(j)];
      gb[i] += d;
    }
    for (int i = 0; i < nout; ++i) {
      const double d = delta[static_cast<size_t>(i)];
      if (d == 0.0) continue;
      const size_t row = static_cast<size_t>(i) * static_cast<size_t>(nin);
      for (int j = 0; j < nin; ++j)
        din[static_cast<size_t>(j)] +=
            static_cast<double>(w[row + static_cast<size_t>(j)]) * d;
    }
    if (l > 0) {
      const auto& pre = acts.dense_pre[static_cast<size_t>(l - 1)];
      delta.resize(static_cast<size_t>(nin));
      for (int j = 0; j < nin; ++j)
        delta[static_cast<size_t>(j)] =
            pre[static_cast<size_t>(j)] > 0.0 ? din[static_cast<size_t>(j)] : 0.0;
    } else {
      delta = std::move(din);  // gradient w.r.t. the pooled activations
    }
  }

  // Un-pool: each pooled cell routes its gradient to the winning conv cell.
  std::vector<double> dconv(static_cast<size_t>(F * R * C), 0.0);
  for (size_t pi = 0; pi < acts.pool.size(); ++pi)
    dconv[static_cast<size_t>(acts.pool_src[pi])] += delta[pi];

  // Through the conv ReLU, then into weight/bias gradients.
  for (size_t i = 0; i < dconv.size(); ++i)
    if (acts.conv_pre[i] <= 0.0) dconv[i] = 0.0;

  double* gcw = grads.data() + params.conv_w_off();
  double* gcb = grads.data() + params.conv_b_off();
#pragma omp parallel for schedule(static)
  for (int f = 0; f < F; ++f) {
    const size_t wbase = static_cast<size_t>(f * K * K);
    double bias_acc = 0.0;
    for (int r = 0; r < R; ++r) {
      for (int c = 0; c < C; ++c) {
        const double d = dconv[static_cast<size_t>((f * R + r) * C + c)];
        if (d == 0.0) continue;
        bias_acc += d;
        for (int dr = 0; dr < K; ++dr) {
          const int rr = r + dr - half;
          if (rr < 0 || rr >= R) continue;
          for (int dc = 0; dc < K; ++dc) {
            const int cc = c + dc - half;
            if (cc < 0 || cc >= C) continue;
            gcw[wbase + static_cast<size_t>(dr * K + dc)] +=
                d * acts.input[static_cast<size_t>(rr * C + cc)];
          }
        }
      }
    }
    gcb[f] += bias_acc;
  }

  return acts.loss_for(label);
}

LossGrads loss_and_grads(const ModelParams& params, const Dataset& ds,
                         std::span<const size_t> batch) {
  if (batch.empty()) throw InvalidInput("gradient batch is empty");
  LossGrads out;
  out.grads.assign(params.data.size(), 0.0);
  Activations acts;
  // Samples accumulate in batch order so results never depend on the
  // parallel split inside backward_into.
  for (size_t idx : batch) {
    forward_full(params, ds.X[idx], acts);
    out.loss += backward_into(params, acts, ds.y[idx], out.grads);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv;
  for (auto& g : out.grads) g *= inv;
  return out;
}

void TrainConfig::validate() const {
  if (epochs <= 0) throw ConfigError("epochs must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size <= 0) throw ConfigError("batch size must be positive");
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw ConfigError("val fraction must lie in (0, 1)");
}

namespace {

// Mean loss and accuracy over a set of sample indices.
std::pair<double, double> measure(const ModelParams& params, const Dataset& ds,
                                  std::span<const size_t> idx) {
  if (idx.empty()) return {0.0, 0.0};
  double loss = 0.0;
  long hits = 0;
  Activations acts;
  for (size_t i : idx) {
    forward_full(params, ds.X[i], acts);
    loss += acts.loss_for(ds.y[i]);
    if (predict_label(acts.probs) == ds.y[i]) ++hits;
  }
  return {loss / static_cast<double>(idx.size()),
          static_cast<double>(hits) / static_cast<double>(idx.size())};
}

}  // namespace

TrainResult train(const Dataset& ds, const TrainConfig& tc,
                  const ModelConfig& mc) {
  tc.validate();
  mc.validate();
  ds.validate();
  if (ds.size() == 0) throw DataError("training dataset is empty");

  // Per-class index pools; every class must be represented.
  std::vector<std::vector<size_t>> by_class(static_cast<size_t>(mc.n_classes));
  for (size_t i = 0; i < ds.size(); ++i) {
    if (ds.y[i] >= mc.n_classes)
      throw DataError("label " + std::to_string(ds.y[i]) +
                      " exceeds n_classes " + std::to_string(mc.n_classes));
    by_class[static_cast<size_t>(ds.y[i])].push_back(i);
  }
  for (int c = 0; c < mc.n_classes; ++c)
    if (by_class[static_cast<size_t>(c)].empty())
      throw DataError("class " + std::to_string(c) +
                      " has no samples; all classes must be present");

  Rng rng(tc.seed);
  std::vector<size_t> train_idx, val_idx;
  for (auto& pool : by_class) {
    rng.shuffle(pool);
    size_t n_val = static_cast<size_t>(
        std::llround(tc.val_fraction * static_cast<double>(pool.size())));
    if (n_val >= pool.size()) n_val = pool.size() - 1;
    val_idx.insert(val_idx.end(), pool.begin(), pool.begin() + static_cast<long>(n_val));
    train_idx.insert(train_idx.end(), pool.begin() + static_cast<long>(n_val), pool.end());
  }

  ModelParams params = build_model(mc, rng.next_u64());

  // Fit input standardization on the training split only.
  const size_t cells = params.feat_mean.size();
  std::vector<double> mean(cells, 0.0), var(cells, 0.0);
  for (size_t i : train_idx)
    for (size_t k = 0; k < cells; ++k) mean[k] += ds.X[i].values[k];
  for (auto& v : mean) v /= static_cast<double>(train_idx.size());
  for (size_t i : train_idx)
    for (size_t k = 0; k < cells; ++k) {
      const double d = ds.X[i].values[k] - mean[k];
      var[k] += d * d;
    }
  for (size_t k = 0; k < cells; ++k) {
    params.feat_mean[k] = static_cast<float>(mean[k]);
    params.feat_std[k] = std::max(
        kStdFloor,
        static_cast<float>(std::sqrt(var[k] / static_cast<double>(train_idx.size()))));
  }

  Adam opt(tc.learning_rate, tc.beta1, tc.beta2, tc.epsilon, params.data.size());
  TrainResult result;
  result.params = params;
  result.n_train = train_idx.size();
  result.n_val = val_idx.size();
  double best_val = -1.0;

  std::vector<size_t> order = train_idx;
  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    rng.shuffle(order);
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(tc.batch_size)) {
      const size_t len =
          std::min(static_cast<size_t>(tc.batch_size), order.size() - start);
      const auto lg = loss_and_grads(params, ds,
                                     std::span(order).subspan(start, len));
      opt.step(params.data, lg.grads);
    }

    EpochStats stats;
    stats.epoch = epoch;
    std::tie(stats.train_loss, stats.train_acc) = measure(params, ds, train_idx);
    std::tie(stats.val_loss, stats.val_acc) = measure(params, ds, val_idx);
    result.history.push_back(stats);

    if (stats.val_acc > best_val) {  // ties keep the earlier epoch
      best_val = stats.val_acc;
      result.params = params;
      result.best_epoch = epoch;
    }
  }
  return result;
}

void save_history_csv(const std::vector<EpochStats>& history, std::ostream& out) {
  out << "epoch,train_loss,train_acc,val_loss,val_acc\n";
  out.precision(8);
  for (const auto& e : history)
    out << e.epoch << ',' << e.train_loss << ',' << e.train_acc << ','
        << e.val_loss << ',' << e.val_acc << "\n";
}

void save_history_csv(const std::vector<EpochStats>& history,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  save_history_csv(history, out);
}

int predict_label(std::span<const double> probs) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(probs.size()); ++i)
    if (probs[static_cast<size_t>(i)] > probs[static_cast<size_t>(best)]) best = i;
  return best;
}

EvalReport score_predictions(std::span<const int> truth,
                             std::span<const int> predicted, int n_classes) {
  if (truth.size() != predicted.size() || truth.empty())
    throw InvalidInput("prediction scoring needs matching non-empty vectors");
  EvalReport report;
  report.total = truth.size();
  report.confusion.assign(static_cast<size_t>(n_classes),
                          std::vector<long>(static_cast<size_t>(n_classes), 0));
  long hits = 0;
  for (size_t i = 0; i < truth.size(); ++i) {
    report.confusion[static_cast<size_t>(truth[i])][static_cast<size_t>(predicted[i])]++;
    if (truth[i] == predicted[i]) ++hits;
  }
  report.accuracy = static_cast<double>(hits) / static_cast<double>(report.total);
  report.precision.assign(static_cast<size_t>(n_classes), 0.0);
  report.recall.assign(static_cast<size_t>(n_classes), 0.0);
  for (int c = 0; c < n_classes; ++c) {
    long row = 0, col = 0;
    for (int k = 0; k < n_classes; ++k) {
      row += report.confusion[static_cast<size_t>(c)][static_cast<size_t>(k)];
      col += report.confusion[static_cast<size_t>(k)][static_cast<size_t>(c)];
    }
    const long diag = report.confusion[static_cast<size_t>(c)][static_cast<size_t>(c)];
    report.recall[static_cast<size_t>(c)] =
        row > 0 ? static_cast<double>(diag) / static_cast<double>(row) : 0.0;
    report.precision[static_cast<size_t>(c)] =
        col > 0 ? static_cast<double>(diag) / static_cast<double>(col) : 0.0;
  }
  return report;
}

EvalReport evaluate(const ModelParams& params, const Dataset& ds) {
  ds.validate();
  if (ds.size() == 0) throw DataError("evaluation dataset is empty");
  std::vector<int> pred(ds.size());
  for (size_t i = 0; i < ds.size(); ++i)
    pred[i] = predict_label(forward(params, ds.X[i]));
  return score_predictions(ds.y, pred, params.config.n_classes);
}

// --- GMDL serialization ------------------------------------------------------

void save_model(const ModelParams& params, std::ostream& out) {
  params.validate();
  binio::Writer w(out);
  w.magic("GMDL");
  w.u16(kModelVersion);
  const ModelConfig& c = params.config;
  w.u16(static_cast<uint16_t>(c.input_rows));
  w.u16(static_cast<uint16_t>(c.input_cols));
  w.u16(static_cast<uint16_t>(c.conv_filters));
  w.u16(static_cast<uint16_t>(c.conv_kernel));
  w.u16(static_cast<uint16_t>(c.pool));
  w.u16(static_cast<uint16_t>(c.dense_units.size()));
  for (int u : c.dense_units) w.u16(static_cast<uint16_t>(u));
  w.u16(static_cast<uint16_t>(c.n_classes));
  for (float v : params.feat_mean) w.f32(v);
  for (float v : params.feat_std) w.f32(v);
  for (float v : params.data) w.f32(v);
  if (!out) throw DataError("failed writing model file");
}

void save_model(const ModelParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  save_model(params, out);
}

ModelParams load_model(std::istream& in, const std::string& context) {
  binio::Reader r(in, context, /*model_file=*/true);
  r.expect_magic("GMDL");
  const uint16_t version = r.u16();
  if (version != kModelVersion)
    throw ModelFormatError(context + ": unsupported model version " +
                           std::to_string(version));
  ModelParams p;
  ModelConfig& c = p.config;
  c.input_rows = r.u16();
  c.input_cols = r.u16();
  c.conv_filters = r.u16();
  c.conv_kernel = r.u16();
  c.pool = r.u16();
  const uint16_t n_dense = r.u16();
  if (n_dense != c.dense_units.size())
    throw ModelFormatError(context + ": expected " +
                           std::to_string(c.dense_units.size()) +
                           " dense layers, file has " + std::to_string(n_dense));
  for (auto& u : c.dense_units) u = r.u16();
  c.n_classes = r.u16();
  try {
    c.validate();
  } catch (const Error& e) {
    throw ModelFormatError(context + ": " + e.what());
  }

  const size_t cells =
      static_cast<size_t>(c.input_rows) * static_cast<size_t>(c.input_cols);
  p.feat_mean.resize(cells);
  p.feat_std.resize(cells);
  for (auto& v : p.feat_mean) v = r.f32();
  for (auto& v : p.feat_std) v = r.f32();
  p.data.resize(c.param_count());
  for (auto& v : p.data) v = r.f32();
  if (!r.at_eof())
    throw ModelFormatError(context + ": trailing bytes after parameter block");
  try {
    p.validate();
  } catch (const Error& e) {
    throw ModelFormatError(context + ": " + e.what());
  }
  return p;
}

ModelParams load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError("cannot open model file '" + path + "'");
  return load_model(in, path);
}

}  // namespace gait
