#include "gait/quant.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "gait/binio.hpp"
#include "gait/errors.hpp"

namespace gait {
namespace {

constexpr uint16_t kQModelVersion = 1;
constexpr size_t kCalibrationMin = 32;
constexpr double kMinRangeSpan = 1e-6;
constexpr double kStandardizeClamp = 6.0;  // must match the float path

int8_t sat8(int64_t v) {
  return static_cast<int8_t>(std::clamp<int64_t>(v, -128, 127));
}

// Asymmetric int8 parameters for a calibrated [lo, hi] range containing 0.
void activation_qparams(double lo, double hi, double& scale, int& zp) {
  scale = (hi - lo) / 255.0;
  zp = static_cast<int>(std::llround(-128.0 - lo / scale));
  assert(zp >= -128 && zp <= 127);
}

QuantTensor quantize_weights(std::span<const float> w) {
  QuantTensor t;
  double maxabs = 0.0;
  for (float v : w) maxabs = std::max(maxabs, std::abs(static_cast<double>(v)));
  t.scale = maxabs > 0.0 ? maxabs / 127.0 : 1.0;
  t.zero_point = 0;
  t.values.resize(w.size());
  for (size_t i = 0; i < w.size(); ++i)
    t.values[i] = sat8(std::llround(static_cast<double>(w[i]) / t.scale));
  return t;
}

std::vector<int32_t> quantize_bias(std::span<const float> b, double scale) {
  std::vector<int32_t> q(b.size());
  for (size_t i = 0; i < b.size(); ++i) {
    const double v = static_cast<double>(b[i]) / scale;
    q[i] = static_cast<int32_t>(
        std::clamp<double>(std::llround(v), std::numeric_limits<int32_t>::min(),
                           std::numeric_limits<int32_t>::max()));
  }
  return q;
}

void widen(double& lo, double& hi) {
  lo = std::min(lo, 0.0);
  hi = std::max(hi, 0.0);
  if (hi - lo < kMinRangeSpan) hi = lo + kMinRangeSpan;
}

void track(std::span<const double> values, double& lo, double& hi) {
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
}

void softmax(std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - m);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

// Same expression as the float path so both quantize identical inputs.
std::vector<int8_t> quantize_input(const QuantModel& qm, const FeatureGrid& grid) {
  const ModelConfig& cfg = qm.config;
  if (grid.axes != cfg.input_cols ||
      static_cast<int>(grid.size()) != cfg.input_rows * cfg.input_cols)
    throw ShapeError("feature grid is " +
                     std::to_string(grid.size() / std::max(grid.axes, 1)) + "x" +
                     std::to_string(grid.axes) + ", model expects " +
                     std::to_string(cfg.input_rows) + "x" +
                     std::to_string(cfg.input_cols));
  std::vector<int8_t> q(grid.size());
  for (size_t i = 0; i < grid.size(); ++i) {
    double z = (grid.values[i] - qm.feat_mean[i]) / qm.feat_std[i];
    z = std::clamp(z, -kStandardizeClamp, kStandardizeClamp);
    q[i] = sat8(std::llround(z / qm.input_scale) + qm.input_zp);
  }
  return q;
}

// Requantize accumulators to int8; the lower clamp at the output zero point
// is the fused ReLU (real 0 maps exactly onto out_zp).
std::vector<int8_t> requant_relu(std::span<const int32_t> acc, const QuantLayer& l) {
  std::vector<int8_t> out(acc.size());
  for (size_t i = 0; i < acc.size(); ++i) {
    const int64_t q = apply_multiplier(acc[i], l.requant) + l.out_zp;
    out[i] = static_cast<int8_t>(std::clamp<int64_t>(q, l.out_zp, 127));
  }
  return out;
}

// Shared integer core: int8 activations between layers, int32 logits out.
void q_forward_core(const QuantModel& qm, const FeatureGrid& grid,
                    std::vector<int32_t>& logits_acc) {
  qm.validate();
  const ModelConfig& cfg = qm.config;
  const int R = cfg.input_rows, C = cfg.input_cols, F = cfg.conv_filters;
  const int P = cfg.pool, PR = cfg.pool_rows(), PC = cfg.pool_cols();

  const std::vector<int8_t> input = quantize_input(qm, grid);
  const std::vector<int32_t> conv_acc =
      q_conv_acc(cfg, qm.conv.weights, qm.conv.bias, input, qm.input_zp);
  const std::vector<int8_t> conv = requant_relu(conv_acc, qm.conv);

  // Maxpool 2x2 stride 2 (floor); max commutes with the affine dequant map.
  std::vector<int8_t> buf(static_cast<size_t>(F * PR * PC));
  for (int f = 0; f < F; ++f)
    for (int pr = 0; pr < PR; ++pr)
      for (int pc = 0; pc < PC; ++pc) {
        int8_t best = std::numeric_limits<int8_t>::min();
        for (int dr = 0; dr < P; ++dr)
          for (int dc = 0; dc < P; ++dc) {
            const int r = pr * P + dr, c = pc * P + dc;
            best = std::max(best, conv[static_cast<size_t>(f * R * C + r * C + c)]);
          }
        buf[static_cast<size_t>(f * PR * PC + pr * PC + pc)] = best;
      }

  // Dense stack; the head keeps its int32 accumulators for dequantization.
  int in_zp = qm.conv.out_zp;
  for (int l = 0; l + 1 < ModelConfig::kDenseLayers; ++l) {
    const QuantLayer& dl = qm.dense[static_cast<size_t>(l)];
    buf = requant_relu(q_dense_acc(dl.weights, dl.bias, buf, in_zp), dl);
    in_zp = dl.out_zp;
  }
  const QuantLayer& head = qm.dense[ModelConfig::kDenseLayers - 1];
  logits_acc = q_dense_acc(head.weights, head.bias, buf, in_zp);
}

void write_qlayer(binio::Writer& w, const QuantLayer& l) {
  w.f64(l.weights.scale);
  w.f64(l.out_scale);
  w.i32(l.out_zp);
  w.raw(l.weights.values.data(), l.weights.values.size());
  for (int32_t b : l.bias) w.i32(b);
}

void read_qlayer(binio::Reader& r, QuantLayer& l, size_t n_weights, size_t n_bias) {
  l.weights.scale = r.f64();
  l.out_scale = r.f64();
  l.out_zp = r.i32();
  l.weights.zero_point = 0;
  l.weights.values.resize(n_weights);
  r.raw(l.weights.values.data(), n_weights);
  l.bias.resize(n_bias);
  for (auto& b : l.bias) b = r.i32();
}

}  // namespace

double RequantMultiplier::reconstruct() const {
  return static_cast<double>(mantissa) * std::ldexp(1.0, exponent - 31);
}

RequantMultiplier make_multiplier(double real) {
  if (!(real > 0.0) || !std::isfinite(real))
    throw ConfigError("requantization multiplier must be positive and finite");
  int exp = 0;
  const double frac = std::frexp(real, &exp);  // frac in [0.5, 1)
  int64_t mant = std::llround(std::ldexp(frac, 31));
  if (mant == (int64_t{1} << 31)) {  // frac rounded up to 1.0
    mant >>= 1;
    ++exp;
  }
  RequantMultiplier m;
  m.mantissa = static_cast<int32_t>(mant);
  m.exponent = exp;
  return m;
}

int64_t rne_shift(int64_t value, int shift) {
  if (shift <= 0) return value << -shift;
  if (shift >= 63) return 0;
  const int64_t base = value >> shift;  // floor
  const int64_t rem = value - (base << shift);
  const int64_t half = int64_t{1} << (shift - 1);
  if (rem > half || (rem == half && (base & 1))) return base + 1;
  return base;
}

int64_t apply_multiplier(int64_t acc, const RequantMultiplier& m) {
  const int64_t prod = acc * static_cast<int64_t>(m.mantissa);
  const int shift = 31 - m.exponent;
  if (shift >= 0) return rne_shift(prod, shift);
  // Saturating left shift; only reachable with pathological scale ratios.
  const int k = -shift;
  if (k >= 16 || std::abs(prod) > (std::numeric_limits<int64_t>::max() >> k))
    return prod < 0 ? std::numeric_limits<int32_t>::min()
                    : std::numeric_limits<int32_t>::max();
  return prod << k;
}

std::vector<int32_t> q_conv_acc(const ModelConfig& cfg, const QuantTensor& w,
                                std::span<const int32_t> bias,
                                std::span<const int8_t> input, int input_zp) {
  const int R = cfg.input_rows, C = cfg.input_cols, F = cfg.conv_filters;
  const int K = cfg.conv_kernel;
  const int half = K / 2;
  if (input.size() != static_cast<size_t>(R * C) ||
      w.values.size() != static_cast<size_t>(F * K * K) ||
      bias.size() != static_cast<size_t>(F))
    throw ShapeError("conv kernel operands do not match the configured shape");

  std::vector<int32_t> acc(static_cast<size_t>(F * R * C));
  for (int f = 0; f < F; ++f) {
    const size_t wbase = static_cast<size_t>(f * K * K);
    for (int r = 0; r < R; ++r) {
      for (int c = 0; c < C; ++c) {
        // Same padding: padded cells hold exactly input_zp and drop out.
        int32_t a = bias[static_cast<size_t>(f)];
        for (int dr = 0; dr < K; ++dr) {
          const int rr = r + dr - half;
          if (rr < 0 || rr >= R) continue;
          for (int dc = 0; dc < K; ++dc) {
            const int cc = c + dc - half;
            if (cc < 0 || cc >= C) continue;
            a += static_cast<int32_t>(w.values[wbase + static_cast<size_t>(dr * K + dc)]) *
                 (static_cast<int32_t>(input[static_cast<size_t>(rr * C + cc)]) - input_zp);
          }
        }
        acc[static_cast<size_t>(f * R * C + r * C + c)] = a;
      }
    }
  }
  return acc;
}

std::vector<int32_t> q_dense_acc(const QuantTensor& w,
                                 std::span<const int32_t> bias,
                                 std::span<const int8_t> input, int input_zp) {
  const size_t n_in = input.size(), n_out = bias.size();
  if (w.values.size() != n_in * n_out)
    throw ShapeError("dense kernel operands do not match: " +
                     std::to_string(w.values.size()) + " weights for " +
                     std::to_string(n_out) + "x" + std::to_string(n_in));
  std::vector<int32_t> acc(n_out);
  for (size_t o = 0; o < n_out; ++o) {
    int32_t a = bias[o];
    const size_t row = o * n_in;
    for (size_t i = 0; i < n_in; ++i)
      a += static_cast<int32_t>(w.values[row + i]) *
           (static_cast<int32_t>(input[i]) - input_zp);
    acc[o] = a;
  }
  return acc;
}

ActivationRanges calibrate(const ModelParams& params,
                           const std::vector<FeatureGrid>& samples) {
  params.validate();
  if (samples.size() < kCalibrationMin)
    throw InvalidInput("calibration requires at least " +
                       std::to_string(kCalibrationMin) + " samples, got " +
                       std::to_string(samples.size()));
  constexpr double inf = std::numeric_limits<double>::infinity();
  ActivationRanges r;
  r.input_lo = r.conv_pre_lo = r.conv_lo = inf;
  r.input_hi = r.conv_pre_hi = r.conv_hi = -inf;
  r.hidden_lo.fill(inf);
  r.hidden_hi.fill(-inf);
  Activations acts;
  for (const FeatureGrid& g : samples) {
    forward_full(params, g, acts);
    track(acts.input, r.input_lo, r.input_hi);
    track(acts.conv_pre, r.conv_pre_lo, r.conv_pre_hi);
    track(acts.conv_post, r.conv_lo, r.conv_hi);
    for (int l = 0; l < 3; ++l)
      track(acts.dense_post[static_cast<size_t>(l)],
            r.hidden_lo[static_cast<size_t>(l)], r.hidden_hi[static_cast<size_t>(l)]);
  }
  widen(r.input_lo, r.input_hi);
  widen(r.conv_pre_lo, r.conv_pre_hi);
  widen(r.conv_lo, r.conv_hi);
  for (int l = 0; l < 3; ++l)
    widen(r.hidden_lo[static_cast<size_t>(l)], r.hidden_hi[static_cast<size_t>(l)]);
  return r;
}

void QuantModel::validate() const {
  config.validate();
  const size_t cells =
      static_cast<size_t>(config.input_rows) * static_cast<size_t>(config.input_cols);
  if (feat_mean.size() != cells || feat_std.size() != cells)
    throw ConfigError("normalization tensors do not match the input shape");
  if (!(input_scale > 0.0) || input_zp < -128 || input_zp > 127)
    throw ConfigError("invalid input quantization parameters");
  auto check = [&](const QuantLayer& l, size_t n_w, size_t n_b, bool head) {
    if (l.weights.values.size() != n_w || l.bias.size() != n_b)
      throw ConfigError("quantized tensor sizes do not match the architecture");
    if (!(l.weights.scale > 0.0) || l.weights.zero_point != 0)
      throw ConfigError("weight tensors must be symmetric with positive scale");
    if (!(l.out_scale > 0.0) || l.out_zp < -128 || l.out_zp > 127)
      throw ConfigError("invalid activation quantization parameters");
    if (!head && (l.requant.mantissa < (1 << 30)))
      throw ConfigError("requantization multiplier is not normalized");
  };
  check(conv, config.conv_weight_count(), static_cast<size_t>(config.conv_filters),
        false);
  for (int l = 0; l < ModelConfig::kDenseLayers; ++l)
    check(dense[static_cast<size_t>(l)],
          static_cast<size_t>(config.dense_in(l)) * static_cast<size_t>(config.dense_out(l)),
          static_cast<size_t>(config.dense_out(l)), l == ModelConfig::kDenseLayers - 1);
}

QuantModel quantize(const ModelParams& params, const ActivationRanges& ranges) {
  params.validate();
  auto check_range = [](double lo, double hi, const char* what) {
    if (!(lo <= 0.0) || !(hi >= 0.0) || !(hi - lo > 0.0) || !std::isfinite(hi - lo))
      throw InvalidInput(std::string("activation range for ") + what +
                         " must be finite, include zero, and have positive width");
  };
  check_range(ranges.input_lo, ranges.input_hi, "the input");
  check_range(ranges.conv_lo, ranges.conv_hi, "the conv layer");
  for (int l = 0; l < 3; ++l)
    check_range(ranges.hidden_lo[static_cast<size_t>(l)],
                ranges.hidden_hi[static_cast<size_t>(l)], "a dense layer");

  QuantModel qm;
  qm.config = params.config;
  qm.feat_mean = params.feat_mean;
  qm.feat_std = params.feat_std;
  activation_qparams(ranges.input_lo, ranges.input_hi, qm.input_scale, qm.input_zp);

  qm.conv.weights = quantize_weights(params.conv_w());
  qm.conv.bias = quantize_bias(params.conv_b(), qm.input_scale * qm.conv.weights.scale);
  activation_qparams(ranges.conv_lo, ranges.conv_hi, qm.conv.out_scale, qm.conv.out_zp);
  qm.conv.requant = make_multiplier(qm.input_scale * qm.conv.weights.scale /
                                    qm.conv.out_scale);

  double in_scale = qm.conv.out_scale;
  for (int l = 0; l < ModelConfig::kDenseLayers; ++l) {
    QuantLayer& dl = qm.dense[static_cast<size_t>(l)];
    dl.weights = quantize_weights(params.dense_w(l));
    const double bias_scale = in_scale * dl.weights.scale;
    dl.bias = quantize_bias(params.dense_b(l), bias_scale);
    if (l < ModelConfig::kDenseLayers - 1) {
      activation_qparams(ranges.hidden_lo[static_cast<size_t>(l)],
                         ranges.hidden_hi[static_cast<size_t>(l)], dl.out_scale,
                         dl.out_zp);
      dl.requant = make_multiplier(bias_scale / dl.out_scale);
      in_scale = dl.out_scale;
    } else {
      // Head logits stay int32; out_scale is the dequantization factor.
      dl.out_scale = bias_scale;
      dl.out_zp = 0;
    }
  }
  return qm;
}

std::vector<double> q_logits(const QuantModel& qm, const FeatureGrid& grid) {
  std::vector<int32_t> acc;
  q_forward_core(qm, grid, acc);
  const double s = qm.dense[3].out_scale;
  std::vector<double> logits(acc.size());
  for (size_t i = 0; i < acc.size(); ++i) logits[i] = s * acc[i];
  return logits;
}

std::vector<double> q_forward(const QuantModel& qm, const FeatureGrid& grid) {
  std::vector<double> probs = q_logits(qm, grid);
  softmax(probs);
  return probs;
}

EvalReport evaluate_quantized(const QuantModel& qm, const Dataset& ds) {
  ds.validate();
  std::vector<int> truth(ds.size()), pred(ds.size());
  for (size_t i = 0; i < ds.size(); ++i) {
    truth[i] = ds.y[i];
    pred[i] = predict_label(q_forward(qm, ds.X[i]));
  }
  return score_predictions(truth, pred, qm.config.n_classes);
}

MemoryReport memory_report(const QuantModel& qm) {
  qm.validate();
  const ModelConfig& c = qm.config;
  const size_t cells =
      static_cast<size_t>(c.input_rows) * static_cast<size_t>(c.input_cols);
  const size_t conv_out = static_cast<size_t>(c.conv_filters) *
                          static_cast<size_t>(c.input_rows) *
                          static_cast<size_t>(c.input_cols);

  MemoryReport rep;
  rep.weight_bytes = qm.conv.weights.values.size();
  rep.bias_bytes = qm.conv.bias.size() * 4;
  for (const QuantLayer& l : qm.dense) {
    rep.weight_bytes += l.weights.values.size();
    rep.bias_bytes += l.bias.size() * 4;
  }
  std::ostringstream blob(std::ios::binary);
  save_qmodel(qm, blob);
  rep.flash_bytes = blob.str().size();
  rep.metadata_bytes = rep.flash_bytes - rep.weight_bytes - rep.bias_bytes;

  rep.schedule = {
      {"quantize_input", cells * 4, cells},
      {"conv3x3_relu", cells, conv_out},
      {"maxpool2x2", conv_out, static_cast<size_t>(c.flatten_len())},
      {"dense0_relu", static_cast<size_t>(c.dense_in(0)),
       static_cast<size_t>(c.dense_out(0))},
      {"dense1_relu", static_cast<size_t>(c.dense_in(1)),
       static_cast<size_t>(c.dense_out(1))},
      {"dense2_relu", static_cast<size_t>(c.dense_in(2)),
       static_cast<size_t>(c.dense_out(2))},
      {"dense_head", static_cast<size_t>(c.dense_in(3)),
       static_cast<size_t>(c.n_classes) * 4},
      {"softmax", static_cast<size_t>(c.n_classes) * 4,
       static_cast<size_t>(c.n_classes) * 4},
  };
  for (const MemoryStage& s : rep.schedule)
    rep.arena_bytes = std::max(rep.arena_bytes, s.in_bytes + s.out_bytes);
  return rep;
}

std::string memory_report_json(const MemoryReport& report) {
  nlohmann::json j;
  j["flash_bytes"] = report.flash_bytes;
  j["weight_bytes"] = report.weight_bytes;
  j["bias_bytes"] = report.bias_bytes;
  j["metadata_bytes"] = report.metadata_bytes;
  j["arena_bytes"] = report.arena_bytes;
  j["schedule"] = nlohmann::json::array();
  for (const MemoryStage& s : report.schedule)
    j["schedule"].push_back({{"stage", s.name},
                             {"in_bytes", s.in_bytes},
                             {"out_bytes", s.out_bytes},
                             {"live_bytes", s.in_bytes + s.out_bytes}});
  return j.dump(2);
}

AccuracyDelta accuracy_delta(const ModelParams& params, const QuantModel& qm,
                             const Dataset& ds) {
  ds.validate();
  if (ds.size() == 0) throw InvalidInput("accuracy_delta requires a non-empty set");
  std::vector<int> truth(ds.size()), fpred(ds.size()), qpred(ds.size());
  AccuracyDelta out;
  size_t agree = 0;
  Activations acts;
  for (size_t i = 0; i < ds.size(); ++i) {
    truth[i] = ds.y[i];
    forward_full(params, ds.X[i], acts);
    fpred[i] = predict_label(acts.probs);
    const std::vector<double> ql = q_logits(qm, ds.X[i]);
    std::vector<double> qp = ql;
    softmax(qp);
    qpred[i] = predict_label(qp);
    if (fpred[i] == qpred[i]) ++agree;
    for (size_t k = 0; k < ql.size(); ++k)
      out.max_logit_dev =
          std::max(out.max_logit_dev, std::abs(acts.dense_pre[3][k] - ql[k]));
  }
  const int n = qm.config.n_classes;
  out.float_acc = score_predictions(truth, fpred, n).accuracy;
  out.int8_acc = score_predictions(truth, qpred, n).accuracy;
  out.delta = out.float_acc - out.int8_acc;
  out.agreement = static_cast<double>(agree) / static_cast<double>(ds.size());
  return out;
}

void save_qmodel(const QuantModel& qm, std::ostream& out) {
  qm.validate();
  binio::Writer w(out);
  w.magic("GMDQ");
  w.u16(kQModelVersion);
  const ModelConfig& c = qm.config;
  w.u16(static_cast<uint16_t>(c.input_rows));
  w.u16(static_cast<uint16_t>(c.input_cols));
  w.u16(static_cast<uint16_t>(c.conv_filters));
  w.u16(static_cast<uint16_t>(c.conv_kernel));
  w.u16(static_cast<uint16_t>(c.pool));
  w.u16(static_cast<uint16_t>(c.dense_units.size()));
  for (int u : c.dense_units) w.u16(static_cast<uint16_t>(u));
  w.u16(static_cast<uint16_t>(c.n_classes));
  for (float v : qm.feat_mean) w.f32(v);
  for (float v : qm.feat_std) w.f32(v);
  w.f64(qm.input_scale);
  w.i32(qm.input_zp);
  write_qlayer(w, qm.conv);
  for (const QuantLayer& l : qm.dense) write_qlayer(w, l);
  if (!out) throw DataError("failed writing quantized model file");
}

void save_qmodel(const QuantModel& qm, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  save_qmodel(qm, out);
}

QuantModel load_qmodel(std::istream& in, const std::string& context) {
  binio::Reader r(in, context, /*model_file=*/true);
  r.expect_magic("GMDQ");
  const uint16_t version = r.u16();
  if (version != kQModelVersion)
    throw ModelFormatError(context + ": unsupported quantized model version " +
                           std::to_string(version));
  QuantModel qm;
  ModelConfig& c = qm.config;
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
  qm.feat_mean.resize(cells);
  qm.feat_std.resize(cells);
  for (auto& v : qm.feat_mean) v = r.f32();
  for (auto& v : qm.feat_std) v = r.f32();
  qm.input_scale = r.f64();
  qm.input_zp = r.i32();
  read_qlayer(r, qm.conv, c.conv_weight_count(),
              static_cast<size_t>(c.conv_filters));
  for (int l = 0; l < ModelConfig::kDenseLayers; ++l)
    read_qlayer(r, qm.dense[static_cast<size_t>(l)],
                static_cast<size_t>(c.dense_in(l)) * static_cast<size_t>(c.dense_out(l)),
                static_cast<size_t>(c.dense_out(l)));
  if (!r.at_eof())
    throw ModelFormatError(context + ": trailing bytes after tensor block");

  // Multipliers are derived state; rebuild them from the stored scales.
  try {
    qm.conv.requant =
        make_multiplier(qm.input_scale * qm.conv.weights.scale / qm.conv.out_scale);
    double in_scale = qm.conv.out_scale;
    for (int l = 0; l + 1 < ModelConfig::kDenseLayers; ++l) {
      QuantLayer& dl = qm.dense[static_cast<size_t>(l)];
      dl.requant = make_multiplier(in_scale * dl.weights.scale / dl.out_scale);
      in_scale = dl.out_scale;
    }
    qm.validate();
  } catch (const Error& e) {
    throw ModelFormatError(context + ": " + e.what());
  }
  return qm;
}

QuantModel load_qmodel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError("cannot open quantized model file '" + path + "'");
  return load_qmodel(in, path);
}

}  // namespace gait
