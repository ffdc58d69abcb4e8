// gait: command-line front end for the identification pipeline.
//
// Subcommands cover the full path from raw IMU CSV to streaming
// identification: synth, convert-whugait, segment, featurize, train, eval,
// quantize, report-memory, stream, bench.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 model error.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gait/batch.hpp"
#include "gait/cnn.hpp"
#include "gait/dataset.hpp"
#include "gait/engine.hpp"
#include "gait/errors.hpp"
#include "gait/imu.hpp"
#include "gait/quant.hpp"
#include "gait/segmentation.hpp"
#include "gait/spectral.hpp"

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// shared helpers

// Peeks at the magic bytes to tell a float model from a quantized one.
bool file_is_quantized(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw gait::DataError("cannot open '" + path + "'");
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  if (in.gcount() != 4)
    throw gait::ModelFormatError("'" + path + "': truncated model file");
  const std::string m(magic, 4);
  if (m == "GMDQ") return true;
  if (m == "GMDL") return false;
  throw gait::ModelFormatError("'" + path + "': unrecognized model magic '" +
                               m + "'");
}

struct LoadedModel {
  std::optional<gait::ModelParams> fp;
  std::optional<gait::QuantModel> q;

  bool quantized() const { return q.has_value(); }
  const gait::ModelConfig& config() const {
    return q ? q->config : fp->config;
  }
};

LoadedModel load_any_model(const std::string& path) {
  LoadedModel m;
  if (file_is_quantized(path))
    m.q = gait::load_qmodel(path);
  else
    m.fp = gait::load_model(path);
  return m;
}

gait::Dataset load_features(const std::string& path) {
  gait::Dataset ds = gait::load_feature_csv(path);
  ds.validate();
  if (ds.size() == 0) throw gait::DataError("'" + path + "': empty dataset");
  return ds;
}

int infer_classes(const gait::Dataset& ds) {
  int hi = 0;
  for (int label : ds.y) hi = std::max(hi, label);
  return hi + 1;
}

void print_eval_report(const gait::EvalReport& report, std::ostream& out) {
  char line[64];
  std::snprintf(line, sizeof line, "accuracy %.3f\n", report.accuracy);
  out << line << "samples " << report.total << "\n";
  const size_t n = report.confusion.size();
  out << "confusion (rows true, cols predicted):\n";
  for (size_t i = 0; i < n; ++i) {
    out << "  ";
    for (size_t j = 0; j < n; ++j)
      out << report.confusion[i][j] << (j + 1 < n ? " " : "\n");
  }
  out << "per-class precision / recall:\n";
  for (size_t i = 0; i < n; ++i) {
    std::snprintf(line, sizeof line, "  class %2zu  %.3f  %.3f\n", i,
                  report.precision[i], report.recall[i]);
    out << line;
  }
}

struct LatencyStats {
  double mean_ms = 0.0, p50_ms = 0.0, p95_ms = 0.0, max_ms = 0.0;
};

LatencyStats summarize_ms(std::vector<double> ms) {
  LatencyStats s;
  if (ms.empty()) return s;
  double sum = 0.0;
  for (double v : ms) sum += v;
  s.mean_ms = sum / static_cast<double>(ms.size());
  std::sort(ms.begin(), ms.end());
  auto at = [&](double frac) {
    const size_t i = std::min(
        ms.size() - 1, static_cast<size_t>(frac * static_cast<double>(ms.size())));
    return ms[i];
  };
  s.p50_ms = at(0.50);
  s.p95_ms = at(0.95);
  s.max_ms = ms.back();
  return s;
}

void print_latency(const char* name, const LatencyStats& s, size_t count) {
  std::printf("%-16s mean %8.4f ms  p50 %8.4f ms  p95 %8.4f ms  max %8.4f ms  (n=%zu)\n",
              name, s.mean_ms, s.p50_ms, s.p95_ms, s.max_ms, count);
}

// ---------------------------------------------------------------------------
// synth

struct SynthOpts {
  std::string kind = "features";
  std::string out = "synth";
  int classes = 24;
  int axes = 6;
  int train_windows = 160;
  int test_windows = 40;
  int windows_per_class = 200;
  int class_id = 0;
  double duration_s = 60.0;
  double rate_hz = 100.0;
  double noise = 0.15;
  uint64_t seed = 7;
};

void synth_features(const SynthOpts& o) {
  gait::SyntheticSpec spec;
  spec.n_classes = o.classes;
  spec.axes = o.axes;
  spec.train_windows = o.train_windows;
  spec.test_windows = o.test_windows;
  spec.rate_hz = o.rate_hz;
  spec.noise_sigma = o.noise;
  spec.seed = o.seed;
  const gait::SyntheticBenchmark bench = gait::build_synthetic_benchmark(spec);
  const std::string train_path = o.out + "_train.csv";
  const std::string test_path = o.out + "_test.csv";
  gait::save_feature_csv(bench.train, train_path);
  gait::save_feature_csv(bench.test, test_path);
  std::printf("wrote %zu train windows -> %s\n", bench.train.size(),
              train_path.c_str());
  std::printf("wrote %zu test windows  -> %s\n", bench.test.size(),
              test_path.c_str());
}

void synth_segments(const SynthOpts& o) {
  const auto bank = gait::make_profile_bank(o.classes, o.axes, o.seed);
  gait::SegmentSet set;
  set.axes = o.axes;
  set.rate_hz = o.rate_hz;
  const size_t seg_len = gait::kSegmentLength;
  for (int k = 0; k < o.classes; ++k) {
    gait::GaitProfile profile = bank[static_cast<size_t>(k)];
    profile.noise_sigma = o.noise;
    const double duration =
        (static_cast<double>(o.windows_per_class) * static_cast<double>(seg_len) +
         static_cast<double>(seg_len)) /
        o.rate_hz;
    const gait::ImuStream stream = gait::synthesize_gait(
        profile, duration, o.rate_hz, o.seed + 500 + static_cast<uint64_t>(k));
    for (int w = 0; w < o.windows_per_class; ++w) {
      const size_t start = static_cast<size_t>(w) * seg_len;
      const gait::ImuWindow win = gait::slice_window(stream, start, seg_len);
      gait::GaitSegment seg;
      seg.data = win.data;
      seg.start_t = win.start_t;
      seg.end_t = win.start_t + win.duration;
      seg.label = k;
      set.segments.push_back(std::move(seg));
    }
  }
  gait::save_segments(set, o.out);
  std::printf("wrote %zu segments (%d classes x %d) -> %s\n",
              set.segments.size(), o.classes, o.windows_per_class,
              o.out.c_str());
}

void synth_stream(const SynthOpts& o) {
  if (o.class_id < 0 || o.class_id >= o.classes)
    throw gait::InvalidInput("--class-id must lie in [0, --classes)");
  const auto bank = gait::make_profile_bank(o.classes, o.axes, o.seed);
  gait::GaitProfile profile = bank[static_cast<size_t>(o.class_id)];
  profile.noise_sigma = o.noise;
  const gait::ImuStream stream = gait::synthesize_gait(
      profile, o.duration_s, o.rate_hz, o.seed + 500 + static_cast<uint64_t>(o.class_id));
  gait::save_stream(stream, o.out, gait::StreamFormat::csv);
  std::printf("wrote %.1f s stream for class %d -> %s\n", stream.duration(),
              o.class_id, o.out.c_str());
}

void run_synth(const SynthOpts& o) {
  if (o.kind == "features")
    synth_features(o);
  else if (o.kind == "segments")
    synth_segments(o);
  else if (o.kind == "stream")
    synth_stream(o);
  else
    throw gait::InvalidInput("--kind must be features, segments, or stream");
}

// ---------------------------------------------------------------------------
// convert-whugait

struct ConvertOpts {
  std::string input;
  std::string out;
  std::string mode = "segments";
  std::string layout = "sample-major";
  double rate_hz = 50.0;
  int axes = 6;
};

std::vector<double> parse_row(const std::string& line, size_t line_no,
                              const std::string& context) {
  std::vector<double> row;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) {
    // Tolerate comma-separated exports as well as whitespace columns.
    for (char& c : tok)
      if (c == ',') c = ' ';
    std::istringstream ts(tok);
    std::string piece;
    while (ts >> piece) {
      try {
        size_t used = 0;
        row.push_back(std::stod(piece, &used));
        if (used != piece.size()) throw std::invalid_argument(piece);
      } catch (const std::exception&) {
        throw gait::ParseError(context + ":" + std::to_string(line_no) +
                               ": bad number '" + piece + "'");
      }
    }
  }
  return row;
}

void convert_stream(const ConvertOpts& o) {
  std::ifstream in(o.input);
  if (!in) throw gait::DataError("cannot open '" + o.input + "'");
  gait::ImuStream stream;
  stream.rate_hz = o.rate_hz;
  stream.axes = o.axes;
  stream.channels.assign(static_cast<size_t>(o.axes), {});
  std::optional<int> label;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<double> row = parse_row(line, line_no, o.input);
    if (row.empty()) continue;
    const size_t n = static_cast<size_t>(o.axes);
    if (row.size() != n && row.size() != n + 1)
      throw gait::ParseError(o.input + ":" + std::to_string(line_no) +
                             ": expected " + std::to_string(n) + " or " +
                             std::to_string(n + 1) + " columns, got " +
                             std::to_string(row.size()));
    for (size_t c = 0; c < n; ++c) stream.channels[c].push_back(row[c]);
    if (row.size() == n + 1) {
      const double raw = row[n];
      const int l = static_cast<int>(std::llround(raw));
      if (std::abs(raw - l) > 1e-9 || l < 0)
        throw gait::ParseError(o.input + ":" + std::to_string(line_no) +
                               ": label column must be a non-negative integer");
      if (label && *label != l)
        throw gait::DataError(o.input + ": mixed labels in one stream (" +
                              std::to_string(*label) + " vs " +
                              std::to_string(l) + ")");
      label = l;
    }
  }
  if (stream.size() == 0) throw gait::DataError(o.input + ": no samples");
  stream.label = label;
  stream.validate();
  gait::save_stream(stream, o.out, gait::StreamFormat::csv);
  std::printf("wrote %zu samples (%.1f s at %.1f Hz) -> %s\n", stream.size(),
              stream.duration(), stream.rate_hz, o.out.c_str());
}

void convert_segments(const ConvertOpts& o) {
  std::ifstream in(o.input);
  if (!in) throw gait::DataError("cannot open '" + o.input + "'");
  const size_t seg_len = gait::kSegmentLength;
  const size_t flat = seg_len * static_cast<size_t>(o.axes);
  const bool channel_major = o.layout == "channel-major";
  gait::SegmentSet set;
  set.axes = o.axes;
  set.rate_hz = o.rate_hz;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<double> row = parse_row(line, line_no, o.input);
    if (row.empty()) continue;
    if (row.size() != flat && row.size() != flat + 1)
      throw gait::ParseError(o.input + ":" + std::to_string(line_no) +
                             ": expected " + std::to_string(flat) + " or " +
                             std::to_string(flat + 1) + " values, got " +
                             std::to_string(row.size()));
    gait::GaitSegment seg;
    seg.data.assign(static_cast<size_t>(o.axes),
                    std::vector<double>(seg_len, 0.0));
    for (size_t c = 0; c < static_cast<size_t>(o.axes); ++c)
      for (size_t s = 0; s < seg_len; ++s)
        seg.data[c][s] = channel_major ? row[c * seg_len + s]
                                       : row[s * static_cast<size_t>(o.axes) + c];
    const double dur = static_cast<double>(seg_len) / o.rate_hz;
    seg.start_t = static_cast<double>(set.segments.size()) * dur;
    seg.end_t = seg.start_t + dur;
    if (row.size() == flat + 1) {
      const double raw = row[flat];
      const int l = static_cast<int>(std::llround(raw));
      if (std::abs(raw - l) > 1e-9 || l < 0)
        throw gait::ParseError(o.input + ":" + std::to_string(line_no) +
                               ": label column must be a non-negative integer");
      seg.label = l;
    }
    set.segments.push_back(std::move(seg));
  }
  if (set.segments.empty()) throw gait::DataError(o.input + ": no segments");
  gait::save_segments(set, o.out);
  std::printf("wrote %zu segments (%s layout) -> %s\n", set.segments.size(),
              o.layout.c_str(), o.out.c_str());
}

void run_convert(const ConvertOpts& o) {
  if (o.axes != 3 && o.axes != 6)
    throw gait::InvalidInput("--axes must be 3 or 6");
  if (o.layout != "sample-major" && o.layout != "channel-major")
    throw gait::InvalidInput("--layout must be sample-major or channel-major");
  if (o.mode == "stream")
    convert_stream(o);
  else if (o.mode == "segments")
    convert_segments(o);
  else
    throw gait::InvalidInput("--mode must be stream or segments");
}

// ---------------------------------------------------------------------------
// segment

struct SegmentOpts {
  std::string input;
  std::string out;
  double rate_hz = 100.0;
  int axes = 6;
  double threshold = 0.5;
  double min_duration_s = 1.0;
  double min_distance_s = 0.25;
  double prominence_frac = 0.3;
  double cv_max = 0.2;
  int label = -1;
};

void run_segment(const SegmentOpts& o) {
  gait::ImuStream stream =
      gait::load_stream(o.input, gait::StreamFormat::csv, o.rate_hz, o.axes);
  if (o.label >= 0) stream.label = o.label;
  gait::SegmentationOptions opts;
  opts.threshold = o.threshold;
  opts.min_duration_s = o.min_duration_s;
  opts.min_distance_s = o.min_distance_s;
  opts.prominence_frac = o.prominence_frac;
  opts.cv_max = o.cv_max;
  const gait::SegmentSet set = gait::segment_stream(stream, opts);
  gait::save_segments(set, o.out);
  std::printf("wrote %zu segments from %.1f s of input -> %s\n",
              set.segments.size(), stream.duration(), o.out.c_str());
}

// ---------------------------------------------------------------------------
// featurize

struct FeaturizeOpts {
  std::string input;
  std::string out;
  int label = -1;
};

void run_featurize(const FeaturizeOpts& o) {
  const gait::SegmentSet set = gait::load_segments(o.input);
  if (set.segments.empty()) throw gait::DataError(o.input + ": no segments");
  gait::Dataset ds;
  ds.X = gait::featurize_all(set.segments);
  ds.y.reserve(set.segments.size());
  for (const gait::GaitSegment& seg : set.segments) {
    if (seg.label)
      ds.y.push_back(*seg.label);
    else if (o.label >= 0)
      ds.y.push_back(o.label);
    else
      throw gait::DataError(o.input +
                            ": unlabeled segment; pass --label to assign one");
  }
  gait::save_feature_csv(ds, o.out);
  std::printf("wrote %zu feature rows -> %s\n", ds.size(), o.out.c_str());
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
  std::string input;
  std::string out = "model.gmdl";
  std::string history;
  int epochs = 20;
  double learning_rate = 5e-4;
  int batch_size = 32;
  double val_fraction = 0.2;
  int classes = 0;  // 0 = infer from labels
  int filters = 32;
  uint64_t seed = 0;
};

void run_train(const TrainOpts& o) {
  const gait::Dataset ds = load_features(o.input);
  gait::ModelConfig mc;
  mc.input_cols = ds.X.front().axes;
  mc.conv_filters = o.filters;
  mc.n_classes = o.classes > 0 ? o.classes : infer_classes(ds);
  gait::TrainConfig tc;
  tc.epochs = o.epochs;
  tc.learning_rate = o.learning_rate;
  tc.batch_size = o.batch_size;
  tc.val_fraction = o.val_fraction;
  tc.seed = o.seed;
  const gait::TrainResult res = gait::train(ds, tc, mc);
  gait::save_model(res.params, o.out);
  if (!o.history.empty()) gait::save_history_csv(res.history, o.history);
  const gait::EpochStats& best =
      res.history[static_cast<size_t>(res.best_epoch - 1)];
  std::printf("trained on %zu windows (%zu held out for validation)\n",
              res.n_train, res.n_val);
  std::printf("best epoch %d: train acc %.3f, val acc %.3f\n", res.best_epoch,
              best.train_acc, best.val_acc);
  std::printf("wrote model (%zu params, %d classes) -> %s\n",
              res.params.data.size(), mc.n_classes, o.out.c_str());
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
  std::string input;
  std::string model;
};

void run_eval(const EvalOpts& o) {
  const gait::Dataset ds = load_features(o.input);
  const LoadedModel m = load_any_model(o.model);
  const gait::EvalReport report =
      m.quantized() ? gait::evaluate_quantized(*m.q, ds) : gait::evaluate(*m.fp, ds);
  print_eval_report(report, std::cout);
}

// ---------------------------------------------------------------------------
// quantize

struct QuantizeOpts {
  std::string calib;
  std::string model;
  std::string out = "model.gmdq";
};

void run_quantize(const QuantizeOpts& o) {
  if (file_is_quantized(o.model))
    throw gait::ModelFormatError("'" + o.model + "' is already quantized");
  const gait::ModelParams params = gait::load_model(o.model);
  const gait::Dataset ds = load_features(o.calib);
  const gait::ActivationRanges ranges = gait::calibrate(params, ds.X);
  const gait::QuantModel qm = gait::quantize(params, ranges);
  gait::save_qmodel(qm, o.out);
  const gait::AccuracyDelta delta = gait::accuracy_delta(params, qm, ds);
  const gait::MemoryReport mem = gait::memory_report(qm);
  std::printf("calibrated on %zu windows\n", ds.size());
  std::printf("float acc %.4f  int8 acc %.4f  delta %+.4f  agreement %.4f\n",
              delta.float_acc, delta.int8_acc, delta.delta, delta.agreement);
  std::printf("max logit deviation %.4f\n", delta.max_logit_dev);
  std::printf("flash %.1f KB  arena %zu B\n",
              static_cast<double>(mem.flash_bytes) / 1024.0, mem.arena_bytes);
  std::printf("wrote quantized model -> %s\n", o.out.c_str());
}

// ---------------------------------------------------------------------------
// report-memory

struct ReportOpts {
  std::string model;
  bool as_json = false;
};

void run_report_memory(const ReportOpts& o) {
  if (!file_is_quantized(o.model))
    throw gait::ModelFormatError(
        "'" + o.model + "' is a float model; memory reports cover quantized models");
  const gait::QuantModel qm = gait::load_qmodel(o.model);
  const gait::MemoryReport mem = gait::memory_report(qm);
  if (o.as_json) {
    std::cout << gait::memory_report_json(mem) << "\n";
    return;
  }
  std::printf("flash total   %8zu B (%.1f KB)\n", mem.flash_bytes,
              static_cast<double>(mem.flash_bytes) / 1024.0);
  std::printf("  weights     %8zu B\n", mem.weight_bytes);
  std::printf("  biases      %8zu B\n", mem.bias_bytes);
  std::printf("  metadata    %8zu B\n", mem.metadata_bytes);
  std::printf("arena peak    %8zu B (%.1f KB)\n", mem.arena_bytes,
              static_cast<double>(mem.arena_bytes) / 1024.0);
  std::printf("%-12s %10s %10s %10s\n", "stage", "in B", "out B", "live B");
  for (const gait::MemoryStage& st : mem.schedule)
    std::printf("%-12s %10zu %10zu %10zu\n", st.name.c_str(), st.in_bytes,
                st.out_bytes, st.in_bytes + st.out_bytes);
}

// ---------------------------------------------------------------------------
// stream

struct StreamOpts {
  std::string input;
  std::string model;
  bool force_quantized = false;
  double rate_hz = 100.0;
  int axes = 6;
  double window_s = 3.0;
  int inferences_per_second = 4;
  double tau = 0.6;
  int smooth_k = 4;
  double speed = 1.0;
};

json event_to_json(const gait::PredictionEvent& ev) {
  json j;
  j["t"] = ev.t;
  if (ev.smoothed_label)
    j["label"] = *ev.smoothed_label;
  else
    j["label"] = "unknown";
  j["confidence"] = ev.confidence;
  j["latency_ms"] = ev.latency_ms;
  j["raw_probs"] = ev.raw_probs;
  return j;
}

void run_stream(const StreamOpts& o) {
  const gait::ImuStream stream =
      gait::load_stream(o.input, gait::StreamFormat::csv, o.rate_hz, o.axes);
  if (stream.size() == 0) throw gait::DataError(o.input + ": empty stream");
  LoadedModel m = load_any_model(o.model);
  if (o.force_quantized && !m.quantized())
    throw gait::ModelFormatError("--quantized given but '" + o.model +
                                 "' holds a float model");
  gait::EngineConfig cfg;
  cfg.rate_hz = o.rate_hz;
  cfg.axes = o.axes;
  cfg.window_s = o.window_s;
  cfg.inferences_per_second = o.inferences_per_second;
  cfg.confidence_threshold = o.tau;
  cfg.smoothing_depth = o.smooth_k;
  gait::StreamEngine engine =
      m.quantized() ? gait::StreamEngine(cfg, std::move(*m.q))
                    : gait::StreamEngine(cfg, std::move(*m.fp));

  using clock = std::chrono::steady_clock;
  const auto wall0 = clock::now();
  size_t events = 0;
  for (size_t i = 0; i < stream.size(); ++i) {
    gait::ImuStream chunk;
    chunk.rate_hz = stream.rate_hz;
    chunk.axes = stream.axes;
    chunk.t0 = stream.time_at(i);
    chunk.channels.reserve(stream.channels.size());
    for (const std::vector<double>& ch : stream.channels)
      chunk.channels.push_back({ch[i]});
    engine.push_samples(chunk);
    const double now_t = stream.time_at(i) + 1.0 / stream.rate_hz;
    if (o.speed > 0.0) {
      const double elapsed = now_t - stream.t0;
      std::this_thread::sleep_until(
          wall0 + std::chrono::duration_cast<clock::duration>(
                      std::chrono::duration<double>(elapsed / o.speed)));
    }
    if (const auto ev = engine.step(now_t)) {
      std::cout << event_to_json(*ev).dump() << "\n";
      ++events;
    }
  }
  std::cout.flush();
  std::fprintf(stderr, "%zu events from %.1f s of input\n", events,
               stream.duration());
}

// ---------------------------------------------------------------------------
// bench

struct BenchOpts {
  std::string model;
  int count = 500;
  int axes = 6;
  double rate_hz = 100.0;
  double window_s = 3.0;
  uint64_t seed = 3;
};

void run_bench(const BenchOpts& o) {
  if (o.count < 1) throw gait::InvalidInput("--count must be positive");
  const LoadedModel m = load_any_model(o.model);
  const int n_classes = m.config().n_classes;
  const auto bank = gait::make_profile_bank(n_classes, o.axes, o.seed);
  const size_t win_len =
      static_cast<size_t>(std::llround(o.window_s * o.rate_hz));

  std::vector<gait::ImuWindow> windows;
  windows.reserve(static_cast<size_t>(o.count));
  for (int i = 0; i < o.count; ++i) {
    gait::GaitProfile profile = bank[static_cast<size_t>(i % n_classes)];
    profile.noise_sigma = 0.1;
    const gait::ImuStream s = gait::synthesize_gait(
        profile, o.window_s + 0.5, o.rate_hz, o.seed + 100 + static_cast<uint64_t>(i));
    windows.push_back(gait::slice_window(s, 0, win_len));
  }

  using clock = std::chrono::steady_clock;
  std::vector<gait::FeatureGrid> grids;
  grids.reserve(windows.size());
  std::vector<double> feat_ms, infer_ms;
  feat_ms.reserve(windows.size());
  infer_ms.reserve(windows.size());
  for (const gait::ImuWindow& win : windows) {
    const auto t0 = clock::now();
    grids.push_back(gait::featurize(win));
    const auto t1 = clock::now();
    feat_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  for (const gait::FeatureGrid& grid : grids) {
    const auto t0 = clock::now();
    const std::vector<double> probs =
        m.quantized() ? gait::q_forward(*m.q, grid) : gait::forward(*m.fp, grid);
    const auto t1 = clock::now();
    infer_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    if (probs.size() != static_cast<size_t>(n_classes))
      throw gait::ShapeError("unexpected output width");
  }

  std::printf("windows %d  model %s\n", o.count,
              m.quantized() ? "int8" : "float");
  print_latency("featurize", summarize_ms(feat_ms), feat_ms.size());
  print_latency(m.quantized() ? "inference[int8]" : "inference[float]",
                summarize_ms(infer_ms), infer_ms.size());
}

// ---------------------------------------------------------------------------
// wiring

void add_synth(CLI::App& app, SynthOpts& o) {
  CLI::App* sub = app.add_subcommand("synth", "Generate synthetic gait data");
  sub->add_option("--kind", o.kind, "features | segments | stream");
  sub->add_option("-o,--out", o.out, "Output path (features: prefix for _train/_test CSVs)");
  sub->add_option("--classes", o.classes, "Number of identities")->check(CLI::PositiveNumber);
  sub->add_option("--axes", o.axes, "3 or 6 channels");
  sub->add_option("--train-windows", o.train_windows, "Training windows per class");
  sub->add_option("--test-windows", o.test_windows, "Test windows per class");
  sub->add_option("--windows-per-class", o.windows_per_class, "Segments per class (kind=segments)");
  sub->add_option("--class-id", o.class_id, "Identity to synthesize (kind=stream)");
  sub->add_option("--duration", o.duration_s, "Stream length in seconds (kind=stream)");
  sub->add_option("--rate", o.rate_hz, "Sample rate in Hz");
  sub->add_option("--noise", o.noise, "Gaussian noise sigma");
  sub->add_option("--seed", o.seed, "RNG seed");
  sub->callback([&o] { run_synth(o); });
}

void add_convert(CLI::App& app, ConvertOpts& o) {
  CLI::App* sub = app.add_subcommand(
      "convert-whugait", "Convert whitespace-separated IMU text exports");
  sub->add_option("input", o.input, "Input text file")->required();
  sub->add_option("-o,--out", o.out, "Output path")->required();
  sub->add_option("--mode", o.mode, "stream (rows of samples) | segments (rows of flattened cycles)");
  sub->add_option("--layout", o.layout, "sample-major | channel-major (mode=segments)");
  sub->add_option("--rate", o.rate_hz, "Sample rate in Hz");
  sub->add_option("--axes", o.axes, "3 or 6 channels");
  sub->callback([&o] { run_convert(o); });
}

void add_segment(CLI::App& app, SegmentOpts& o) {
  CLI::App* sub = app.add_subcommand(
      "segment", "Detect walking and cut two-step segments from a CSV stream");
  sub->add_option("input", o.input, "Input stream CSV")->required();
  sub->add_option("-o,--out", o.out, "Output segments file")->required();
  sub->add_option("--rate", o.rate_hz, "Sample rate in Hz");
  sub->add_option("--axes", o.axes, "3 or 6 channels");
  sub->add_option("--threshold", o.threshold, "Walking score threshold (0,1)");
  sub->add_option("--min-duration", o.min_duration_s, "Minimum walking interval in seconds");
  sub->add_option("--min-distance", o.min_distance_s, "Minimum step spacing in seconds");
  sub->add_option("--prominence", o.prominence_frac, "Peak prominence fraction");
  sub->add_option("--cv-max", o.cv_max, "Maximum step-gap coefficient of variation");
  sub->add_option("--label", o.label, "Identity label to stamp on segments");
  sub->callback([&o] { run_segment(o); });
}

void add_featurize(CLI::App& app, FeaturizeOpts& o) {
  CLI::App* sub =
      app.add_subcommand("featurize", "Turn segments into a feature CSV");
  sub->add_option("input", o.input, "Input segments file")->required();
  sub->add_option("-o,--out", o.out, "Output feature CSV")->required();
  sub->add_option("--label", o.label, "Label for unlabeled segments");
  sub->callback([&o] { run_featurize(o); });
}

void add_train(CLI::App& app, TrainOpts& o) {
  CLI::App* sub = app.add_subcommand("train", "Train the identification model");
  sub->add_option("input", o.input, "Training feature CSV")->required();
  sub->add_option("-o,--out", o.out, "Output model path");
  sub->add_option("--history", o.history, "Write per-epoch stats CSV here");
  sub->add_option("--epochs", o.epochs, "Training epochs")->check(CLI::PositiveNumber);
  sub->add_option("--lr", o.learning_rate, "Adam learning rate");
  sub->add_option("--batch", o.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
  sub->add_option("--val-fraction", o.val_fraction, "Validation split fraction");
  sub->add_option("--classes", o.classes, "Class count (default: max label + 1)");
  sub->add_option("--filters", o.filters, "Conv filter count")->check(CLI::PositiveNumber);
  sub->add_option("--seed", o.seed, "RNG seed");
  sub->callback([&o] { run_train(o); });
}

void add_eval(CLI::App& app, EvalOpts& o) {
  CLI::App* sub =
      app.add_subcommand("eval", "Evaluate a model on a feature CSV");
  sub->add_option("input", o.input, "Feature CSV")->required();
  sub->add_option("--model", o.model, "Model path (float or quantized)")->required();
  sub->callback([&o] { run_eval(o); });
}

void add_quantize(CLI::App& app, QuantizeOpts& o) {
  CLI::App* sub = app.add_subcommand(
      "quantize", "Post-training int8 quantization with calibration data");
  sub->add_option("calib", o.calib, "Calibration feature CSV")->required();
  sub->add_option("--model", o.model, "Float model path")->required();
  sub->add_option("-o,--out", o.out, "Output quantized model path");
  sub->callback([&o] { run_quantize(o); });
}

void add_report_memory(CLI::App& app, ReportOpts& o) {
  CLI::App* sub = app.add_subcommand(
      "report-memory", "Flash and arena accounting for a quantized model");
  sub->add_option("model", o.model, "Quantized model path")->required();
  sub->add_flag("--json", o.as_json, "Emit the report as JSON");
  sub->callback([&o] { run_report_memory(o); });
}

void add_stream(CLI::App& app, StreamOpts& o) {
  CLI::App* sub = app.add_subcommand(
      "stream", "Replay a CSV stream through the identification engine");
  sub->add_option("input", o.input, "Input stream CSV")->required();
  sub->add_option("--model", o.model, "Model path (float or quantized)")->required();
  sub->add_flag("--quantized", o.force_quantized, "Require a quantized model");
  sub->add_option("--rate", o.rate_hz, "Sample rate in Hz");
  sub->add_option("--axes", o.axes, "3 or 6 channels");
  sub->add_option("--window-s", o.window_s, "Inference window in seconds");
  sub->add_option("--ips", o.inferences_per_second, "Inferences per second");
  sub->add_option("--tau", o.tau, "Confidence threshold for a known identity");
  sub->add_option("--smooth-k", o.smooth_k, "Smoothing depth in windows");
  sub->add_option("--speed", o.speed, "Replay speed multiplier (0 = as fast as possible)");
  sub->callback([&o] { run_stream(o); });
}

void add_bench(CLI::App& app, BenchOpts& o) {
  CLI::App* sub = app.add_subcommand(
      "bench", "Measure featurization and inference latency");
  sub->add_option("--model", o.model, "Model path (float or quantized)")->required();
  sub->add_option("--count", o.count, "Number of synthetic windows");
  sub->add_option("--axes", o.axes, "3 or 6 channels");
  sub->add_option("--rate", o.rate_hz, "Sample rate in Hz");
  sub->add_option("--window-s", o.window_s, "Window length in seconds");
  sub->add_option("--seed", o.seed, "RNG seed");
  sub->callback([&o] { run_bench(o); });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gait: IMU gait segmentation, identification, and deployment tools"};
  app.require_subcommand(1);

  SynthOpts synth_opts;
  ConvertOpts convert_opts;
  SegmentOpts segment_opts;
  FeaturizeOpts featurize_opts;
  TrainOpts train_opts;
  EvalOpts eval_opts;
  QuantizeOpts quantize_opts;
  ReportOpts report_opts;
  StreamOpts stream_opts;
  BenchOpts bench_opts;

  add_synth(app, synth_opts);
  add_convert(app, convert_opts);
  add_segment(app, segment_opts);
  add_featurize(app, featurize_opts);
  add_train(app, train_opts);
  add_eval(app, eval_opts);
  add_quantize(app, quantize_opts);
  add_report_memory(app, report_opts);
  add_stream(app, stream_opts);
  add_bench(app, bench_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const gait::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == gait::ErrorKind::data ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
