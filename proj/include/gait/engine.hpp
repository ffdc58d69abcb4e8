#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "gait/cnn.hpp"
#include "gait/imu.hpp"
#include "gait/quant.hpp"

namespace gait {

struct EngineConfig {
  double rate_hz = 100.0;
  int axes = 6;
  double window_s = 3.0;
  int inferences_per_second = 4;
  double confidence_threshold = 0.6;  // tau: below it the label is unknown
  int smoothing_depth = 4;            // K: raw prob vectors averaged

  double hop_s() const { return 1.0 / inferences_per_second; }
  size_t window_samples() const;
  void validate() const;  // throws ConfigError
};

// One inference emission. latency_ms is wall-clock measurement noise and is
// the only field excluded from the engine's determinism guarantee.
struct PredictionEvent {
  double t = 0.0;
  std::vector<double> raw_probs;
  std::optional<int> smoothed_label;  // nullopt = unknown
  double confidence = 0.0;            // max smoothed probability
  double latency_ms = 0.0;
};

struct SmoothResult {
  std::vector<double> probs;
  std::optional<int> label;
  double confidence = 0.0;
};

// Arithmetic mean of the history rows, then the confidence gate: the argmax
// becomes the label iff its mean probability reaches tau (ties break to the
// lower class index). History must be non-empty with equal-length rows.
SmoothResult smooth_probs(std::span<const std::vector<double>> history,
                          double tau);

// Single-owner streaming identifier: a ring buffer of the newest 2x window
// samples, a sliding-window featurize -> forward -> smooth -> gate pipeline,
// and sample-time emission pacing (deterministic across replay speeds).
class StreamEngine {
 public:
  StreamEngine(const EngineConfig& cfg, ModelParams model);
  StreamEngine(const EngineConfig& cfg, QuantModel model);

  // Appends the chunk (axes and rate must match the engine), evicting the
  // oldest samples once the ring is full. Returns the number accepted.
  size_t push_samples(const ImuStream& chunk);

  // Emits iff a full window is buffered and at least one hop has elapsed
  // since the last emission (now_t is the caller's stream clock). Windows
  // with zero signal variance on every channel carry no gait evidence and
  // enter the smoother as a uniform distribution, so sustained silence
  // decays the confidence below the gate.
  std::optional<PredictionEvent> step(double now_t);

  size_t buffered() const { return size_; }
  size_t capacity() const { return cap_; }
  bool quantized() const;
  const EngineConfig& config() const { return cfg_; }

 private:
  void init(const ModelConfig& model_cfg);
  ImuWindow latest_window(double now_t) const;

  EngineConfig cfg_;
  std::variant<ModelParams, QuantModel> model_;
  std::vector<std::vector<double>> ring_;  // axes x cap_
  size_t cap_ = 0;
  size_t write_ = 0;  // next slot to overwrite
  size_t size_ = 0;
  std::optional<double> last_emit_;
  std::vector<std::vector<double>> history_;  // last <=K raw prob rows
};

}  // namespace gait
