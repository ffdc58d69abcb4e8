#include "gait/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "gait/errors.hpp"
#include "gait/spectral.hpp"

namespace gait {

size_t EngineConfig::window_samples() const {
  return static_cast<size_t>(std::llround(window_s * rate_hz));
}

void EngineConfig::validate() const {
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz))
    throw ConfigError("engine rate must be positive and finite");
  if (axes != 3 && axes != 6)
    throw ConfigError("engine axes must be 3 or 6, got " + std::to_string(axes));
  if (!(window_s > 0.0) || !std::isfinite(window_s))
    throw ConfigError("engine window must be positive");
  if (inferences_per_second < 1)
    throw ConfigError("engine needs at least one inference per second");
  if (hop_s() > window_s)
    throw ConfigError("inference hop exceeds the window length");
  if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0))
    throw ConfigError("confidence threshold must lie in [0, 1]");
  if (smoothing_depth < 1)
    throw ConfigError("smoothing depth must be at least 1");
  if (window_samples() < kSegmentLength)
    throw ConfigError("window holds fewer samples than one segment");
}

namespace {

// Same degenerate-signal convention the featurizer applies per axis: variance
// at the level of float noise around a constant counts as silence. A window
// that is silent on every channel carries no gait evidence.
bool window_is_silent(const ImuWindow& win) {
  for (const auto& ch : win.data) {
    double mean = 0.0, peak = 0.0;
    for (double v : ch) {
      mean += v;
      peak = std::max(peak, std::abs(v));
    }
    mean /= static_cast<double>(ch.size());
    double m2 = 0.0;
    for (double v : ch) m2 += (v - mean) * (v - mean);
    m2 /= static_cast<double>(ch.size());
    if (m2 > 1e-18 * std::max(1.0, peak * peak)) return false;
  }
  return true;
}

}  // namespace

SmoothResult smooth_probs(std::span<const std::vector<double>> history,
                          double tau) {
  if (history.empty())
    throw InvalidInput("smoothing needs at least one probability vector");
  const size_t n = history[0].size();
  if (n == 0) throw InvalidInput("smoothing needs non-empty probability rows");
  SmoothResult res;
  res.probs.assign(n, 0.0);
  for (const auto& row : history) {
    if (row.size() != n)
      throw InvalidInput("smoothing history rows differ in length");
    for (size_t i = 0; i < n; ++i) res.probs[i] += row[i];
  }
  for (double& p : res.probs) p /= static_cast<double>(history.size());
  size_t best = 0;
  for (size_t i = 1; i < n; ++i)
    if (res.probs[i] > res.probs[best]) best = i;
  res.confidence = res.probs[best];
  if (res.confidence >= tau) res.label = static_cast<int>(best);
  return res;
}

void StreamEngine::init(const ModelConfig& model_cfg) {
  cfg_.validate();
  if (model_cfg.input_cols != cfg_.axes)
    throw ConfigError("model expects " + std::to_string(model_cfg.input_cols) +
                      " axes but the engine is configured for " +
                      std::to_string(cfg_.axes));
  cap_ = 2 * cfg_.window_samples();
  ring_.assign(static_cast<size_t>(cfg_.axes), std::vector<double>(cap_, 0.0));
}

StreamEngine::StreamEngine(const EngineConfig& cfg, ModelParams model)
    : cfg_(cfg), model_(std::move(model)) {
  const ModelParams& p = std::get<ModelParams>(model_);
  p.validate();
  init(p.config);
}

StreamEngine::StreamEngine(const EngineConfig& cfg, QuantModel model)
    : cfg_(cfg), model_(std::move(model)) {
  const QuantModel& q = std::get<QuantModel>(model_);
  q.validate();
  init(q.config);
}

bool StreamEngine::quantized() const {
  return std::holds_alternative<QuantModel>(model_);
}

size_t StreamEngine::push_samples(const ImuStream& chunk) {
  chunk.validate();
  if (chunk.axes != cfg_.axes)
    throw ModeError("cannot push " + std::to_string(chunk.axes) +
                    "-axis samples into a " + std::to_string(cfg_.axes) +
                    "-axis engine");
  if (std::abs(chunk.rate_hz - cfg_.rate_hz) > 1e-9)
    throw ModeError("chunk rate " + std::to_string(chunk.rate_hz) +
                    " does not match engine rate " +
                    std::to_string(cfg_.rate_hz));
  const size_t n = chunk.size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t c = 0; c < ring_.size(); ++c)
      ring_[c][write_] = chunk.channels[c][i];
    write_ = (write_ + 1) % cap_;
    size_ = std::min(size_ + 1, cap_);
  }
  return n;
}

ImuWindow StreamEngine::latest_window(double now_t) const {
  const size_t w = cfg_.window_samples();
  ImuWindow win;
  win.rate_hz = cfg_.rate_hz;
  win.duration = static_cast<double>(w) / cfg_.rate_hz;
  win.start_t = now_t - win.duration;
  win.data.assign(ring_.size(), std::vector<double>(w));
  const size_t start = (write_ + cap_ - w) % cap_;
  for (size_t c = 0; c < ring_.size(); ++c)
    for (size_t i = 0; i < w; ++i)
      win.data[c][i] = ring_[c][(start + i) % cap_];
  return win;
}

std::optional<PredictionEvent> StreamEngine::step(double now_t) {
  if (size_ < cfg_.window_samples()) return std::nullopt;
  if (last_emit_ && now_t - *last_emit_ < cfg_.hop_s() - 1e-9)
    return std::nullopt;

  const auto t0 = std::chrono::steady_clock::now();
  const ImuWindow win = latest_window(now_t);
  const int n_classes =
      quantized() ? std::get<QuantModel>(model_).config.n_classes
                  : std::get<ModelParams>(model_).config.n_classes;
  std::vector<double> probs;
  if (window_is_silent(win)) {
    // No gait evidence: a uniform distribution, so the smoother decays any
    // prior confidence below the gate instead of inventing a label.
    probs.assign(static_cast<size_t>(n_classes),
                 1.0 / static_cast<double>(n_classes));
  } else {
    const FeatureGrid grid = featurize(win);
    probs = quantized() ? q_forward(std::get<QuantModel>(model_), grid)
                        : forward(std::get<ModelParams>(model_), grid);
  }
  const auto t1 = std::chrono::steady_clock::now();

  history_.push_back(probs);
  if (history_.size() > static_cast<size_t>(cfg_.smoothing_depth))
    history_.erase(history_.begin());
  const SmoothResult sm = smooth_probs(history_, cfg_.confidence_threshold);

  PredictionEvent ev;
  ev.t = now_t;
  ev.raw_probs = std::move(probs);
  ev.smoothed_label = sm.label;
  ev.confidence = sm.confidence;
  ev.latency_ms =
      std::chrono::duration<double, std::milli>(t1 - t0).count();
  last_emit_ = now_t;
  return ev;
}

}  // namespace gait
