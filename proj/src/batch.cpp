#include "gait/batch.hpp"

#include <atomic>
#include <exception>

namespace gait {
namespace {

// Runs body(i) for i in [0, n) under OpenMP; the first exception wins and is
// rethrown after the region (exceptions must not unwind out of a worker).
template <typename Body>
void parallel_items(size_t n, const Body& body) {
  std::atomic<bool> failed{false};
  std::exception_ptr err;
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(n); ++i) {
    if (failed.load(std::memory_order_relaxed)) continue;
    try {
      body(static_cast<size_t>(i));
    } catch (...) {
      if (!failed.exchange(true)) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace

std::vector<FeatureGrid> featurize_all_serial(std::span<const GaitSegment> segments) {
  std::vector<FeatureGrid> out(segments.size());
  for (size_t i = 0; i < segments.size(); ++i) out[i] = featurize(segments[i]);
  return out;
}

std::vector<FeatureGrid> featurize_all(std::span<const GaitSegment> segments) {
  std::vector<FeatureGrid> out(segments.size());
  parallel_items(segments.size(),
                 [&](size_t i) { out[i] = featurize(segments[i]); });
  return out;
}

std::vector<std::vector<double>> forward_all_serial(const ModelParams& params,
                                                    std::span<const FeatureGrid> grids) {
  std::vector<std::vector<double>> out(grids.size());
  for (size_t i = 0; i < grids.size(); ++i) out[i] = forward(params, grids[i]);
  return out;
}

std::vector<std::vector<double>> forward_all(const ModelParams& params,
                                             std::span<const FeatureGrid> grids) {
  std::vector<std::vector<double>> out(grids.size());
  parallel_items(grids.size(),
                 [&](size_t i) { out[i] = forward(params, grids[i]); });
  return out;
}

std::vector<std::vector<double>> q_forward_all_serial(const QuantModel& qm,
                                                      std::span<const FeatureGrid> grids) {
  std::vector<std::vector<double>> out(grids.size());
  for (size_t i = 0; i < grids.size(); ++i) out[i] = q_forward(qm, grids[i]);
  return out;
}

std::vector<std::vector<double>> q_forward_all(const QuantModel& qm,
                                               std::span<const FeatureGrid> grids) {
  std::vector<std::vector<double>> out(grids.size());
  parallel_items(grids.size(),
                 [&](size_t i) { out[i] = q_forward(qm, grids[i]); });
  return out;
}

std::vector<int> argmax_all(std::span<const std::vector<double>> probs) {
  std::vector<int> out(probs.size());
  for (size_t i = 0; i < probs.size(); ++i) out[i] = predict_label(probs[i]);
  return out;
}

}  // namespace gait
