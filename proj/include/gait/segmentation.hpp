#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gait/imu.hpp"

namespace gait {

enum class IntervalKind { walking, noise };

struct Interval {
  double start_t = 0.0;
  double end_t = 0.0;
  IntervalKind kind = IntervalKind::walking;

  double duration() const { return end_t - start_t; }
};

// Step-peak positions (sample indices into the analyzed interval) with their
// prominences; indices strictly increasing, min distance enforced.
struct PeakList {
  std::vector<size_t> indices;
  std::vector<double> prominences;

  size_t size() const { return indices.size(); }
};

// Channel with the highest variance; ties go to the lower channel index.
int dominant_channel(const ImuWindow& window);

// Heuristic walking score in [0, 1]: the mean of (a) the peak normalized
// autocorrelation of the dominant channel over lags of 1/3 s .. 1 s (capped
// at half the window, since periodicity needs two full periods) and (b) the
// share of signal power in the 1-3 Hz band. Both terms are scale-free.
// Requires at least 64 samples.
double score_walking(const ImuWindow& window);

// Learned alternative: a small 1-D conv classifier over the standardized
// dominant channel (2 conv layers of 8 filters, kernel 9, global average
// pool, 2-class softmax), trained with the shared Adam optimizer.
class WalkDetector {
 public:
  static constexpr int kFilters = 8;
  static constexpr int kKernel = 9;

  explicit WalkDetector(uint64_t seed);

  struct EpochStat {
    double loss = 0.0;      // mean training loss over the epoch's batches
    double accuracy = 0.0;  // training accuracy after the epoch
  };

  // labels: 1 = walking, 0 = not. Windows may have differing lengths.
  std::vector<EpochStat> fit(std::span<const ImuWindow> windows,
                             std::span<const int> labels, int epochs,
                             double learning_rate, uint64_t seed);

  double score(const ImuWindow& window) const;  // P(walking)

  size_t param_count() const { return params_.size(); }

 private:
  std::vector<float> params_;
};

double score_walking(const ImuWindow& window, const WalkDetector& detector);

// Scores 1 s windows (hop 0.5 s) against the threshold, merges runs of
// above-threshold windows, and drops intervals shorter than min_duration_s.
// Passing a detector switches the scorer from the heuristic to the model.
std::vector<Interval> extract_walking_intervals(const ImuStream& stream,
                                                double threshold,
                                                double min_duration_s,
                                                const WalkDetector* detector = nullptr);

// Peak picking on the 5-sample moving average of the dominant channel:
// local maxima whose prominence exceeds prominence_frac x (max - min),
// thinned greedily by descending prominence to the minimum distance.
PeakList detect_step_peaks(const ImuWindow& interval,
                           double min_distance_s = 0.25,
                           double prominence_frac = 0.3);

// Two-step segments spanning peaks i..i+2, every channel resampled to 128
// samples. Segments whose two gaps vary from the interval's median gap by
// more than cv_max (coefficient of variation) are dropped as atypical.
std::vector<GaitSegment> split_two_step_segments(const ImuWindow& interval,
                                                 const PeakList& peaks,
                                                 double cv_max = 0.2);

struct SegmentationOptions {
  double threshold = 0.5;
  double min_duration_s = 1.0;
  double min_distance_s = 0.25;
  double prominence_frac = 0.3;
  double cv_max = 0.2;
  const WalkDetector* detector = nullptr;  // nullptr -> heuristic scorer
};

// Full pipeline: walking intervals -> step peaks -> two-step segments,
// labeled with the stream's label.
SegmentSet segment_stream(const ImuStream& stream,
                          const SegmentationOptions& opts = {});

}  // namespace gait
