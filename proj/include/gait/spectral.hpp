#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "gait/imu.hpp"

namespace gait {

inline constexpr size_t kFftLength = 16;    // frame length for Welch averaging
inline constexpr size_t kWelchHop = 8;      // 50% overlap
inline constexpr double kLogEps = 1e-10;    // floor inside log10(power + eps)
inline constexpr int kFeaturesPerAxis = 13;
inline constexpr double kCanonicalRateHz = 100.0;
inline constexpr size_t kMinAxisSamples = 64;

// One-sided spectrum of a real frame of length n: bins 0..n/2 and the
// per-bin power |X[k]|^2 / n.
struct Spectrum {
  size_t n = 0;
  std::vector<std::complex<double>> bins;
  std::vector<double> power;
};

// Radix-2 decimation-in-time FFT of a real frame. Length must be a power of
// two and at least 8.
Spectrum real_fft(std::span<const double> frame);

// In-place complex FFT used by real_fft; exposed for the segmentation module's
// band-power computation. Length must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& x);

// Welch-averaged one-sided power: rectangular frames of length 16, hop 8,
// per-bin power averaged across frames. Returns 9 bins (0..8). Needs at
// least one full frame.
std::array<double, kFftLength / 2 + 1> welch_power(std::span<const double> samples);

// The 13 per-axis features, in order: RMS of the mean-removed signal,
// skewness, excess kurtosis, dominant non-DC bin frequency in Hz,
// log10(dominant power + eps), then log10(power + eps) for bins 1..8.
// Requires >= 64 samples. Ties for the dominant bin resolve to the lower bin,
// so an all-zero channel reports bin 1.
std::array<double, kFeaturesPerAxis> axis_features(std::span<const double> samples,
                                                   double rate_hz);

// 13 x axes matrix, row-major: rows are feature indices, columns follow the
// channel order (ax, ay, az, gx, gy, gz). Flattened length 78 or 39.
struct FeatureGrid {
  int axes = 0;
  std::vector<double> values;  // kFeaturesPerAxis * axes

  double at(int feature, int axis) const {
    return values[static_cast<size_t>(feature * axes + axis)];
  }
  double& at(int feature, int axis) {
    return values[static_cast<size_t>(feature * axes + axis)];
  }
  size_t size() const { return values.size(); }
};

// Featurize a window. Windows not sampled at the canonical 100 Hz are
// linearly resampled onto it (preserving duration) before analysis.
FeatureGrid featurize(const ImuWindow& window);

// A gait segment is featurized as a 128-sample window: cycles are already
// time-normalized, so the canonical rate is used as-is.
FeatureGrid featurize(const GaitSegment& segment);

struct EnergyReport {
  double accel = 0.0;
  double gyro = 0.0;
};

// Sum of non-DC Welch power over each sensor triple. 6-axis windows only.
EnergyReport energy_report(const ImuWindow& window);

}  // namespace gait
