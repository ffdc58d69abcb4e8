#include "gait/spectral.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "gait/errors.hpp"

namespace gait {

namespace {

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

double mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

}  // namespace

void fft_inplace(std::vector<std::complex<double>>& x) {
  const size_t n = x.size();
  if (!is_pow2(n)) throw InvalidInput("fft length must be a power of two");

  // Bit-reversal permutation.
  const int bits = std::countr_zero(n);
  for (size_t i = 0; i < n; ++i) {
    size_t j = 0;
    for (int b = 0; b < bits; ++b) j |= ((i >> b) & 1u) << (bits - 1 - b);
    if (j > i) std::swap(x[i], x[j]);
  }

  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t start = 0; start < n; start += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        const auto even = x[start + k];
        const auto odd = x[start + k + len / 2] * w;
        x[start + k] = even + odd;
        x[start + k + len / 2] = even - odd;
        w *= wlen;
      }
    }
  }
}

Spectrum real_fft(std::span<const double> frame) {
  const size_t n = frame.size();
  if (!is_pow2(n) || n < 8)
    throw InvalidInput("fft frame length must be a power of two >= 8, got " +
                       std::to_string(n));
  std::vector<std::complex<double>> x(frame.begin(), frame.end());
  fft_inplace(x);

  Spectrum s;
  s.n = n;
  s.bins.assign(x.begin(), x.begin() + static_cast<long>(n / 2 + 1));
  s.power.resize(n / 2 + 1);
  for (size_t k = 0; k <= n / 2; ++k)
    s.power[k] = std::norm(s.bins[k]) / static_cast<double>(n);
  return s;
}

std::array<double, kFftLength / 2 + 1> welch_power(std::span<const double> samples) {
  if (samples.size() < kFftLength)
    throw InvalidInput("welch averaging needs at least " +
                       std::to_string(kFftLength) + " samples, got " +
                       std::to_string(samples.size()));
  std::array<double, kFftLength / 2 + 1> acc{};
  size_t frames = 0;
  for (size_t start = 0; start + kFftLength <= samples.size(); start += kWelchHop) {
    const Spectrum s = real_fft(samples.subspan(start, kFftLength));
    for (size_t k = 0; k < acc.size(); ++k) acc[k] += s.power[k];
    ++frames;
  }
  for (auto& v : acc) v /= static_cast<double>(frames);
  return acc;
}

std::array<double, kFeaturesPerAxis> axis_features(std::span<const double> samples,
                                                   double rate_hz) {
  if (samples.size() < kMinAxisSamples)
    throw InvalidInput("axis features need at least " +
                       std::to_string(kMinAxisSamples) + " samples, got " +
                       std::to_string(samples.size()));
  if (!(rate_hz > 0.0)) throw InvalidInput("rate must be positive");

  // DC removal stands in for the pipeline's filtering stage.
  std::vector<double> y(samples.begin(), samples.end());
  const double mu = mean(y);
  double peak = 0.0;
  for (auto& v : y) {
    v -= mu;
    peak = std::max(peak, std::abs(v));
  }

  const double n = static_cast<double>(y.size());
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : y) {
    const double v2 = v * v;
    m2 += v2;
    m3 += v2 * v;
    m4 += v2 * v2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;

  const double rms = std::sqrt(m2);
  // Zero-variance convention: report 0 rather than dividing by ~0.
  const bool degenerate = m2 <= 1e-18 * std::max(1.0, peak * peak);
  const double skew = degenerate ? 0.0 : m3 / (m2 * std::sqrt(m2));
  const double kurt = degenerate ? 0.0 : m4 / (m2 * m2) - 3.0;

  const auto p = welch_power(y);
  size_t dom = 1;
  for (size_t k = 2; k < p.size(); ++k)
    if (p[k] > p[dom]) dom = k;

  std::array<double, kFeaturesPerAxis> f{};
  f[0] = rms;
  f[1] = skew;
  f[2] = kurt;
  f[3] = static_cast<double>(dom) * rate_hz / static_cast<double>(kFftLength);
  f[4] = std::log10(p[dom] + kLogEps);
  for (size_t k = 1; k <= 8; ++k) f[4 + k] = std::log10(p[k] + kLogEps);
  return f;
}

FeatureGrid featurize(const ImuWindow& window) {
  window.validate();
  FeatureGrid grid;
  grid.axes = window.channel_count();
  if (grid.axes != 3 && grid.axes != 6)
    throw InvalidInput("featurize expects 3 or 6 channels, got " +
                       std::to_string(grid.axes));
  grid.values.assign(static_cast<size_t>(kFeaturesPerAxis * grid.axes), 0.0);

  for (int a = 0; a < grid.axes; ++a) {
    const auto& ch = window.data[static_cast<size_t>(a)];
    std::array<double, kFeaturesPerAxis> f{};
    if (window.rate_hz == kCanonicalRateHz) {
      f = axis_features(ch, kCanonicalRateHz);
    } else {
      const size_t n = static_cast<size_t>(
          std::llround(static_cast<double>(ch.size()) * kCanonicalRateHz / window.rate_hz));
      f = axis_features(resample_to_length(ch, n), kCanonicalRateHz);
    }
    for (int k = 0; k < kFeaturesPerAxis; ++k) grid.at(k, a) = f[static_cast<size_t>(k)];
  }
  return grid;
}

FeatureGrid featurize(const GaitSegment& segment) {
  segment.validate();
  ImuWindow w;
  w.rate_hz = kCanonicalRateHz;
  w.duration = static_cast<double>(kSegmentLength) / kCanonicalRateHz;
  w.start_t = segment.start_t;
  w.data = segment.data;
  return featurize(w);
}

EnergyReport energy_report(const ImuWindow& window) {
  window.validate();
  if (window.channel_count() != 6)
    throw ModeError("energy report needs a 6-axis window");
  EnergyReport report;
  for (int a = 0; a < 6; ++a) {
    const auto& ch = window.data[static_cast<size_t>(a)];
    std::vector<double> y(ch.begin(), ch.end());
    const double mu = mean(y);
    for (auto& v : y) v -= mu;
    const auto p = welch_power(y);
    double band = 0.0;
    for (size_t k = 1; k < p.size(); ++k) band += p[k];
    (a < 3 ? report.accel : report.gyro) += band;
  }
  return report;
}

}  // namespace gait
