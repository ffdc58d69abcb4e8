#include "gait/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "gait/adam.hpp"
#include "gait/errors.hpp"
#include "gait/rng.hpp"

namespace gait {
namespace {

constexpr size_t kMinScoreSamples = 64;
constexpr double kStandardizeClamp = 6.0;
constexpr double kStdFloor = 1e-6;

double channel_mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Degenerate-signal guard shared with the feature extractor's convention:
// variance at the level of float noise around a constant counts as silence.
bool is_degenerate(std::span<const double> x, double m2) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  return m2 <= 1e-18 * std::max(1.0, peak * peak);
}

// 5-sample centered moving average with shrinking edge windows.
std::vector<double> smooth5(std::span<const double> x) {
  const long n = static_cast<long>(x.size());
  std::vector<double> out(x.size());
  for (long i = 0; i < n; ++i) {
    const long lo = std::max<long>(0, i - 2), hi = std::min(n - 1, i + 2);
    double sum = 0.0;
    for (long j = lo; j <= hi; ++j) sum += x[static_cast<size_t>(j)];
    out[static_cast<size_t>(i)] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

// scipy-style prominence: the drop from the peak to the highest of the two
// minima separating it from higher terrain (or the signal edge).
double peak_prominence(std::span<const double> x, size_t p) {
  double lmin = x[p];
  for (size_t j = p; j-- > 0;) {
    if (x[j] > x[p]) break;
    lmin = std::min(lmin, x[j]);
  }
  double rmin = x[p];
  for (size_t j = p + 1; j < x.size(); ++j) {
    if (x[j] > x[p]) break;
    rmin = std::min(rmin, x[j]);
  }
  return x[p] - std::max(lmin, rmin);
}

std::vector<double> standardized_dominant(const ImuWindow& window) {
  if (window.samples() < kMinScoreSamples)
    throw InvalidInput("walking score needs at least " +
                       std::to_string(kMinScoreSamples) + " samples, window has " +
                       std::to_string(window.samples()));
  const std::vector<double>& x =
      window.data[static_cast<size_t>(dominant_channel(window))];
  const double mean = channel_mean(x);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  const double sd = std::max(std::sqrt(var), kStdFloor);
  std::vector<double> z(x.size());
  for (size_t i = 0; i < x.size(); ++i)
    z[i] = std::clamp((x[i] - mean) / sd, -kStandardizeClamp, kStandardizeClamp);
  return z;
}

}  // namespace

int dominant_channel(const ImuWindow& window) {
  window.validate();
  int best = 0;
  double best_var = -1.0;
  for (int c = 0; c < window.channel_count(); ++c) {
    const std::vector<double>& x = window.data[static_cast<size_t>(c)];
    const double mean = channel_mean(x);
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    if (var > best_var) {
      best_var = var;
      best = c;
    }
  }
  return best;
}

double score_walking(const ImuWindow& window) {
  window.validate();
  const size_t n = window.samples();
  if (n < kMinScoreSamples)
    throw InvalidInput("walking score needs at least " +
                       std::to_string(kMinScoreSamples) + " samples, window has " +
                       std::to_string(n));
  const double rate = window.rate_hz;
  const std::vector<double>& raw =
      window.data[static_cast<size_t>(dominant_channel(window))];
  const double mean = channel_mean(raw);
  std::vector<double> x(n);
  for (size_t i = 0; i < n; ++i) x[i] = raw[i] - mean;
  double total = 0.0;
  for (double v : x) total += v * v;
  if (is_degenerate(raw, total / static_cast<double>(n))) return 0.0;

  // (a) Peak unbiased autocorrelation over step-period lags (1/3 s .. 1 s,
  // capped at n/2 so at least two periods support the estimate).
  const size_t lag_lo = static_cast<size_t>(std::llround(rate / 3.0));
  const size_t lag_hi =
      std::min(static_cast<size_t>(std::llround(rate)), n / 2);
  double best_r = 0.0;
  for (size_t lag = std::max<size_t>(lag_lo, 1); lag <= lag_hi; ++lag) {
    double num = 0.0;
    for (size_t i = 0; i + lag < n; ++i) num += x[i] * x[i + lag];
    const double r = (num / static_cast<double>(n - lag)) /
                     (total / static_cast<double>(n));
    best_r = std::max(best_r, r);
  }
  best_r = std::clamp(best_r, 0.0, 1.0);

  // (b) Share of power in the 1-3 Hz band, evaluated on the window's own
  // DFT grid (bin k sits at k*rate/n Hz); Parseval gives the total.
  const long k_lo = std::max<long>(
      1, static_cast<long>(std::ceil(static_cast<double>(n) * 1.0 / rate)));
  const long k_hi =
      static_cast<long>(std::floor(static_cast<double>(n) * 3.0 / rate));
  double band = 0.0;
  for (long k = k_lo; k <= k_hi; ++k) {
    double re = 0.0, im = 0.0;
    const double w = 2.0 * std::numbers::pi * static_cast<double>(k) /
                     static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
      re += x[i] * std::cos(w * static_cast<double>(i));
      im -= x[i] * std::sin(w * static_cast<double>(i));
    }
    const double one_sided = 2 * static_cast<size_t>(k) == n ? 1.0 : 2.0;
    band += one_sided * (re * re + im * im);
  }
  const double ratio =
      std::clamp(band / (static_cast<double>(n) * total), 0.0, 1.0);

  return std::clamp(0.5 * (best_r + ratio), 0.0, 1.0);
}

// --- learned detector --------------------------------------------------------

namespace {

// Parameter layout of the 1-D detector (all offsets in floats).
constexpr int kF = WalkDetector::kFilters;
constexpr int kK = WalkDetector::kKernel;
constexpr int kHalf = kK / 2;
constexpr size_t kC1w = 0;                       // [kF][kK]
constexpr size_t kC1b = kC1w + kF * kK;          // [kF]
constexpr size_t kC2w = kC1b + kF;               // [kF][kF][kK]
constexpr size_t kC2b = kC2w + kF * kF * kK;     // [kF]
constexpr size_t kDw = kC2b + kF;                // [2][kF]
constexpr size_t kDb = kDw + 2 * kF;             // [2]
constexpr size_t kDetectorParams = kDb + 2;

struct DetectorActs {
  std::vector<double> h1_pre, h1;  // kF x n
  std::vector<double> h2_pre, h2;  // kF x n
  std::array<double, kF> gap;
  std::array<double, 2> logits, probs;
};

void detector_forward(std::span<const float> p, std::span<const double> z,
                      DetectorActs& a) {
  const long n = static_cast<long>(z.size());
  a.h1_pre.assign(static_cast<size_t>(kF) * static_cast<size_t>(n), 0.0);
  a.h1 = a.h1_pre;
  for (int f = 0; f < kF; ++f) {
    const size_t wb = kC1w + static_cast<size_t>(f * kK);
    for (long t = 0; t < n; ++t) {
      double acc = p[kC1b + static_cast<size_t>(f)];
      for (int k = 0; k < kK; ++k) {
        const long s = t + k - kHalf;
        if (s < 0 || s >= n) continue;
        acc += static_cast<double>(p[wb + static_cast<size_t>(k)]) *
               z[static_cast<size_t>(s)];
      }
      const size_t idx = static_cast<size_t>(f) * static_cast<size_t>(n) +
                         static_cast<size_t>(t);
      a.h1_pre[idx] = acc;
      a.h1[idx] = std::max(acc, 0.0);
    }
  }
  a.h2_pre.assign(static_cast<size_t>(kF) * static_cast<size_t>(n), 0.0);
  a.h2 = a.h2_pre;
  for (int g = 0; g < kF; ++g) {
    for (long t = 0; t < n; ++t) {
      double acc = p[kC2b + static_cast<size_t>(g)];
      for (int f = 0; f < kF; ++f) {
        const size_t wb =
            kC2w + static_cast<size_t>((g * kF + f) * kK);
        const size_t fb = static_cast<size_t>(f) * static_cast<size_t>(n);
        for (int k = 0; k < kK; ++k) {
          const long s = t + k - kHalf;
          if (s < 0 || s >= n) continue;
          acc += static_cast<double>(p[wb + static_cast<size_t>(k)]) *
                 a.h1[fb + static_cast<size_t>(s)];
        }
      }
      const size_t idx = static_cast<size_t>(g) * static_cast<size_t>(n) +
                         static_cast<size_t>(t);
      a.h2_pre[idx] = acc;
      a.h2[idx] = std::max(acc, 0.0);
    }
  }
  for (int g = 0; g < kF; ++g) {
    const size_t gb = static_cast<size_t>(g) * static_cast<size_t>(n);
    double sum = 0.0;
    for (long t = 0; t < n; ++t) sum += a.h2[gb + static_cast<size_t>(t)];
    a.gap[static_cast<size_t>(g)] = sum / static_cast<double>(n);
  }
  for (int o = 0; o < 2; ++o) {
    double acc = p[kDb + static_cast<size_t>(o)];
    for (int g = 0; g < kF; ++g)
      acc += static_cast<double>(p[kDw + static_cast<size_t>(o * kF + g)]) *
             a.gap[static_cast<size_t>(g)];
    a.logits[static_cast<size_t>(o)] = acc;
  }
  const double m = std::max(a.logits[0], a.logits[1]);
  const double e0 = std::exp(a.logits[0] - m), e1 = std::exp(a.logits[1] - m);
  a.probs = {e0 / (e0 + e1), e1 / (e0 + e1)};
}

// Accumulates dLoss/dParam for one sample; returns the cross-entropy loss.
double detector_backward(std::span<const float> p, std::span<const double> z,
                         const DetectorActs& a, int label,
                         std::span<double> grads) {
  const long n = static_cast<long>(z.size());
  std::array<double, 2> dlogit{};
  for (int o = 0; o < 2; ++o)
    dlogit[static_cast<size_t>(o)] =
        a.probs[static_cast<size_t>(o)] - (o == label ? 1.0 : 0.0);
  for (int o = 0; o < 2; ++o) {
    grads[kDb + static_cast<size_t>(o)] += dlogit[static_cast<size_t>(o)];
    for (int g = 0; g < kF; ++g)
      grads[kDw + static_cast<size_t>(o * kF + g)] +=
          dlogit[static_cast<size_t>(o)] * a.gap[static_cast<size_t>(g)];
  }
  // dL/dh2[g][t] = dgap[g]/n through the average pool, masked by ReLU.
  std::vector<double> dh2(static_cast<size_t>(kF) * static_cast<size_t>(n), 0.0);
  for (int g = 0; g < kF; ++g) {
    double dgap = 0.0;
    for (int o = 0; o < 2; ++o)
      dgap += dlogit[static_cast<size_t>(o)] *
              static_cast<double>(p[kDw + static_cast<size_t>(o * kF + g)]);
    const double per_t = dgap / static_cast<double>(n);
    const size_t gb = static_cast<size_t>(g) * static_cast<size_t>(n);
    for (long t = 0; t < n; ++t) {
      const size_t idx = gb + static_cast<size_t>(t);
      if (a.h2_pre[idx] > 0.0) dh2[idx] = per_t;
    }
  }
  std::vector<double> dh1(static_cast<size_t>(kF) * static_cast<size_t>(n), 0.0);
  for (int g = 0; g < kF; ++g) {
    const size_t gb = static_cast<size_t>(g) * static_cast<size_t>(n);
    grads[kC2b + static_cast<size_t>(g)] +=
        std::accumulate(dh2.begin() + static_cast<long>(gb),
                        dh2.begin() + static_cast<long>(gb) + n, 0.0);
    for (int f = 0; f < kF; ++f) {
      const size_t wb = kC2w + static_cast<size_t>((g * kF + f) * kK);
      const size_t fb = static_cast<size_t>(f) * static_cast<size_t>(n);
      for (int k = 0; k < kK; ++k) {
        double dw = 0.0;
        for (long t = 0; t < n; ++t) {
          const long s = t + k - kHalf;
          if (s < 0 || s >= n) continue;
          const double d = dh2[gb + static_cast<size_t>(t)];
          if (d != 0.0) {
            dw += d * a.h1[fb + static_cast<size_t>(s)];
            dh1[fb + static_cast<size_t>(s)] +=
                d * static_cast<double>(p[wb + static_cast<size_t>(k)]);
          }
        }
        grads[wb + static_cast<size_t>(k)] += dw;
      }
    }
  }
  for (int f = 0; f < kF; ++f) {
    const size_t fb = static_cast<size_t>(f) * static_cast<size_t>(n);
    const size_t wb = kC1w + static_cast<size_t>(f * kK);
    for (long t = 0; t < n; ++t) {
      const size_t idx = fb + static_cast<size_t>(t);
      if (a.h1_pre[idx] <= 0.0 || dh1[idx] == 0.0) continue;
      const double d = dh1[idx];
      grads[kC1b + static_cast<size_t>(f)] += d;
      for (int k = 0; k < kK; ++k) {
        const long s = t + k - kHalf;
        if (s < 0 || s >= n) continue;
        grads[wb + static_cast<size_t>(k)] += d * z[static_cast<size_t>(s)];
      }
    }
  }
  return -std::log(std::max(a.probs[static_cast<size_t>(label)], 1e-300));
}

}  // namespace

WalkDetector::WalkDetector(uint64_t seed) : params_(kDetectorParams, 0.0f) {
  Rng rng(seed);
  auto he = [&](size_t off, size_t count, int fan_in) {
    const double lim = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (size_t i = 0; i < count; ++i)
      params_[off + i] = static_cast<float>(rng.uniform(-lim, lim));
  };
  he(kC1w, static_cast<size_t>(kF * kK), kK);
  he(kC2w, static_cast<size_t>(kF * kF * kK), kF * kK);
  he(kDw, static_cast<size_t>(2 * kF), kF);
}

std::vector<WalkDetector::EpochStat> WalkDetector::fit(
    std::span<const ImuWindow> windows, std::span<const int> labels, int epochs,
    double learning_rate, uint64_t seed) {
  if (windows.empty() || windows.size() != labels.size())
    throw InvalidInput("detector training needs matching windows and labels");
  for (int y : labels)
    if (y != 0 && y != 1)
      throw InvalidInput("detector labels must be 0 (idle) or 1 (walking)");
  if (epochs <= 0 || !(learning_rate > 0.0))
    throw InvalidInput("detector training needs positive epochs and learning rate");

  std::vector<std::vector<double>> zs(windows.size());
  for (size_t i = 0; i < windows.size(); ++i)
    zs[i] = standardized_dominant(windows[i]);

  Rng rng(seed);
  Adam opt(learning_rate, 0.9, 0.999, 1e-7, params_.size());
  std::vector<size_t> order(windows.size());
  std::iota(order.begin(), order.end(), size_t{0});
  constexpr size_t kBatch = 16;
  std::vector<double> grads(params_.size());
  std::vector<EpochStat> history;
  DetectorActs acts;
  for (int e = 0; e < epochs; ++e) {
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.bounded(i)]);
    double loss_sum = 0.0;
    size_t batches = 0;
    for (size_t b = 0; b < order.size(); b += kBatch) {
      const size_t count = std::min(kBatch, order.size() - b);
      std::fill(grads.begin(), grads.end(), 0.0);
      double batch_loss = 0.0;
      for (size_t j = 0; j < count; ++j) {
        const size_t s = order[b + j];
        detector_forward(params_, zs[s], acts);
        batch_loss += detector_backward(params_, zs[s], acts, labels[s], grads);
      }
      for (double& g : grads) g /= static_cast<double>(count);
      opt.step(params_, grads);
      loss_sum += batch_loss / static_cast<double>(count);
      ++batches;
    }
    EpochStat st;
    st.loss = loss_sum / static_cast<double>(batches);
    size_t hits = 0;
    for (size_t i = 0; i < windows.size(); ++i) {
      detector_forward(params_, zs[i], acts);
      hits += (acts.probs[1] > acts.probs[0] ? 1 : 0) == labels[i] ? 1 : 0;
    }
    st.accuracy = static_cast<double>(hits) / static_cast<double>(windows.size());
    history.push_back(st);
  }
  return history;
}

double WalkDetector::score(const ImuWindow& window) const {
  const std::vector<double> z = standardized_dominant(window);
  DetectorActs acts;
  detector_forward(params_, z, acts);
  return acts.probs[1];
}

double score_walking(const ImuWindow& window, const WalkDetector& detector) {
  return detector.score(window);
}

// --- interval extraction ------------------------------------------------------

std::vector<Interval> extract_walking_intervals(const ImuStream& stream,
                                                double threshold,
                                                double min_duration_s,
                                                const WalkDetector* detector) {
  stream.validate();
  if (!(threshold > 0.0) || !(threshold < 1.0))
    throw InvalidInput("walking threshold must lie strictly between 0 and 1");
  if (min_duration_s < 0.0)
    throw InvalidInput("minimum interval duration cannot be negative");

  const double rate = stream.rate_hz;
  // Nominal 1 s windows, hop 0.5 s; low-rate streams are widened so the
  // scorer's 64-sample floor always holds.
  const size_t W = std::max<size_t>(
      static_cast<size_t>(std::llround(rate)), kMinScoreSamples);
  const size_t H = std::max<size_t>(
      static_cast<size_t>(std::llround(rate / 2.0)), 1);
  const size_t n = stream.size();
  std::vector<Interval> out;
  if (n < W) return out;

  const size_t count = (n - W) / H + 1;
  std::vector<std::pair<size_t, size_t>> ranges;  // [start, end) samples
  for (size_t k = 0; k < count; ++k) {
    const ImuWindow win = slice_window(stream, k * H, W);
    const double s = detector ? detector->score(win) : score_walking(win);
    if (s > threshold) {
      if (!ranges.empty() && ranges.back().second > k * H)
        ranges.back().second = k * H + W;  // extend the running merge
      else
        ranges.emplace_back(k * H, k * H + W);
    }
  }
  for (const auto& [s, e] : ranges) {
    if (static_cast<double>(e - s) / rate < min_duration_s) continue;
    Interval iv;
    iv.start_t = stream.t0 + static_cast<double>(s) / rate;
    iv.end_t = stream.t0 + static_cast<double>(e) / rate;
    iv.kind = IntervalKind::walking;
    out.push_back(iv);
  }
  return out;
}

PeakList detect_step_peaks(const ImuWindow& interval, double min_distance_s,
                           double prominence_frac) {
  interval.validate();
  if (!(min_distance_s > 0.0))
    throw InvalidInput("peak minimum distance must be positive");
  if (prominence_frac < 0.0)
    throw InvalidInput("prominence fraction cannot be negative");
  const size_t n = interval.samples();
  if (static_cast<double>(n) < interval.rate_hz)
    throw InvalidInput("peak detection needs at least one second of data");

  const std::vector<double> sm =
      smooth5(interval.data[static_cast<size_t>(dominant_channel(interval))]);
  const auto [lo_it, hi_it] = std::minmax_element(sm.begin(), sm.end());
  const double floor = prominence_frac * (*hi_it - *lo_it);

  std::vector<std::pair<size_t, double>> cands;  // (index, prominence)
  for (size_t i = 1; i + 1 < n; ++i) {
    if (!(sm[i] > sm[i - 1] && sm[i] >= sm[i + 1])) continue;
    const double prom = peak_prominence(sm, i);
    if (prom > floor) cands.emplace_back(i, prom);
  }
  std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  const size_t min_dist = std::max<size_t>(
      1, static_cast<size_t>(std::llround(min_distance_s * interval.rate_hz)));
  std::vector<std::pair<size_t, double>> kept;
  for (const auto& c : cands) {
    const bool clear = std::none_of(kept.begin(), kept.end(), [&](const auto& k) {
      const size_t d = c.first > k.first ? c.first - k.first : k.first - c.first;
      return d < min_dist;
    });
    if (clear) kept.push_back(c);
  }
  std::sort(kept.begin(), kept.end());
  PeakList peaks;
  for (const auto& [idx, prom] : kept) {
    peaks.indices.push_back(idx);
    peaks.prominences.push_back(prom);
  }
  return peaks;
}

std::vector<GaitSegment> split_two_step_segments(const ImuWindow& interval,
                                                 const PeakList& peaks,
                                                 double cv_max) {
  interval.validate();
  if (cv_max < 0.0) throw InvalidInput("cv_max cannot be negative");
  std::vector<GaitSegment> out;
  if (peaks.size() < 3) return out;
  const size_t n = interval.samples();
  if (peaks.indices.back() >= n)
    throw InvalidInput("peak index exceeds the interval length");

  std::vector<double> gaps(peaks.size() - 1);
  for (size_t j = 0; j + 1 < peaks.size(); ++j)
    gaps[j] = static_cast<double>(peaks.indices[j + 1] - peaks.indices[j]);
  std::vector<double> sorted = gaps;
  std::sort(sorted.begin(), sorted.end());
  const size_t mid = sorted.size() / 2;
  const double median = sorted.size() % 2 == 1
                            ? sorted[mid]
                            : 0.5 * (sorted[mid - 1] + sorted[mid]);

  for (size_t i = 0; i + 2 < peaks.size(); ++i) {
    const double g1 = gaps[i], g2 = gaps[i + 1];
    const double cv = std::sqrt(((g1 - median) * (g1 - median) +
                                 (g2 - median) * (g2 - median)) /
                                2.0) /
                      median;
    if (cv > cv_max) continue;  // atypical stride
    const size_t a = peaks.indices[i], b = peaks.indices[i + 2];
    GaitSegment seg;
    seg.start_t = interval.start_t + static_cast<double>(a) / interval.rate_hz;
    seg.end_t = interval.start_t + static_cast<double>(b) / interval.rate_hz;
    seg.data.reserve(interval.data.size());
    for (const std::vector<double>& ch : interval.data) {
      const std::span<const double> slice(ch.data() + a, b - a + 1);
      seg.data.push_back(resample_to_length(slice, kSegmentLength));
    }
    out.push_back(std::move(seg));
  }
  return out;
}

SegmentSet segment_stream(const ImuStream& stream,
                          const SegmentationOptions& opts) {
  SegmentSet set;
  set.axes = stream.axes;
  set.rate_hz = stream.rate_hz;
  const std::vector<Interval> intervals = extract_walking_intervals(
      stream, opts.threshold, opts.min_duration_s, opts.detector);
  for (const Interval& iv : intervals) {
    const size_t start = static_cast<size_t>(
        std::llround((iv.start_t - stream.t0) * stream.rate_hz));
    const size_t count =
        static_cast<size_t>(std::llround(iv.duration() * stream.rate_hz));
    const ImuWindow win = slice_window(stream, start, count);
    const PeakList peaks =
        detect_step_peaks(win, opts.min_distance_s, opts.prominence_frac);
    if (peaks.size() < 3) continue;
    for (GaitSegment& seg : split_two_step_segments(win, peaks, opts.cv_max)) {
      seg.label = stream.label;
      set.segments.push_back(std::move(seg));
    }
  }
  return set;
}

}  // namespace gait
