#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gait/errors.hpp"

namespace gait {

// One timestamped reading. Gyro fields are ignored in 3-axis mode; the
// owning stream's `axes` says how many fields are meaningful.
struct ImuSample {
  double t = 0.0;
  double ax = 0.0, ay = 0.0, az = 0.0;
  double gx = 0.0, gy = 0.0, gz = 0.0;

  double channel(int c) const {
    const std::array<const double*, 6> f{&ax, &ay, &az, &gx, &gy, &gz};
    return *f[static_cast<size_t>(c)];
  }
};

// A uniformly sampled sensor series. Timestamps live on the grid
// t0 + i / rate_hz; loaders reject jitter beyond 1% and regenerate the grid.
struct ImuStream {
  double rate_hz = 100.0;
  int axes = 6;  // 3 or 6
  double t0 = 0.0;
  std::vector<std::vector<double>> channels;  // axes x n
  std::optional<int> label;

  size_t size() const { return channels.empty() ? 0 : channels[0].size(); }
  double duration() const { return static_cast<double>(size()) / rate_hz; }
  double time_at(size_t i) const { return t0 + static_cast<double>(i) / rate_hz; }
  ImuSample sample(size_t i) const;

  // Throws InvalidInput if any invariant fails (axes, finiteness, shape).
  void validate() const;
};

// A fixed-length slice of a stream: channels x samples at a known rate.
struct ImuWindow {
  double start_t = 0.0;
  double duration = 0.0;
  double rate_hz = 100.0;
  std::vector<std::vector<double>> data;  // channels x samples

  size_t samples() const { return data.empty() ? 0 : data[0].size(); }
  int channel_count() const { return static_cast<int>(data.size()); }
  void validate() const;
};

inline constexpr size_t kSegmentLength = 128;

// One two-step gait cycle, resampled to exactly 128 samples per channel.
struct GaitSegment {
  std::vector<std::vector<double>> data;  // channels x 128
  double start_t = 0.0;
  double end_t = 0.0;
  std::optional<int> label;

  int channel_count() const { return static_cast<int>(data.size()); }
  void validate() const;
};

// A segment dataset plus the metadata the binary format stores.
struct SegmentSet {
  int axes = 6;
  double rate_hz = 100.0;
  std::vector<GaitSegment> segments;
};

// Parameterization of the synthetic gait generator. Harmonic `order` k puts
// energy at k * step_hz; gyro channels get `gyro_scale` times the amplitude
// of the corresponding profile entries.
struct Harmonic {
  int order = 1;
  double amplitude = 0.0;
  double phase = 0.0;
};

struct GaitProfile {
  double step_hz = 2.0;               // must lie in [1, 3]
  std::vector<std::vector<Harmonic>> harmonics;  // per channel (3 or 6)
  double noise_sigma = 0.0;
  int class_id = 0;
  double gyro_scale = 2.0;

  void validate() const;
};

enum class StreamFormat { csv, segments_binary };

// --- ingestion & serialization ---------------------------------------------

// CSV columns: t,ax,ay,az[,gx,gy,gz][,label]. The header row is optional on
// input and always written on output. segments-binary input is concatenated
// back into one stream (see load_segments for the format).
ImuStream load_stream(const std::string& path, StreamFormat format,
                      double rate_hz, int axes);
void save_stream(const ImuStream& stream, const std::string& path,
                 StreamFormat format);

ImuStream load_stream_csv(std::istream& in, double rate_hz, int axes,
                          const std::string& context);
void save_stream_csv(const ImuStream& stream, std::ostream& out);

// segments-binary: magic "GAIT", u16 version, u8 axes, f32 rate, u32 count,
// then per segment 128 f32 per channel (channel-major) and a u16 label
// (0xFFFF = none). Little-endian throughout; round-trips bit-exactly.
void save_segments(const SegmentSet& set, const std::string& path);
void save_segments(const SegmentSet& set, std::ostream& out);
SegmentSet load_segments(const std::string& path);
SegmentSet load_segments(std::istream& in, const std::string& context);

// --- core operations --------------------------------------------------------

// Linear interpolation onto a uniform grid over [first, last]; endpoints are
// preserved exactly and input length == n returns the input unchanged.
std::vector<double> resample_to_length(std::span<const double> series, size_t n);

// Windows start at 0, hop_s, 2*hop_s, ... relative to the stream start; a
// trailing partial window is discarded. A stream shorter than one window
// yields an empty sequence.
std::vector<ImuWindow> window_stream(const ImuStream& stream, double window_s,
                                     double hop_s);

// Deterministic per (profile, seed). Each channel is a sum of harmonics of
// step_hz plus Gaussian noise.
ImuStream synthesize_gait(const GaitProfile& profile, double duration_s,
                          double rate_hz, uint64_t seed);

// Slice [start_sample, start_sample + count) of a stream into a window.
ImuWindow slice_window(const ImuStream& stream, size_t start_sample,
                       size_t count);

}  // namespace gait
