#include "gait/imu.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "gait/binio.hpp"
#include "gait/rng.hpp"

namespace gait {

namespace {

constexpr uint16_t kSegmentsVersion = 1;
constexpr uint16_t kNoLabel = 0xFFFF;

bool finite(double v) { return std::isfinite(v); }

// Split a CSV line on commas; fields are trimmed of surrounding whitespace.
std::vector<std::string_view> split_fields(std::string_view line,
                                           std::vector<std::string_view>& out) {
  out.clear();
  size_t pos = 0;
  while (true) {
    size_t comma = line.find(',', pos);
    std::string_view field = comma == std::string_view::npos
                                 ? line.substr(pos)
                                 : line.substr(pos, comma - pos);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t'))
      field.remove_prefix(1);
    while (!field.empty() &&
           (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
      field.remove_suffix(1);
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

double parse_number(std::string_view field, const std::string& context,
                    size_t line_no, const char* what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ParseError(context + ":" + std::to_string(line_no) + ": bad " + what +
                     " '" + std::string(field) + "'");
  if (!finite(v))
    throw ParseError(context + ":" + std::to_string(line_no) +
                     ": non-finite " + what);
  return v;
}

long parse_label(std::string_view field, const std::string& context,
                 size_t line_no) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || v < 0)
    throw ParseError(context + ":" + std::to_string(line_no) + ": bad label '" +
                     std::string(field) + "'");
  return v;
}

bool looks_like_header(const std::vector<std::string_view>& fields) {
  if (fields.empty()) return false;
  double v = 0.0;
  auto f = fields[0];
  auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  return ec != std::errc() || ptr != f.data() + f.size();
}

}  // namespace

ImuSample ImuStream::sample(size_t i) const {
  ImuSample s;
  s.t = time_at(i);
  const std::array<double*, 6> f{&s.ax, &s.ay, &s.az, &s.gx, &s.gy, &s.gz};
  for (int c = 0; c < axes; ++c) *f[static_cast<size_t>(c)] = channels[static_cast<size_t>(c)][i];
  return s;
}

void ImuStream::validate() const {
  if (axes != 3 && axes != 6)
    throw InvalidInput("stream axes must be 3 or 6, got " + std::to_string(axes));
  if (!(rate_hz > 0.0) || !finite(rate_hz))
    throw InvalidInput("stream rate must be positive and finite");
  if (channels.size() != static_cast<size_t>(axes))
    throw InvalidInput("stream has " + std::to_string(channels.size()) +
                       " channels but axes=" + std::to_string(axes));
  const size_t n = size();
  for (size_t c = 0; c < channels.size(); ++c) {
    if (channels[c].size() != n)
      throw InvalidInput("stream channel " + std::to_string(c) +
                         " length mismatch");
    for (double v : channels[c])
      if (!finite(v)) throw InvalidInput("stream contains non-finite sample");
  }
}

void ImuWindow::validate() const {
  if (data.empty()) throw InvalidInput("window has no channels");
  if (!(rate_hz > 0.0) || !finite(rate_hz))
    throw InvalidInput("window rate must be positive and finite");
  const size_t n = data[0].size();
  if (n == 0) throw InvalidInput("window has no samples");
  for (const auto& ch : data) {
    if (ch.size() != n) throw InvalidInput("window channel length mismatch");
    for (double v : ch)
      if (!finite(v)) throw InvalidInput("window contains non-finite sample");
  }
}

void GaitSegment::validate() const {
  if (data.empty()) throw InvalidInput("segment has no channels");
  for (const auto& ch : data) {
    if (ch.size() != kSegmentLength)
      throw InvalidInput("segment channel length must be 128, got " +
                         std::to_string(ch.size()));
    for (double v : ch)
      if (!finite(v)) throw InvalidInput("segment contains non-finite sample");
  }
}

void GaitProfile::validate() const {
  if (!(step_hz >= 1.0 && step_hz <= 3.0))
    throw InvalidInput("profile step_hz must lie in [1, 3], got " +
                       std::to_string(step_hz));
  if (harmonics.size() != 3 && harmonics.size() != 6)
    throw InvalidInput("profile must define 3 or 6 channels");
  if (!(noise_sigma >= 0.0) || !finite(noise_sigma))
    throw InvalidInput("profile noise_sigma must be non-negative");
  for (const auto& ch : harmonics)
    for (const auto& h : ch) {
      if (h.order < 1) throw InvalidInput("harmonic order must be >= 1");
      if (!finite(h.amplitude) || !finite(h.phase))
        throw InvalidInput("harmonic parameters must be finite");
    }
}

// --- CSV --------------------------------------------------------------------

ImuStream load_stream_csv(std::istream& in, double rate_hz, int axes,
                          const std::string& context) {
  if (axes != 3 && axes != 6)
    throw InvalidInput("axes must be 3 or 6, got " + std::to_string(axes));
  if (!(rate_hz > 0.0))
    throw InvalidInput("rate must be positive");

  ImuStream stream;
  stream.rate_hz = rate_hz;
  stream.axes = axes;
  stream.channels.assign(static_cast<size_t>(axes), {});

  const size_t base_cols = 1 + static_cast<size_t>(axes);
  std::vector<double> times;
  std::vector<std::string_view> fields;
  std::string line;
  size_t line_no = 0;
  bool saw_label_col = false;
  std::optional<long> label;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv(line);
    if (!sv.empty() && sv.back() == '\r') sv.remove_suffix(1);
    if (sv.empty()) continue;
    split_fields(sv, fields);
    if (line_no == 1 && looks_like_header(fields)) continue;

    if (fields.size() != base_cols && fields.size() != base_cols + 1)
      throw ParseError(context + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(base_cols) + " or " +
                       std::to_string(base_cols + 1) + " columns, got " +
                       std::to_string(fields.size()));

    times.push_back(parse_number(fields[0], context, line_no, "timestamp"));
    for (int c = 0; c < axes; ++c)
      stream.channels[static_cast<size_t>(c)].push_back(
          parse_number(fields[static_cast<size_t>(c) + 1], context, line_no, "sample"));

    const bool has_label = fields.size() == base_cols + 1;
    if (times.size() == 1) {
      saw_label_col = has_label;
    } else if (has_label != saw_label_col) {
      throw ParseError(context + ":" + std::to_string(line_no) +
                       ": inconsistent label column");
    }
    if (has_label) {
      long v = parse_label(fields[base_cols], context, line_no);
      if (label && *label != v)
        throw ParseError(context + ":" + std::to_string(line_no) +
                         ": conflicting labels in one stream");
      label = v;
    }
  }

  if (times.empty()) throw FormatError(context + ": no samples");

  // Verify timestamps sit on a uniform grid (1% of the sample period), then
  // regenerate them from (t0, rate) so downstream code never sees jitter.
  stream.t0 = times[0];
  const double period = 1.0 / rate_hz;
  for (size_t i = 0; i < times.size(); ++i) {
    const double expected = stream.t0 + static_cast<double>(i) * period;
    if (std::abs(times[i] - expected) > 0.01 * period)
      throw FormatError(context + ": timestamp " + std::to_string(times[i]) +
                        " at row " + std::to_string(i) +
                        " deviates from a uniform " + std::to_string(rate_hz) +
                        " Hz grid by more than 1%");
  }

  if (label) stream.label = static_cast<int>(*label);
  stream.validate();
  return stream;
}

void save_stream_csv(const ImuStream& stream, std::ostream& out) {
  stream.validate();
  out << "t,ax,ay,az";
  if (stream.axes == 6) out << ",gx,gy,gz";
  if (stream.label) out << ",label";
  out << "\n";
  out.precision(10);
  const size_t n = stream.size();
  for (size_t i = 0; i < n; ++i) {
    out << stream.time_at(i);
    for (int c = 0; c < stream.axes; ++c) out << ',' << stream.channels[static_cast<size_t>(c)][i];
    if (stream.label) out << ',' << *stream.label;
    out << "\n";
  }
  if (!out) throw DataError("failed writing csv stream");
}

// --- segments-binary --------------------------------------------------------

void save_segments(const SegmentSet& set, std::ostream& out) {
  if (set.axes != 3 && set.axes != 6)
    throw InvalidInput("segment set axes must be 3 or 6");
  if (!(set.rate_hz > 0.0)) throw InvalidInput("segment set rate must be positive");
  for (const auto& seg : set.segments) {
    seg.validate();
    if (seg.channel_count() != set.axes)
      throw InvalidInput("segment channel count does not match set axes");
    if (seg.label && (*seg.label < 0 || *seg.label >= kNoLabel))
      throw InvalidInput("segment label out of range for on-disk format");
  }

  binio::Writer w(out);
  w.magic("GAIT");
  w.u16(kSegmentsVersion);
  w.u8(static_cast<uint8_t>(set.axes));
  w.f32(static_cast<float>(set.rate_hz));
  w.u32(static_cast<uint32_t>(set.segments.size()));
  for (const auto& seg : set.segments) {
    for (const auto& ch : seg.data)
      for (double v : ch) w.f32(static_cast<float>(v));
    w.u16(seg.label ? static_cast<uint16_t>(*seg.label) : kNoLabel);
  }
  if (!out) throw DataError("failed writing segments file");
}

void save_segments(const SegmentSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  save_segments(set, out);
}

SegmentSet load_segments(std::istream& in, const std::string& context) {
  binio::Reader r(in, context);
  r.expect_magic("GAIT");
  const uint16_t version = r.u16();
  if (version != kSegmentsVersion)
    throw FormatError(context + ": unsupported segments version " +
                      std::to_string(version));
  SegmentSet set;
  set.axes = r.u8();
  if (set.axes != 3 && set.axes != 6)
    throw FormatError(context + ": axes must be 3 or 6, got " +
                      std::to_string(set.axes));
  set.rate_hz = r.f32();
  if (!(set.rate_hz > 0.0) || !std::isfinite(set.rate_hz))
    throw FormatError(context + ": bad sample rate");
  const uint32_t count = r.u32();
  set.segments.reserve(count);
  for (uint32_t s = 0; s < count; ++s) {
    GaitSegment seg;
    seg.data.assign(static_cast<size_t>(set.axes),
                    std::vector<double>(kSegmentLength));
    for (auto& ch : seg.data)
      for (auto& v : ch) v = r.f32();
    const uint16_t label = r.u16();
    if (label != kNoLabel) seg.label = label;
    seg.start_t = static_cast<double>(s) * kSegmentLength / set.rate_hz;
    seg.end_t = seg.start_t + kSegmentLength / set.rate_hz;
    seg.validate();
    set.segments.push_back(std::move(seg));
  }
  if (!r.at_eof())
    throw FormatError(context + ": trailing bytes after segment data");
  return set;
}

SegmentSet load_segments(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return load_segments(in, path);
}

// --- top-level stream IO ----------------------------------------------------

ImuStream load_stream(const std::string& path, StreamFormat format,
                      double rate_hz, int axes) {
  if (format == StreamFormat::csv) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return load_stream_csv(in, rate_hz, axes, path);
  }
  // Concatenate the segments of a binary file back into one stream. The
  // caller's rate/axes are advisory here; the file is authoritative.
  SegmentSet set = load_segments(path);
  ImuStream stream;
  stream.rate_hz = set.rate_hz;
  stream.axes = set.axes;
  stream.channels.assign(static_cast<size_t>(set.axes), {});
  std::optional<int> label;
  bool uniform = true;
  for (size_t s = 0; s < set.segments.size(); ++s) {
    const auto& seg = set.segments[s];
    for (int c = 0; c < set.axes; ++c)
      stream.channels[static_cast<size_t>(c)].insert(stream.channels[static_cast<size_t>(c)].end(),
                                seg.data[static_cast<size_t>(c)].begin(), seg.data[static_cast<size_t>(c)].end());
    if (s == 0)
      label = seg.label;
    else if (seg.label != label)
      uniform = false;
  }
  if (stream.size() == 0) throw FormatError(path + ": no segments");
  if (uniform) stream.label = label;
  stream.validate();
  return stream;
}

void save_stream(const ImuStream& stream, const std::string& path,
                 StreamFormat format) {
  if (format == StreamFormat::csv) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    save_stream_csv(stream, out);
    return;
  }
  stream.validate();
  if (stream.size() % kSegmentLength != 0)
    throw InvalidInput("stream length " + std::to_string(stream.size()) +
                       " is not a multiple of 128; cannot store as segments");
  SegmentSet set;
  set.axes = stream.axes;
  set.rate_hz = stream.rate_hz;
  const size_t count = stream.size() / kSegmentLength;
  for (size_t s = 0; s < count; ++s) {
    GaitSegment seg;
    seg.label = stream.label;
    seg.start_t = stream.t0 + static_cast<double>(s) * kSegmentLength / stream.rate_hz;
    seg.end_t = seg.start_t + kSegmentLength / stream.rate_hz;
    for (int c = 0; c < stream.axes; ++c) {
      const auto& ch = stream.channels[static_cast<size_t>(c)];
      seg.data.emplace_back(ch.begin() + static_cast<long>(s * kSegmentLength),
                            ch.begin() + static_cast<long>((s + 1) * kSegmentLength));
    }
    set.segments.push_back(std::move(seg));
  }
  save_segments(set, path);
}

// --- resampling & windowing -------------------------------------------------

std::vector<double> resample_to_length(std::span<const double> series, size_t n) {
  if (series.empty()) throw InvalidInput("cannot resample an empty series");
  if (n == 0) throw InvalidInput("cannot resample to zero samples");
  const size_t m = series.size();
  if (m == n) return {series.begin(), series.end()};
  std::vector<double> out(n);
  if (m == 1) {
    std::fill(out.begin(), out.end(), series[0]);
    return out;
  }
  if (n == 1) {
    out[0] = series[0];
    return out;
  }
  // Map output index i to source position i * (m-1) / (n-1); endpoints land
  // exactly on the first and last input samples.
  const double scale = static_cast<double>(m - 1) / static_cast<double>(n - 1);
  for (size_t i = 0; i < n; ++i) {
    const double pos = static_cast<double>(i) * scale;
    size_t lo = static_cast<size_t>(pos);
    if (lo >= m - 1) {
      out[i] = series[m - 1];
      continue;
    }
    const double frac = pos - static_cast<double>(lo);
    out[i] = series[lo] + frac * (series[lo + 1] - series[lo]);
  }
  return out;
}

std::vector<ImuWindow> window_stream(const ImuStream& stream, double window_s,
                                     double hop_s) {
  stream.validate();
  if (!(window_s > 0.0) || !(hop_s > 0.0))
    throw InvalidInput("window and hop must be positive");
  const size_t w = static_cast<size_t>(std::llround(window_s * stream.rate_hz));
  if (w == 0) throw InvalidInput("window shorter than one sample");
  std::vector<ImuWindow> out;
  const size_t n = stream.size();
  for (size_t k = 0;; ++k) {
    const size_t start =
        static_cast<size_t>(std::llround(static_cast<double>(k) * hop_s * stream.rate_hz));
    if (start + w > n) break;
    out.push_back(slice_window(stream, start, w));
  }
  return out;
}

ImuWindow slice_window(const ImuStream& stream, size_t start_sample,
                       size_t count) {
  if (count == 0) throw InvalidInput("window slice needs at least one sample");
  if (start_sample + count > stream.size())
    throw InvalidInput("window slice out of range");
  ImuWindow w;
  w.start_t = stream.time_at(start_sample);
  w.rate_hz = stream.rate_hz;
  w.duration = static_cast<double>(count) / stream.rate_hz;
  for (const auto& ch : stream.channels)
    w.data.emplace_back(ch.begin() + static_cast<long>(start_sample),
                        ch.begin() + static_cast<long>(start_sample + count));
  return w;
}

// --- synthesis ---------------------------------------------------------------

ImuStream synthesize_gait(const GaitProfile& profile, double duration_s,
                          double rate_hz, uint64_t seed) {
  profile.validate();
  if (!(duration_s > 0.0)) throw InvalidInput("duration must be positive");
  if (!(rate_hz > 0.0)) throw InvalidInput("rate must be positive");

  const size_t n = static_cast<size_t>(std::llround(duration_s * rate_hz));
  if (n == 0) throw InvalidInput("duration shorter than one sample");

  ImuStream stream;
  stream.rate_hz = rate_hz;
  stream.axes = static_cast<int>(profile.harmonics.size());
  stream.label = profile.class_id;
  stream.channels.assign(profile.harmonics.size(), std::vector<double>(n, 0.0));

  Rng rng(seed);
  for (size_t c = 0; c < profile.harmonics.size(); ++c) {
    auto& ch = stream.channels[c];
    const double scale = c >= 3 ? profile.gyro_scale : 1.0;
    for (size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / rate_hz;
      double v = 0.0;
      for (const auto& h : profile.harmonics[c])
        v += scale * h.amplitude *
             std::sin(2.0 * std::numbers::pi * h.order * profile.step_hz * t +
                      h.phase);
      ch[i] = v;
    }
    if (profile.noise_sigma > 0.0)
      for (size_t i = 0; i < n; ++i)
        ch[i] += rng.normal(0.0, profile.noise_sigma);
  }
  return stream;
}

}  // namespace gait
