#include "gait/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gait/errors.hpp"
#include "gait/rng.hpp"

namespace gait {

void Dataset::validate() const {
  if (X.size() != y.size())
    throw InvalidInput("dataset has " + std::to_string(X.size()) +
                       " grids but " + std::to_string(y.size()) + " labels");
  for (size_t i = 0; i < X.size(); ++i) {
    if (y[i] < 0) throw InvalidInput("negative label at sample " + std::to_string(i));
    if (X[i].axes != X[0].axes || X[i].size() != X[0].size())
      throw InvalidInput("mixed grid shapes in one dataset");
    for (double v : X[i].values)
      if (!std::isfinite(v)) throw InvalidInput("non-finite feature value");
  }
}

void save_feature_csv(const Dataset& ds, std::ostream& out) {
  ds.validate();
  if (ds.size() == 0) throw InvalidInput("refusing to write an empty dataset");
  const size_t width = ds.X[0].size();
  // The on-disk exchange format is pinned to the 13-per-axis grid.
  if (width != static_cast<size_t>(kFeaturesPerAxis * ds.X[0].axes) ||
      (ds.X[0].axes != 3 && ds.X[0].axes != 6))
    throw InvalidInput("feature csv requires 13x3 or 13x6 grids");
  for (size_t k = 0; k < width; ++k) out << 'f' << k << ',';
  out << "label\n";
  out.precision(12);
  for (size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.X[i].values) out << v << ',';
    out << ds.y[i] << "\n";
  }
  if (!out) throw DataError("failed writing feature csv");
}

void save_feature_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  save_feature_csv(ds, out);
}

Dataset load_feature_csv(std::istream& in, const std::string& context) {
  Dataset ds;
  std::string line;
  size_t line_no = 0;
  size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("f0,", 0) == 0) continue;  // header

    std::vector<double> values;
    size_t pos = 0;
    while (pos <= line.size()) {
      size_t comma = line.find(',', pos);
      const std::string_view field =
          comma == std::string::npos
              ? std::string_view(line).substr(pos)
              : std::string_view(line).substr(pos, comma - pos);
      double v = 0.0;
      auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || p != field.data() + field.size() || !std::isfinite(v))
        throw ParseError(context + ":" + std::to_string(line_no) +
                         ": bad value '" + std::string(field) + "'");
      values.push_back(v);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (values.size() < 2)
      throw ParseError(context + ":" + std::to_string(line_no) + ": too few columns");

    const double label_v = values.back();
    values.pop_back();
    if (label_v < 0 || label_v != std::floor(label_v))
      throw ParseError(context + ":" + std::to_string(line_no) +
                       ": label must be a non-negative integer");
    if (width == 0) {
      width = values.size();
      if (width % static_cast<size_t>(kFeaturesPerAxis) != 0)
        throw FormatError(context + ": " + std::to_string(width) +
                          " feature columns is not a multiple of 13");
      const size_t axes = width / static_cast<size_t>(kFeaturesPerAxis);
      if (axes != 3 && axes != 6)
        throw FormatError(context + ": feature width implies " +
                          std::to_string(axes) + " axes; expected 3 or 6");
    } else if (values.size() != width) {
      throw ParseError(context + ":" + std::to_string(line_no) +
                       ": inconsistent column count");
    }

    FeatureGrid g;
    g.axes = static_cast<int>(width) / kFeaturesPerAxis;
    g.values = std::move(values);
    ds.X.push_back(std::move(g));
    ds.y.push_back(static_cast<int>(label_v));
  }
  if (ds.size() == 0) throw FormatError(context + ": no samples");
  ds.validate();
  return ds;
}

Dataset load_feature_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return load_feature_csv(in, path);
}

std::vector<GaitProfile> make_profile_bank(int n_classes, int axes,
                                           uint64_t seed) {
  if (n_classes < 1) throw InvalidInput("profile bank needs at least one class");
  if (axes != 3 && axes != 6) throw InvalidInput("axes must be 3 or 6");
  Rng rng(seed);
  std::vector<GaitProfile> bank;
  bank.reserve(static_cast<size_t>(n_classes));
  for (int k = 0; k < n_classes; ++k) {
    GaitProfile p;
    p.class_id = k;
    p.step_hz = rng.uniform(1.3, 2.7);
    p.gyro_scale = 2.0;
    p.harmonics.assign(static_cast<size_t>(axes), {});
    for (int c = 0; c < axes; ++c) {
      auto& ch = p.harmonics[static_cast<size_t>(c)];
      for (int order = 1; order <= 3; ++order)
        ch.push_back(Harmonic{order, rng.uniform(0.15, 1.2),
                              rng.uniform(0.0, 6.283185307179586)});
    }
    p.validate();
    bank.push_back(std::move(p));
  }
  return bank;
}

namespace {

void append_windows(Dataset& ds, const GaitProfile& profile,
                    const SyntheticSpec& spec, int count, uint64_t seed) {
  GaitProfile p = profile;
  p.noise_sigma = spec.noise_sigma;
  // Enough signal for `count` hops plus one full window.
  const double duration =
      spec.window_s + spec.hop_s * static_cast<double>(count - 1) + 0.5;
  const auto stream = synthesize_gait(p, duration, spec.rate_hz, seed);
  auto windows = window_stream(stream, spec.window_s, spec.hop_s);
  if (static_cast<int>(windows.size()) < count)
    throw InvalidInput("synthesis produced too few windows");
  windows.resize(static_cast<size_t>(count));
  for (const auto& w : windows) {
    ds.X.push_back(featurize(w));
    ds.y.push_back(profile.class_id);
  }
}

}  // namespace

SyntheticBenchmark build_synthetic_benchmark(const SyntheticSpec& spec) {
  if (spec.train_windows < 1 || spec.test_windows < 1)
    throw InvalidInput("benchmark needs train and test windows per class");
  SyntheticBenchmark bench;
  bench.bank = make_profile_bank(spec.n_classes, spec.axes, spec.seed);
  for (int k = 0; k < spec.n_classes; ++k) {
    const auto& profile = bench.bank[static_cast<size_t>(k)];
    // Separate noise realizations for train and test.
    append_windows(bench.train, profile, spec, spec.train_windows,
                   spec.seed + 1000 + static_cast<uint64_t>(k));
    append_windows(bench.test, profile, spec, spec.test_windows,
                   spec.seed + 9000 + static_cast<uint64_t>(k));
  }
  bench.train.validate();
  bench.test.validate();
  return bench;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double fraction,
                                          uint64_t seed) {
  ds.validate();
  if (!(fraction > 0.0 && fraction < 1.0))
    throw InvalidInput("split fraction must lie in (0, 1)");
  int max_label = 0;
  for (int label : ds.y) max_label = std::max(max_label, label);
  std::vector<std::vector<size_t>> by_class(static_cast<size_t>(max_label) + 1);
  for (size_t i = 0; i < ds.size(); ++i)
    by_class[static_cast<size_t>(ds.y[i])].push_back(i);

  Rng rng(seed);
  Dataset keep, out;
  for (auto& pool : by_class) {
    if (pool.empty()) continue;
    rng.shuffle(pool);
    size_t n_out = static_cast<size_t>(
        std::llround(fraction * static_cast<double>(pool.size())));
    if (n_out >= pool.size()) n_out = pool.size() - 1;
    for (size_t i = 0; i < pool.size(); ++i) {
      Dataset& dst = i < n_out ? out : keep;
      dst.X.push_back(ds.X[pool[i]]);
      dst.y.push_back(ds.y[pool[i]]);
    }
  }
  return {std::move(keep), std::move(out)};
}

}  // namespace gait
