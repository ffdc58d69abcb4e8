#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "gait/imu.hpp"
#include "gait/spectral.hpp"

namespace gait {

// Labeled feature grids, the unit of exchange between featurization,
// training, quantization, and evaluation.
struct Dataset {
  std::vector<FeatureGrid> X;
  std::vector<int> y;

  size_t size() const { return X.size(); }
  void validate() const;  // consistent axes, matching lengths, labels >= 0
};

// CSV layout: header f0..fN,label; one row per sample. Axes are inferred
// from the column count (78 -> 6-axis, 39 -> 3-axis).
void save_feature_csv(const Dataset& ds, std::ostream& out);
void save_feature_csv(const Dataset& ds, const std::string& path);
Dataset load_feature_csv(std::istream& in, const std::string& context);
Dataset load_feature_csv(const std::string& path);

// Deterministic bank of distinguishable gait profiles, one per class.
// Each profile draws a cadence in [1.3, 2.7] Hz and per-channel harmonic
// amplitudes/phases; class_id is the bank index.
std::vector<GaitProfile> make_profile_bank(int n_classes, int axes,
                                           uint64_t seed);

// Desk-scale benchmark construction: per class, one synthesized stream is
// windowed and featurized for training and a second stream (fresh noise,
// same profile) supplies the held-out test windows.
struct SyntheticSpec {
  int n_classes = 24;
  int axes = 6;
  int train_windows = 160;  // per class
  int test_windows = 40;    // per class
  double window_s = 3.0;
  double hop_s = 1.5;
  double rate_hz = 100.0;
  double noise_sigma = 0.15;
  uint64_t seed = 7;
};

struct SyntheticBenchmark {
  Dataset train;
  Dataset test;
  std::vector<GaitProfile> bank;
};

SyntheticBenchmark build_synthetic_benchmark(const SyntheticSpec& spec);

// Stratified split: per class, a seeded shuffle sends ~fraction of samples
// to the second dataset.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double fraction,
                                          uint64_t seed);

}  // namespace gait
