#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gait/dataset.hpp"
#include "gait/spectral.hpp"

namespace gait {

// Geometry of the classifier: conv 3x3 -> ReLU -> maxpool 2x2 -> three ReLU
// dense layers -> linear head -> softmax.
struct ModelConfig {
  int input_rows = kFeaturesPerAxis;  // 13
  int input_cols = 6;                 // one column per axis
  int conv_filters = 32;
  int conv_kernel = 3;
  int pool = 2;
  std::array<int, 3> dense_units{256, 128, 32};
  int n_classes = 24;

  int pool_rows() const { return input_rows / pool; }
  int pool_cols() const { return input_cols / pool; }
  int flatten_len() const { return conv_filters * pool_rows() * pool_cols(); }

  static constexpr int kDenseLayers = 4;  // three hidden + the class head
  int dense_in(int layer) const {
    const std::array<int, 4> in{flatten_len(), dense_units[0], dense_units[1],
                                dense_units[2]};
    return in[static_cast<size_t>(layer)];
  }
  int dense_out(int layer) const {
    const std::array<int, 4> out{dense_units[0], dense_units[1], dense_units[2],
                                 n_classes};
    return out[static_cast<size_t>(layer)];
  }

  size_t conv_weight_count() const {
    return static_cast<size_t>(conv_filters) * conv_kernel * conv_kernel;
  }
  size_t param_count() const;
  void validate() const;  // throws ConfigError
};

// Trainable parameters as one flat f32 block, ordered conv weights, conv
// biases, then per dense layer weights (row-major out x in) and biases.
// Input standardization statistics ride along; they are fitted from the
// training split and are not trainable.
struct ModelParams {
  ModelConfig config;
  std::vector<float> data;
  std::vector<float> feat_mean;  // rows*cols, default 0
  std::vector<float> feat_std;   // rows*cols, default 1, floored at 1e-6

  size_t conv_w_off() const { return 0; }
  size_t conv_b_off() const { return config.conv_weight_count(); }
  size_t dense_w_off(int layer) const;
  size_t dense_b_off(int layer) const;

  std::span<const float> conv_w() const {
    return {data.data() + conv_w_off(), config.conv_weight_count()};
  }
  std::span<const float> conv_b() const {
    return {data.data() + conv_b_off(), static_cast<size_t>(config.conv_filters)};
  }
  std::span<const float> dense_w(int layer) const {
    return {data.data() + dense_w_off(layer),
            static_cast<size_t>(config.dense_in(layer)) *
                static_cast<size_t>(config.dense_out(layer))};
  }
  std::span<const float> dense_b(int layer) const {
    return {data.data() + dense_b_off(layer),
            static_cast<size_t>(config.dense_out(layer))};
  }

  void validate() const;
};

// He-uniform weights (limit sqrt(6/fan_in)), zero biases, identity input
// normalization; deterministic per seed.
ModelParams build_model(const ModelConfig& config, uint64_t seed);

// Every intermediate of one forward pass, in 64-bit. Kept for backprop, for
// calibration, and for the finite-difference harness.
struct Activations {
  std::vector<double> input;      // standardized, rows*cols
  std::vector<double> conv_pre;   // filters x rows x cols
  std::vector<double> conv_post;  // after ReLU
  std::vector<double> pool;       // filters x pool_rows x pool_cols
  std::vector<int> pool_src;      // flat conv index feeding each pool cell
  std::array<std::vector<double>, 4> dense_pre;
  std::array<std::vector<double>, 4> dense_post;  // post[3] == probs
  std::vector<double> probs;

  double loss_for(int label) const;  // cross-entropy against probs
};

void forward_full(const ModelParams& params, const FeatureGrid& grid,
                  Activations& acts);
std::vector<double> forward(const ModelParams& params, const FeatureGrid& grid);

// Accumulates dLoss/dParam for one sample into `grads` (same layout as
// ModelParams::data). Returns the sample loss.
double backward_into(const ModelParams& params, const Activations& acts,
                     int label, std::span<double> grads);

// Mean loss and mean gradients over a batch (indices into the dataset).
struct LossGrads {
  double loss = 0.0;
  std::vector<double> grads;
};
LossGrads loss_and_grads(const ModelParams& params, const Dataset& ds,
                         std::span<const size_t> batch);

struct TrainConfig {
  int epochs = 20;
  double learning_rate = 5e-4;
  int batch_size = 32;
  double val_fraction = 0.2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  uint64_t seed = 0;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0, train_acc = 0.0;
  double val_loss = 0.0, val_acc = 0.0;
};

struct TrainResult {
  ModelParams params;  // from the best-validation-accuracy epoch
  std::vector<EpochStats> history;
  int best_epoch = 0;
  size_t n_train = 0, n_val = 0;
};

// Stratified validation split, seeded shuffling, Adam updates; history has
// one entry per epoch, measured on the full train/val splits.
TrainResult train(const Dataset& ds, const TrainConfig& tc,
                  const ModelConfig& mc);

void save_history_csv(const std::vector<EpochStats>& history, std::ostream& out);
void save_history_csv(const std::vector<EpochStats>& history,
                      const std::string& path);

struct EvalReport {
  double accuracy = 0.0;
  size_t total = 0;
  std::vector<std::vector<long>> confusion;  // [true][predicted]
  std::vector<double> precision, recall;
};

// Argmax prediction, ties toward the lower class index.
int predict_label(std::span<const double> probs);
EvalReport evaluate(const ModelParams& params, const Dataset& ds);
// Shared scorer for any prediction path (used by the quantized engine too).
EvalReport score_predictions(std::span<const int> truth,
                             std::span<const int> predicted, int n_classes);

// GMDL container: magic, version, config block, normalization tensors, then
// the parameter block as little-endian f32. Round-trips bit-exactly.
void save_model(const ModelParams& params, const std::string& path);
void save_model(const ModelParams& params, std::ostream& out);
ModelParams load_model(const std::string& path);
ModelParams load_model(std::istream& in, const std::string& context);

}  // namespace gait
