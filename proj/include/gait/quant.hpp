#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gait/cnn.hpp"

namespace gait {

// Affine int8 tensor: real value = scale * (q - zero_point). Weights are
// symmetric (zero_point 0, range [-127, 127]); activations use the full
// [-128, 127] range with a calibrated zero point.
struct QuantTensor {
  std::vector<int8_t> values;
  double scale = 1.0;
  int zero_point = 0;
};

// Fixed-point approximation of a real multiplier: value ~= mantissa * 2^-31
// * 2^exponent with mantissa a Q31 integer in [2^30, 2^31). Relative error
// is bounded by 2^-30.
struct RequantMultiplier {
  int32_t mantissa = 0;
  int exponent = 0;  // power of two applied after the Q31 product

  double reconstruct() const;
};

RequantMultiplier make_multiplier(double real);

// Round-to-nearest-even arithmetic right shift; shift may be 0.
int64_t rne_shift(int64_t value, int shift);

// Applies a multiplier to an int32 accumulator (int64 intermediate).
int64_t apply_multiplier(int64_t acc, const RequantMultiplier& m);

// Min/max of each activation tensor observed over the calibration set,
// already widened to include zero and to a minimal nonzero span.
struct ActivationRanges {
  double input_lo = 0.0, input_hi = 0.0;  // standardized model input
  double conv_pre_lo = 0.0, conv_pre_hi = 0.0;  // diagnostic only: pre-ReLU
  double conv_lo = 0.0, conv_hi = 0.0;          // post-ReLU conv output
  std::array<double, 3> hidden_lo{}, hidden_hi{};  // post-ReLU dense outputs
};

ActivationRanges calibrate(const ModelParams& params,
                           const std::vector<FeatureGrid>& samples);

struct QuantLayer {
  QuantTensor weights;
  std::vector<int32_t> bias;      // scale = in_scale * weight_scale
  double out_scale = 1.0;         // post-activation quantization
  int out_zp = 0;
  RequantMultiplier requant;      // in_scale*w_scale/out_scale (unused on the head)
};

struct QuantModel {
  ModelConfig config;
  std::vector<float> feat_mean, feat_std;
  double input_scale = 1.0;
  int input_zp = 0;
  QuantLayer conv;
  std::array<QuantLayer, 4> dense;  // dense[3] is the head: int32 logits out

  void validate() const;
};

QuantModel quantize(const ModelParams& params, const ActivationRanges& ranges);

// Integer kernel primitives: int32 accumulators over int8 operands, the
// input offset by its zero point (padding cells hold exactly the zero point,
// so they vanish from the sum). Exposed for the batch runner and for the
// oracle property tests.
std::vector<int32_t> q_conv_acc(const ModelConfig& cfg, const QuantTensor& w,
                                std::span<const int32_t> bias,
                                std::span<const int8_t> input, int input_zp);
std::vector<int32_t> q_dense_acc(const QuantTensor& w,
                                 std::span<const int32_t> bias,
                                 std::span<const int8_t> input, int input_zp);

// Integer-only inference: int8 tensors between layers, int32 accumulators,
// fused ReLU via the zero-point clamp, float softmax over dequantized logits.
std::vector<double> q_forward(const QuantModel& qm, const FeatureGrid& grid);

// Dequantized logits (the values softmax sees in q_forward).
std::vector<double> q_logits(const QuantModel& qm, const FeatureGrid& grid);

EvalReport evaluate_quantized(const QuantModel& qm, const Dataset& ds);

struct MemoryStage {
  std::string name;
  size_t in_bytes = 0;
  size_t out_bytes = 0;
};

struct MemoryReport {
  size_t flash_bytes = 0;         // weights + biases + metadata
  size_t weight_bytes = 0;        // int8 payload
  size_t bias_bytes = 0;          // int32 payload
  size_t metadata_bytes = 0;      // normalization + quantization records
  size_t arena_bytes = 0;         // peak of in+out over the schedule
  std::vector<MemoryStage> schedule;
};

// Two-buffer execution model: a stage's input and output buffers are live
// together; everything else is recycled. Depends only on shapes.
MemoryReport memory_report(const QuantModel& qm);
std::string memory_report_json(const MemoryReport& report);

struct AccuracyDelta {
  double float_acc = 0.0;
  double int8_acc = 0.0;
  double delta = 0.0;      // float_acc - int8_acc
  double agreement = 0.0;  // fraction of samples where both argmax agree
  double max_logit_dev = 0.0;  // max |float logit - dequantized logit|
};

AccuracyDelta accuracy_delta(const ModelParams& params, const QuantModel& qm,
                             const Dataset& ds);

// GMDQ container: config + normalization + per-layer scale/zero-point
// records and payloads. Multipliers are re-derived on load.
void save_qmodel(const QuantModel& qm, const std::string& path);
void save_qmodel(const QuantModel& qm, std::ostream& out);
QuantModel load_qmodel(const std::string& path);
QuantModel load_qmodel(std::istream& in, const std::string& context);

}  // namespace gait
