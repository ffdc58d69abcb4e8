#pragma once

#include <span>
#include <vector>

#include "gait/cnn.hpp"
#include "gait/imu.hpp"
#include "gait/quant.hpp"
#include "gait/spectral.hpp"

namespace gait {

// Batch kernels over independent items. Each comes in two flavors: a serial
// reference and an OpenMP version. The parallel loop body runs exactly the
// code the serial path runs on each item, so outputs match bit for bit —
// tests and the kernel benchmark hold both to that contract.

std::vector<FeatureGrid> featurize_all_serial(std::span<const GaitSegment> segments);
std::vector<FeatureGrid> featurize_all(std::span<const GaitSegment> segments);

std::vector<std::vector<double>> forward_all_serial(const ModelParams& params,
                                                    std::span<const FeatureGrid> grids);
std::vector<std::vector<double>> forward_all(const ModelParams& params,
                                             std::span<const FeatureGrid> grids);

std::vector<std::vector<double>> q_forward_all_serial(const QuantModel& qm,
                                                      std::span<const FeatureGrid> grids);
std::vector<std::vector<double>> q_forward_all(const QuantModel& qm,
                                               std::span<const FeatureGrid> grids);

// Argmax per probability row (lowest index wins ties).
std::vector<int> argmax_all(std::span<const std::vector<double>> probs);

}  // namespace gait
