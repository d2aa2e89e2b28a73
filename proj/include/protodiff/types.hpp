#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace protodiff {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr std::uint64_t kDefaultSeed = 20240521;
inline constexpr int kAuditSamples = 64;
inline constexpr double kDefaultTMax = 1.0;

}  // namespace protodiff
