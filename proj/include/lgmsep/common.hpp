// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef LGMSEP_COMMON_HPP
#define LGMSEP_COMMON_HPP

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lgmsep {

using cd = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Small channel-dimension matrices/vectors. Microphone counts stay tiny, so
// these are stack-allocated with a fixed capacity.
constexpr int kMaxMics = 8;
using SmallMat = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic,
                               Eigen::ColMajor, kMaxMics, kMaxMics>;
using SmallVec = Eigen::Matrix<cd, Eigen::Dynamic, 1, Eigen::ColMajor,
                               kMaxMics, 1>;
using SmallRealVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor,
                                   kMaxMics, 1>;

// Error categories map to process exit codes in the CLI.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double db(double power_ratio) { return 10.0 * std::log10(power_ratio); }

// Deterministic 64-bit mix, used to derive per-item seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace lgmsep

#endif  // LGMSEP_COMMON_HPP
