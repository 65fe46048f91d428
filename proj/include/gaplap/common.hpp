#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace gaplap {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Per-token head indices. Entry 0 belongs to ROOT and is always -1.
using HeadArray = std::vector<int>;
inline constexpr int kNoHead = -1;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration, flags, or incompatible dimensions.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or unreadable input data (treebanks, embeddings, checkpoints).
class DataError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf encountered in a loss, gradient, or score.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace gaplap
