/*  Copyright 2026 The rankmin Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.  */

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace rankmin {

using Index = Eigen::Index;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatXd = Mat<double>;
using VecXd = Vec<double>;

// Error hierarchy. Misuse (shapes, parameter domains) maps to
// std::invalid_argument; data-dependent failures to std::runtime_error.

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnsupportedVariantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DegenerateOperatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CoverageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown by the image-form solvers when the inner Gram system is too
// ill-conditioned to trust; carries the condition estimate so callers can
// decide on a kernel-form fallback.
class IllConditionedError : public std::runtime_error {
 public:
  explicit IllConditionedError(double condition)
      : std::runtime_error("inner system ill-conditioned, cond ~ " +
                           std::to_string(condition)),
        condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

// Seeded Gaussian/uniform source. Box-Muller on top of mt19937_64 so the
// stream does not depend on the standard library's distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : engine_(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1))) {}

  double uniform() {
    // 53-bit mantissa in [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  std::uint64_t next_u64() { return engine_(); }

  // uniform integer in [0, bound) without modulo bias
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % bound;
  }

  template <typename Scalar = double>
  Mat<Scalar> gaussian(Index rows, Index cols) {
    Mat<Scalar> out(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i)
        out(i, j) = static_cast<Scalar>(normal());
    return out;
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Column-major vectorization is the one global convention.
template <typename Scalar>
Vec<Scalar> vectorize(const Mat<Scalar>& X) {
  return Eigen::Map<const Vec<Scalar>>(X.data(), X.size());
}

template <typename Scalar>
Mat<Scalar> unvectorize(const Vec<Scalar>& v, Index rows, Index cols) {
  if (v.size() != rows * cols)
    throw DimensionError("unvectorize: size mismatch");
  return Eigen::Map<const Mat<Scalar>>(v.data(), rows, cols);
}

template <typename Scalar>
Vec<Scalar> singular_values(const Mat<Scalar>& X) {
  return X.jacobiSvd().singularValues();
}

}  // namespace rankmin
