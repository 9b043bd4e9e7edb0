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

#include <cmath>
#include <limits>

#include "rankmin/linops.hpp"
#include "rankmin/types.hpp"

namespace rankmin {

// Which Gram matrix the weight is built from: Left uses X X^T (n x n),
// Right uses X^T X (m x m). The two give complementary weighted norms
// ||W^{1/2} X||_F and ||X W^{1/2}||_F.
enum class WeightSide { Left, Right };

inline WeightSide opposite(WeightSide s) {
  return s == WeightSide::Left ? WeightSide::Right : WeightSide::Left;
}

namespace detail {

template <typename Scalar>
void check_gamma(Scalar gamma) {
  if (!(gamma >= Scalar(0)))
    throw DomainError("gamma must be non-negative");
}

// Eigenvalues are clamped away from zero before fractional powers so that
// numerically vanishing singular values at tiny gamma stay finite.
template <typename Scalar>
constexpr Scalar eig_floor() {
  return Scalar(1e-300);
}

}  // namespace detail

// Weight W = (Gram + gamma I)^{p/2 - 1} kept in eigendecomposed form so the
// solvers can apply fractional powers (W itself, W^{1/2}, W^{-1}) exactly.
template <typename Scalar>
class WeightMatrix {
 public:
  WeightMatrix(Mat<Scalar> eigvecs, Vec<Scalar> regularized_eigs,
               WeightSide side, Scalar gamma, Scalar p)
      : eigvecs_(std::move(eigvecs)),
        eigs_(std::move(regularized_eigs)),
        side_(side),
        gamma_(gamma),
        p_(p) {}

  WeightSide side() const { return side_; }
  Scalar gamma() const { return gamma_; }
  Scalar strength() const { return p_; }
  Index dim() const { return eigvecs_.rows(); }

  // (sigma_i^2 + gamma), clamped below; ascending order
  const Vec<Scalar>& regularized_spectrum() const { return eigs_; }

  Mat<Scalar> matrix() const { return power(p_ / 2 - 1); }
  Mat<Scalar> sqrt_matrix() const { return power((p_ / 2 - 1) / 2); }
  Mat<Scalar> inverse() const { return power(1 - p_ / 2); }

 private:
  Mat<Scalar> power(Scalar e) const {
    Vec<Scalar> d(eigs_.size());
    for (Index i = 0; i < d.size(); ++i) d(i) = std::pow(eigs_(i), e);
    return eigvecs_ * d.asDiagonal() * eigvecs_.transpose();
  }

  Mat<Scalar> eigvecs_;
  Vec<Scalar> eigs_;
  WeightSide side_;
  Scalar gamma_;
  Scalar p_;
};

// Optimal weight of the augmented objective: (X X^T + gamma I)^{p/2-1} on the
// left side, (X^T X + gamma I)^{p/2-1} on the right. gamma = 0 is admitted
// (eigenvalues are clamped) to support iterations run at frozen gamma = 0.
template <typename Scalar>
WeightMatrix<Scalar> weight(const Mat<Scalar>& X, Scalar gamma, Scalar p,
                            WeightSide side) {
  detail::check_gamma(gamma);
  if (!(p >= Scalar(0) && p <= Scalar(1)))
    throw DomainError("weight strength p must lie in [0, 1]");
  Mat<Scalar> gram;
  if (side == WeightSide::Left)
    gram = X * X.transpose();
  else
    gram = X.transpose() * X;
  gram.diagonal().array() += gamma;
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> eig(gram);
  Vec<Scalar> vals = eig.eigenvalues();
  for (Index i = 0; i < vals.size(); ++i)
    vals(i) = std::max(vals(i), detail::eig_floor<Scalar>());
  return WeightMatrix<Scalar>(eig.eigenvectors(), std::move(vals), side, gamma,
                              p);
}

// log det(X X^T + gamma I) (Left) or log det(X^T X + gamma I) (Right),
// evaluated from singular values for stability at small gamma.
template <typename Scalar>
Scalar f_gamma(const Mat<Scalar>& X, Scalar gamma, WeightSide side) {
  detail::check_gamma(gamma);
  const Vec<Scalar> sigma = singular_values(X);
  const Index count = side == WeightSide::Left ? X.rows() : X.cols();
  Scalar value = 0;
  for (Index i = 0; i < count; ++i) {
    const Scalar s2 = i < sigma.size() ? sigma(i) * sigma(i) : Scalar(0);
    value += std::log(s2 + gamma);
  }
  return value;
}

// Normalized variant sum_i log(1 + sigma_i^2 / gamma); zero iff X = 0.
template <typename Scalar>
Scalar f_gamma_scaled(const Mat<Scalar>& X, Scalar gamma) {
  if (!(gamma > Scalar(0)))
    throw DomainError("f_gamma_scaled: gamma must be positive");
  const Vec<Scalar> sigma = singular_values(X);
  Scalar value = 0;
  for (Index i = 0; i < sigma.size(); ++i)
    value += std::log1p(sigma(i) * sigma(i) / gamma);
  return value;
}

// Smoothed Schatten-p value sum_i (sigma_i^2 + gamma)^{p/2} over n = rows(X)
// terms; the p -> 0 limit of (value - n)/p is f_gamma / 2.
template <typename Scalar>
Scalar schatten(const Mat<Scalar>& X, Scalar gamma, Scalar p) {
  detail::check_gamma(gamma);
  if (!(p > Scalar(0) && p <= Scalar(1)))
    throw DomainError("schatten: p must lie in (0, 1]");
  const Vec<Scalar> sigma = singular_values(X);
  Scalar value = 0;
  for (Index i = 0; i < X.rows(); ++i) {
    const Scalar s2 = i < sigma.size() ? sigma(i) * sigma(i) : Scalar(0);
    value += std::pow(s2 + gamma, p / 2);
  }
  return value;
}

// Sum of squared k x k minors, computed as the k-th elementary symmetric
// polynomial of the squared singular values. Vanishes iff rank(X) < k.
template <typename Scalar>
Scalar det2_k(const Mat<Scalar>& X, Index k) {
  if (k < 1 || k > X.rows())
    throw DomainError("det2_k: k out of range");
  const Vec<Scalar> sigma = singular_values(X);
  if (k > sigma.size()) return Scalar(0);
  Vec<Scalar> e = Vec<Scalar>::Zero(k + 1);
  e(0) = Scalar(1);
  for (Index i = 0; i < sigma.size(); ++i) {
    const Scalar s2 = sigma(i) * sigma(i);
    for (Index j = std::min<Index>(k, i + 1); j >= 1; --j)
      e(j) += s2 * e(j - 1);
  }
  return e(k);
}

// det(X X^T + gamma I) assembled from the expansion
// gamma^n + sum_k gamma^{n-k} det2_k(X).
template <typename Scalar>
Scalar det_expansion(const Mat<Scalar>& X, Scalar gamma) {
  detail::check_gamma(gamma);
  const Index n = X.rows();
  Scalar value = std::pow(gamma, static_cast<Scalar>(n));
  for (Index k = 1; k <= n; ++k)
    value += std::pow(gamma, static_cast<Scalar>(n - k)) * det2_k(X, k);
  return value;
}

// Augmented objective trace(W (X X^T + gamma I)) - log det W - n (Left) or
// the transposed analogue (Right). W must be symmetric positive definite;
// its minimum over W at fixed X is attained at weight(X, gamma, 0, side).
template <typename Scalar>
Scalar J_gamma(const Mat<Scalar>& X, const Mat<Scalar>& W, WeightSide side,
               Scalar gamma) {
  detail::check_gamma(gamma);
  const Index dim = side == WeightSide::Left ? X.rows() : X.cols();
  if (W.rows() != dim || W.cols() != dim)
    throw DimensionError("J_gamma: weight dimension mismatch");
  if (!W.isApprox(W.transpose(), Scalar(1e-10)))
    throw DomainError("J_gamma: weight not symmetric");
  Eigen::LLT<Mat<Scalar>> llt(W);
  if (llt.info() != Eigen::Success)
    throw DomainError("J_gamma: weight not positive definite");
  Scalar logdet = 0;
  for (Index i = 0; i < dim; ++i)
    logdet += Scalar(2) * std::log(llt.matrixLLT()(i, i));
  Mat<Scalar> gram;
  if (side == WeightSide::Left)
    gram = X * X.transpose();
  else
    gram = X.transpose() * X;
  gram.diagonal().array() += gamma;
  return (W * gram).trace() - logdet - static_cast<Scalar>(dim);
}

template <typename Scalar>
Scalar J_gamma(const Mat<Scalar>& X, const WeightMatrix<Scalar>& W,
               Scalar gamma) {
  return J_gamma(X, Mat<Scalar>(W.matrix()), W.side(), gamma);
}

// Euclidean gradient of f_gamma (left side): 2 (X X^T + gamma I)^{-1} X.
// Stationarity of f_gamma on the affine set is equivalent to this gradient
// being orthogonal to kernel(L).
template <typename Scalar>
Mat<Scalar> grad_f(const Mat<Scalar>& X, Scalar gamma) {
  detail::check_gamma(gamma);
  return Scalar(2) *
         (weight(X, gamma, Scalar(0), WeightSide::Left).matrix() * X);
}

// Penalized objective ||L(X) - y||^2 + c_L * gamma * f^a_gamma(X); the
// omega^2 = gamma coupling makes the value non-decreasing in gamma.
template <typename Scalar>
Scalar F_relaxed(const ProblemInstance<Scalar>& problem, const Mat<Scalar>& X,
                 Scalar gamma, Scalar c_L) {
  if (!(gamma > Scalar(0)) || !(c_L > Scalar(0)))
    throw DomainError("F_relaxed: gamma and c_L must be positive");
  const Scalar residual = (apply(problem.map, X) - problem.y).squaredNorm();
  return residual + c_L * gamma * f_gamma_scaled(X, gamma);
}

}  // namespace rankmin
