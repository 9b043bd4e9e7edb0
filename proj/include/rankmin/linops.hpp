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

#include <algorithm>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "rankmin/types.hpp"

namespace rankmin {

// A linear measurement operator R^{n x m} -> R^l, l < n*m, in one of three
// representations:
//   Dense    — an explicit l x (n*m) matrix acting on the column-major
//              vectorization of X,
//   Sampling — l distinct entry positions (i, j),
//   Factored — a row-wise Khatri-Rao decomposition
//              L = sum_i right_i^T (*) left_i with left_i in R^{l x n},
//              right_i in R^{m x l}, so that the j-th measurement is
//              row_j(left_i) * X * col_j(right_i), summed over i.
template <typename Scalar>
class LinearMap {
 public:
  enum class Kind { Dense, Sampling, Factored };

  struct FactorPair {
    Mat<Scalar> left;   // l x n
    Mat<Scalar> right;  // m x l
  };

  static LinearMap dense(Mat<Scalar> matrix, Index rows, Index cols) {
    LinearMap map;
    map.kind_ = Kind::Dense;
    map.rows_ = rows;
    map.cols_ = cols;
    map.size_ = matrix.rows();
    if (matrix.cols() != rows * cols)
      throw DimensionError("LinearMap::dense: matrix has wrong column count");
    map.check_underdetermined();
    map.matrix_ = std::move(matrix);
    return map;
  }

  static LinearMap sampling(Index rows, Index cols,
                            std::vector<std::pair<Index, Index>> samples) {
    LinearMap map;
    map.kind_ = Kind::Sampling;
    map.rows_ = rows;
    map.cols_ = cols;
    map.size_ = static_cast<Index>(samples.size());
    map.check_underdetermined();
    std::set<std::pair<Index, Index>> seen;
    for (const auto& [i, j] : samples) {
      if (i < 0 || i >= rows || j < 0 || j >= cols)
        throw DimensionError("LinearMap::sampling: index out of range");
      if (!seen.insert({i, j}).second)
        throw DomainError("LinearMap::sampling: duplicate sample index");
    }
    map.samples_ = std::move(samples);
    return map;
  }

  static LinearMap factored(Index rows, Index cols,
                            std::vector<FactorPair> factors) {
    LinearMap map;
    map.kind_ = Kind::Factored;
    map.rows_ = rows;
    map.cols_ = cols;
    if (factors.empty())
      throw DomainError("LinearMap::factored: no factor pairs");
    map.size_ = factors.front().left.rows();
    map.check_underdetermined();
    for (const auto& f : factors) {
      if (f.left.rows() != map.size_ || f.left.cols() != rows ||
          f.right.rows() != cols || f.right.cols() != map.size_)
        throw DimensionError("LinearMap::factored: factor shape mismatch");
    }
    map.factors_ = std::move(factors);
    return map;
  }

  Kind kind() const { return kind_; }
  Index rows() const { return rows_; }  // n
  Index cols() const { return cols_; }  // m
  Index size() const { return size_; }  // l, number of measurements

  const Mat<Scalar>& matrix() const { return matrix_; }
  const std::vector<std::pair<Index, Index>>& samples() const {
    return samples_;
  }
  const std::vector<FactorPair>& factors() const { return factors_; }

 private:
  void check_underdetermined() const {
    if (size_ >= rows_ * cols_)
      throw DimensionError("LinearMap: operator must be underdetermined");
    if (size_ < 1) throw DimensionError("LinearMap: empty operator");
  }

  Kind kind_ = Kind::Dense;
  Index rows_ = 0, cols_ = 0, size_ = 0;
  Mat<Scalar> matrix_;
  std::vector<std::pair<Index, Index>> samples_;
  std::vector<FactorPair> factors_;
};

// Materialize the l x (n*m) matrix of any variant (column-major convention).
template <typename Scalar>
Mat<Scalar> dense_matrix(const LinearMap<Scalar>& map) {
  const Index n = map.rows(), m = map.cols(), l = map.size();
  switch (map.kind()) {
    case LinearMap<Scalar>::Kind::Dense:
      return map.matrix();
    case LinearMap<Scalar>::Kind::Sampling: {
      Mat<Scalar> L = Mat<Scalar>::Zero(l, n * m);
      for (Index j = 0; j < l; ++j) {
        const auto& [r, c] = map.samples()[j];
        L(j, c * n + r) = Scalar(1);
      }
      return L;
    }
    case LinearMap<Scalar>::Kind::Factored: {
      Mat<Scalar> L = Mat<Scalar>::Zero(l, n * m);
      for (const auto& f : map.factors())
        for (Index j = 0; j < l; ++j)
          for (Index c = 0; c < m; ++c)
            L.row(j).segment(c * n, n) += f.right(c, j) * f.left.row(j);
      return L;
    }
  }
  throw UnsupportedVariantError("dense_matrix: unknown variant");
}

// Convert a sampling map to its trivial rank-1 Khatri-Rao factorization.
template <typename Scalar>
LinearMap<Scalar> as_factored(const LinearMap<Scalar>& map) {
  if (map.kind() == LinearMap<Scalar>::Kind::Factored) return map;
  if (map.kind() != LinearMap<Scalar>::Kind::Sampling)
    throw UnsupportedVariantError("as_factored: only sampling maps convert");
  const Index n = map.rows(), m = map.cols(), l = map.size();
  typename LinearMap<Scalar>::FactorPair f;
  f.left = Mat<Scalar>::Zero(l, n);
  f.right = Mat<Scalar>::Zero(m, l);
  for (Index j = 0; j < l; ++j) {
    const auto& [r, c] = map.samples()[j];
    f.left(j, r) = Scalar(1);
    f.right(c, j) = Scalar(1);
  }
  return LinearMap<Scalar>::factored(n, m, {std::move(f)});
}

template <typename Scalar>
Vec<Scalar> apply(const LinearMap<Scalar>& map, const Mat<Scalar>& X) {
  if (X.rows() != map.rows() || X.cols() != map.cols())
    throw DimensionError("apply: X shape mismatch");
  switch (map.kind()) {
    case LinearMap<Scalar>::Kind::Dense:
      return map.matrix() * vectorize(X);
    case LinearMap<Scalar>::Kind::Sampling: {
      Vec<Scalar> y(map.size());
      for (Index j = 0; j < map.size(); ++j) {
        const auto& [r, c] = map.samples()[j];
        y(j) = X(r, c);
      }
      return y;
    }
    case LinearMap<Scalar>::Kind::Factored: {
      Vec<Scalar> y = Vec<Scalar>::Zero(map.size());
      for (const auto& f : map.factors())
        y += ((f.left * X) * f.right).diagonal();
      return y;
    }
  }
  throw UnsupportedVariantError("apply: unknown variant");
}

template <typename Scalar>
Mat<Scalar> adjoint_apply(const LinearMap<Scalar>& map, const Vec<Scalar>& v) {
  if (v.size() != map.size())
    throw DimensionError("adjoint_apply: measurement length mismatch");
  const Index n = map.rows(), m = map.cols();
  switch (map.kind()) {
    case LinearMap<Scalar>::Kind::Dense:
      return unvectorize<Scalar>(map.matrix().transpose() * v, n, m);
    case LinearMap<Scalar>::Kind::Sampling: {
      Mat<Scalar> X = Mat<Scalar>::Zero(n, m);
      for (Index j = 0; j < map.size(); ++j) {
        const auto& [r, c] = map.samples()[j];
        X(r, c) += v(j);
      }
      return X;
    }
    case LinearMap<Scalar>::Kind::Factored: {
      Mat<Scalar> X = Mat<Scalar>::Zero(n, m);
      for (const auto& f : map.factors())
        X += f.left.transpose() * v.asDiagonal() * f.right.transpose();
      return X;
    }
  }
  throw UnsupportedVariantError("adjoint_apply: unknown variant");
}

// Apply a factored map to a product Y*Z without forming it:
// L(YZ) = sum_i rowsum( (left_i Y) . (Z right_i)^T ).
template <typename Scalar>
Vec<Scalar> apply_factored(const LinearMap<Scalar>& map, const Mat<Scalar>& Y,
                           const Mat<Scalar>& Z) {
  if (map.kind() != LinearMap<Scalar>::Kind::Factored)
    throw UnsupportedVariantError("apply_factored: map is not factored");
  if (Y.rows() != map.rows() || Z.cols() != map.cols() ||
      Y.cols() != Z.rows())
    throw DimensionError("apply_factored: factor shape mismatch");
  Vec<Scalar> y = Vec<Scalar>::Zero(map.size());
  for (const auto& f : map.factors()) {
    const Mat<Scalar> A = f.left * Y;         // l x R
    const Mat<Scalar> B = Z * f.right;        // R x l
    y += (A.array() * B.transpose().array()).rowwise().sum().matrix();
  }
  return y;
}

namespace detail {

// SVD-backed apparatus for the global objects of a map: pseudo-inverse
// application and kernel basis. Desk-scale sizes keep this cheap.
template <typename Scalar>
struct OperatorSvd {
  Eigen::BDCSVD<Mat<Scalar>> svd;
  Index rank = 0;

  explicit OperatorSvd(const Mat<Scalar>& L, bool need_full_v)
      : svd(L, Eigen::ComputeThinU |
                   (need_full_v ? Eigen::ComputeFullV : Eigen::ComputeThinV)) {
    const auto& s = svd.singularValues();
    const Scalar tol = Scalar(1e-10) * s(0);
    rank = 0;
    for (Index i = 0; i < s.size(); ++i)
      if (s(i) > tol) ++rank;
  }

  bool full_row_rank(Index l) const { return rank == l; }

  Vec<Scalar> pinv_apply(const Vec<Scalar>& y) const {
    const auto& s = svd.singularValues();
    Vec<Scalar> t = svd.matrixU().transpose() * y;
    for (Index i = 0; i < t.size(); ++i)
      t(i) = (i < rank) ? t(i) / s(i) : Scalar(0);
    return svd.matrixV().leftCols(s.size()) * t;
  }
};

}  // namespace detail

// Orthonormal basis of kernel(L) as columns of an (n*m) x (n*m - l) matrix.
// Sampling maps use the canonical unsampled basis; otherwise the basis comes
// from a full SVD of the dense operator matrix.
template <typename Scalar>
Mat<Scalar> kernel_basis(const LinearMap<Scalar>& map) {
  const Index n = map.rows(), m = map.cols(), l = map.size();
  if (map.kind() == LinearMap<Scalar>::Kind::Sampling) {
    std::vector<bool> hit(static_cast<std::size_t>(n * m), false);
    for (const auto& [r, c] : map.samples()) hit[c * n + r] = true;
    Mat<Scalar> K = Mat<Scalar>::Zero(n * m, n * m - l);
    Index col = 0;
    for (Index pos = 0; pos < n * m; ++pos)
      if (!hit[pos]) K(pos, col++) = Scalar(1);
    return K;
  }
  detail::OperatorSvd<Scalar> op(dense_matrix(map), /*need_full_v=*/true);
  if (!op.full_row_rank(l))
    throw DegenerateOperatorError("kernel_basis: operator not full row rank");
  return op.svd.matrixV().rightCols(n * m - l);
}

// Minimum-Frobenius-norm element of L^{-1}(y).
template <typename Scalar>
Mat<Scalar> min_norm_solution(const LinearMap<Scalar>& map,
                              const Vec<Scalar>& y) {
  if (y.size() != map.size())
    throw DimensionError("min_norm_solution: measurement length mismatch");
  const Index n = map.rows(), m = map.cols();
  if (map.kind() == LinearMap<Scalar>::Kind::Sampling) {
    Mat<Scalar> X = Mat<Scalar>::Zero(n, m);
    for (Index j = 0; j < map.size(); ++j) {
      const auto& [r, c] = map.samples()[j];
      X(r, c) = y(j);
    }
    return X;
  }
  const Mat<Scalar> L = dense_matrix(map);
  detail::OperatorSvd<Scalar> op(L, /*need_full_v=*/false);
  Vec<Scalar> x = op.pinv_apply(y);
  const Scalar residual = (L * x - y).norm();
  if (residual > Scalar(1e-8) * std::max<Scalar>(Scalar(1), y.norm()))
    throw InfeasibleError("min_norm_solution: y not in image of the operator");
  return unvectorize<Scalar>(x, n, m);
}

// Frobenius-closest point of L^{-1}(y) to X; idempotent.
template <typename Scalar>
Mat<Scalar> project_affine(const LinearMap<Scalar>& map, const Vec<Scalar>& y,
                           const Mat<Scalar>& X) {
  if (X.rows() != map.rows() || X.cols() != map.cols())
    throw DimensionError("project_affine: X shape mismatch");
  if (map.kind() == LinearMap<Scalar>::Kind::Sampling) {
    Mat<Scalar> P = X;
    for (Index j = 0; j < map.size(); ++j) {
      const auto& [r, c] = map.samples()[j];
      P(r, c) = y(j);
    }
    return P;
  }
  const Mat<Scalar> L = dense_matrix(map);
  detail::OperatorSvd<Scalar> op(L, /*need_full_v=*/false);
  const Vec<Scalar> x = vectorize(X);
  const Vec<Scalar> corrected = x - op.pinv_apply(Vec<Scalar>(L * x - y));
  return unvectorize<Scalar>(corrected, map.rows(), map.cols());
}

// Operator, measurements, and (optionally) the planted reference solution.
template <typename Scalar>
struct ProblemInstance {
  LinearMap<Scalar> map;
  Vec<Scalar> y;
  std::optional<Mat<Scalar>> reference;
  Index reference_rank = 0;
  std::uint64_t seed = 0;

  static ProblemInstance from_measurements(LinearMap<Scalar> map,
                                           Vec<Scalar> y,
                                           std::uint64_t seed = 0) {
    if (y.size() != map.size())
      throw DimensionError("ProblemInstance: measurement length mismatch");
    return ProblemInstance{std::move(map), std::move(y), std::nullopt, 0,
                           seed};
  }

  static ProblemInstance planted(LinearMap<Scalar> map, Mat<Scalar> reference,
                                 Index rank, std::uint64_t seed = 0) {
    Vec<Scalar> y = apply(map, reference);
    return ProblemInstance{std::move(map), std::move(y), std::move(reference),
                           rank, seed};
  }
};

}  // namespace rankmin
