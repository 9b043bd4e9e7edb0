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

#include <limits>

#include "rankmin/linops.hpp"
#include "rankmin/objective.hpp"
#include "rankmin/types.hpp"

namespace rankmin {

// Image-form solves are trusted while the inner l x l system stays below
// this condition estimate; past it the kernel form takes over.
inline constexpr double kImageConditionLimit = 1e10;

namespace detail {

// Symmetric factorization plus a single iterative-refinement pass. The
// condition estimate (1/rcond) is written through cond_out when requested.
template <typename Scalar>
Vec<Scalar> spd_solve_refined(const Mat<Scalar>& A, const Vec<Scalar>& b,
                              Scalar* cond_out = nullptr) {
  Eigen::LDLT<Mat<Scalar>> ldlt(A);
  Scalar cond = std::numeric_limits<Scalar>::infinity();
  if (ldlt.info() == Eigen::Success) {
    const Scalar rc = ldlt.rcond();
    if (rc > Scalar(0)) cond = Scalar(1) / rc;
  }
  if (cond_out) *cond_out = cond;
  if (!std::isfinite(cond))
    throw IllConditionedError(static_cast<double>(cond));
  Vec<Scalar> x = ldlt.solve(b);
  x += ldlt.solve(Vec<Scalar>(b - A * x));
  return x;
}

// Apply the weight (or a power of it) to a vectorized n x m matrix:
// Left weights multiply from the left, Right weights from the right.
template <typename Scalar>
Vec<Scalar> weighted_vec(const Mat<Scalar>& W, WeightSide side,
                         const Vec<Scalar>& v, Index n, Index m) {
  const Mat<Scalar> X = unvectorize(v, n, m);
  if (side == WeightSide::Left) return vectorize<Scalar>(W * X);
  return vectorize<Scalar>(X * W);
}

}  // namespace detail

// argmin ||H x|| subject to L x = y via
// x = (H^T H)^{-1} L^T (L (H^T H)^{-1} L^T)^{-1} y.
template <typename Scalar>
Vec<Scalar> weighted_ls(const Mat<Scalar>& L, const Mat<Scalar>& H,
                        const Vec<Scalar>& y) {
  if (L.cols() != H.cols())
    throw DimensionError("weighted_ls: L and H act on different spaces");
  if (L.rows() != y.size())
    throw DimensionError("weighted_ls: measurement length mismatch");
  const Mat<Scalar> HtH = H.transpose() * H;
  Eigen::LDLT<Mat<Scalar>> inner(HtH);
  if (inner.info() != Eigen::Success || inner.rcond() <= Scalar(0) ||
      Scalar(1) / inner.rcond() > Scalar(kImageConditionLimit))
    throw IllConditionedError(
        inner.rcond() > 0 ? 1.0 / static_cast<double>(inner.rcond())
                          : std::numeric_limits<double>::infinity());
  const Mat<Scalar> S = inner.solve(Mat<Scalar>(L.transpose()));
  const Mat<Scalar> M = L * S;
  Scalar cond = 0;
  Vec<Scalar> lambda = detail::spd_solve_refined<Scalar>(M, y, &cond);
  if (cond > Scalar(kImageConditionLimit))
    throw IllConditionedError(static_cast<double>(cond));
  return S * lambda;
}

// Kernel form of the same minimizer: x = x0 - K (K^T H^T H K)^{-1} K^T H^T H x0
// for a kernel basis K of L; preferred when H^T H is nearly singular.
template <typename Scalar>
Vec<Scalar> weighted_ls_kernel(const Mat<Scalar>& L, const Mat<Scalar>& H,
                               const Vec<Scalar>& y, const Vec<Scalar>& x0,
                               const Mat<Scalar>* kernel = nullptr) {
  if ((L * x0 - y).norm() > Scalar(1e-8) * std::max<Scalar>(1, y.norm()))
    throw InfeasibleError("weighted_ls_kernel: x0 does not satisfy L x0 = y");
  Mat<Scalar> K;
  if (kernel) {
    K = *kernel;
  } else {
    Eigen::BDCSVD<Mat<Scalar>> svd(L, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    if (s(s.size() - 1) <= Scalar(1e-10) * s(0))
      throw DegenerateOperatorError("weighted_ls_kernel: L rank deficient");
    K = svd.matrixV().rightCols(L.cols() - L.rows());
  }
  const Mat<Scalar> HK = H * K;
  const Mat<Scalar> G = HK.transpose() * HK;
  const Vec<Scalar> b = HK.transpose() * (H * x0);
  const Vec<Scalar> v = detail::spd_solve_refined<Scalar>(G, b);
  return x0 - K * v;
}

namespace detail {

// B^T = W_applied^{-1} L^T columnwise, i.e. each reshaped row of L gets the
// inverse weight applied on its side; M = L B^T is the inner Gram system.
template <typename Scalar>
Mat<Scalar> inverse_weighted_adjoint(const Mat<Scalar>& L,
                                     const Mat<Scalar>& Winv, WeightSide side,
                                     Index n, Index m) {
  Mat<Scalar> BT(n * m, L.rows());
  if (side == WeightSide::Left) {
    for (Index c = 0; c < m; ++c)
      BT.middleRows(c * n, n) =
          Winv * L.middleCols(c * n, n).transpose();
  } else {
    for (Index j = 0; j < L.rows(); ++j) {
      const Mat<Scalar> R = unvectorize<Scalar>(L.row(j).transpose(), n, m);
      BT.col(j) = vectorize<Scalar>(Mat<Scalar>(R * Winv));
    }
  }
  return BT;
}

template <typename Scalar>
Mat<Scalar> solve_image_dense(const Mat<Scalar>& L, Index n, Index m,
                              const Vec<Scalar>& y,
                              const WeightMatrix<Scalar>& W,
                              Scalar* cond_out = nullptr) {
  const Mat<Scalar> Winv = W.inverse();
  const Mat<Scalar> BT =
      inverse_weighted_adjoint(L, Winv, W.side(), n, m);
  const Mat<Scalar> M = L * BT;
  Scalar cond = 0;
  const Vec<Scalar> lambda = spd_solve_refined<Scalar>(M, y, &cond);
  if (cond_out) *cond_out = cond;
  if (cond > Scalar(kImageConditionLimit))
    throw IllConditionedError(static_cast<double>(cond));
  return unvectorize<Scalar>(BT * lambda, n, m);
}

template <typename Scalar>
Mat<Scalar> solve_kernel_dense(const Mat<Scalar>& K, Index n, Index m,
                               const Mat<Scalar>& X0,
                               const WeightMatrix<Scalar>& W) {
  const Mat<Scalar> Wmat = W.matrix();
  Mat<Scalar> WK(K.rows(), K.cols());
  for (Index j = 0; j < K.cols(); ++j)
    WK.col(j) = weighted_vec(Wmat, W.side(), Vec<Scalar>(K.col(j)), n, m);
  const Mat<Scalar> G = K.transpose() * WK;
  const Vec<Scalar> b = WK.transpose() * vectorize(X0);
  const Vec<Scalar> v = spd_solve_refined<Scalar>(G, b);
  return X0 - unvectorize<Scalar>(K * v, n, m);
}

}  // namespace detail

// Weighted minimum over the affine set: argmin ||W^{1/2} X||_F (Left) or
// ||X W^{1/2}||_F (Right) subject to L(X) = y, via the image formula
// X = W_applied^{-1} L^* (L W_applied^{-1} L^*)^{-1} y. Throws
// IllConditionedError when the inner system exceeds the condition limit,
// signalling that the kernel form should be used instead.
template <typename Scalar>
Mat<Scalar> solve_image(const ProblemInstance<Scalar>& problem,
                        const WeightMatrix<Scalar>& W,
                        Scalar* cond_out = nullptr) {
  return detail::solve_image_dense(dense_matrix(problem.map),
                                   problem.map.rows(), problem.map.cols(),
                                   problem.y, W, cond_out);
}

// Kernel form X = X0 - K (K^* W K)^{-1} K^* W(X0); requires a feasible X0.
// Stable for small gamma at the price of an (nm - l)-sized system.
template <typename Scalar>
Mat<Scalar> solve_kernel(const ProblemInstance<Scalar>& problem,
                         const WeightMatrix<Scalar>& W, const Mat<Scalar>& X0,
                         const Mat<Scalar>* kernel = nullptr) {
  const Scalar feas = (apply(problem.map, X0) - problem.y).norm();
  if (feas > Scalar(1e-8) * std::max<Scalar>(1, problem.y.norm()))
    throw InfeasibleError("solve_kernel: X0 is not feasible");
  Mat<Scalar> K;
  if (!kernel) K = kernel_basis(problem.map);
  return detail::solve_kernel_dense(kernel ? *kernel : K, problem.map.rows(),
                                    problem.map.cols(), X0, W);
}

// Unconstrained minimizer of ||L(X) - y||^2 + c_L * gamma * ||W^{1/2} X||_F^2
// (right-weighted analogue for Right side). The normal system is always
// positive definite for gamma > 0.
template <typename Scalar>
Mat<Scalar> solve_relaxed(const ProblemInstance<Scalar>& problem,
                          const WeightMatrix<Scalar>& W, Scalar gamma,
                          Scalar c_L) {
  if (!(gamma > Scalar(0)) || !(c_L > Scalar(0)))
    throw DomainError("solve_relaxed: gamma and c_L must be positive");
  const Index n = problem.map.rows(), m = problem.map.cols();
  const Mat<Scalar> L = dense_matrix(problem.map);
  Mat<Scalar> A = L.transpose() * L;
  const Mat<Scalar> Wmat = W.matrix();
  const Scalar scale = c_L * gamma;
  if (W.side() == WeightSide::Left) {
    for (Index c = 0; c < m; ++c)
      A.block(c * n, c * n, n, n) += scale * Wmat;
  } else {
    for (Index c1 = 0; c1 < m; ++c1)
      for (Index c2 = 0; c2 < m; ++c2)
        A.block(c1 * n, c2 * n, n, n).diagonal().array() +=
            scale * Wmat(c1, c2);
  }
  const Vec<Scalar> b = L.transpose() * problem.y;
  return unvectorize<Scalar>(detail::spd_solve_refined<Scalar>(A, b), n, m);
}

}  // namespace rankmin
