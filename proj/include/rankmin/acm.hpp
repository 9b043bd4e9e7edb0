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

#include <optional>
#include <vector>

#include "rankmin/irls.hpp"

namespace rankmin {

// Affine cardinality minimization instance: a dense underdetermined map on
// vectors plus measurements, optionally with the planted sparse reference.
template <typename Scalar>
struct VectorProblem {
  Mat<Scalar> map;  // l x n, l < n
  Vec<Scalar> y;
  std::optional<Vec<Scalar>> reference;
  Index support_size = 0;
  std::uint64_t seed = 0;

  static VectorProblem planted(Mat<Scalar> map, Vec<Scalar> reference,
                               Index support, std::uint64_t seed = 0) {
    if (map.rows() >= map.cols())
      throw DimensionError("VectorProblem: map must be underdetermined");
    Vec<Scalar> y = map * reference;
    return VectorProblem{std::move(map), std::move(y), std::move(reference),
                         support, seed};
  }

  static VectorProblem from_measurements(Mat<Scalar> map, Vec<Scalar> y,
                                         std::uint64_t seed = 0) {
    if (map.rows() >= map.cols())
      throw DimensionError("VectorProblem: map must be underdetermined");
    if (y.size() != map.rows())
      throw DimensionError("VectorProblem: measurement length mismatch");
    return VectorProblem{std::move(map), std::move(y), std::nullopt, 0, seed};
  }
};

// Diagonal weight entries (x_i^2 + gamma)^{p/2-1}; the vector analogue of
// the matrix weight. gamma = 0 is admitted with the same clamping.
template <typename Scalar>
Vec<Scalar> vec_weight(const Vec<Scalar>& x, Scalar gamma, Scalar p) {
  detail::check_gamma(gamma);
  if (!(p >= Scalar(0) && p <= Scalar(1)))
    throw DomainError("vec_weight: p must lie in [0, 1]");
  Vec<Scalar> w(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const Scalar base =
        std::max(x(i) * x(i) + gamma, detail::eig_floor<Scalar>());
    w(i) = std::pow(base, p / 2 - 1);
  }
  return w;
}

// Numerical cardinality: entries above rel_tol * ||x||_2.
template <typename Scalar>
Index cardinality(const Vec<Scalar>& x, Scalar rel_tol = Scalar(1e-6)) {
  const Scalar bar = rel_tol * x.norm();
  Index count = 0;
  for (Index i = 0; i < x.size(); ++i)
    if (std::abs(x(i)) > bar) ++count;
  return count;
}

template <typename Scalar>
struct VecTraceRecord {
  Scalar gamma;
  Scalar f_value;  // sum_i log(x_i^2 + gamma)
  Scalar residual;
  Scalar step;
  Index card;
};

template <typename Scalar>
struct VecIrlsTrace {
  std::vector<VecTraceRecord<Scalar>> records;
  Vec<Scalar> final_x;
  StopReason reason = StopReason::MaxIters;
  Index iterations = 0;
  Index kernel_fallbacks = 0;
};

// Vector IRLS-p. The weighted least-squares subproblem is the diagonal
// specialization, handled by weighted_ls / weighted_ls_kernel with
// H = diag(vec_weight)^{1/2}; the side schedule is meaningless here and the
// relaxed strategy is not supported.
template <typename Scalar>
VecIrlsTrace<Scalar> vec_irls_run(const VectorProblem<Scalar>& problem,
                                  const IrlsConfig<Scalar>& config) {
  if (config.strategy.kind == LsPolicy<Scalar>::Kind::Relaxed)
    throw UnsupportedVariantError(
        "vec_irls_run: relaxed strategy not supported for vectors");
  const Mat<Scalar>& L = problem.map;
  const Index n = L.cols();

  Eigen::BDCSVD<Mat<Scalar>> svd(
      L, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= Scalar(1e-10) * sv(0))
    throw DegenerateOperatorError("vec_irls_run: map not full row rank");
  Vec<Scalar> x = svd.solve(problem.y);  // minimum-norm start
  const Mat<Scalar> K = svd.matrixV().rightCols(n - L.rows());

  Scalar gamma = config.schedule.gamma0.value_or(x.squaredNorm());
  const Scalar gamma_floor =
      config.gamma_min.value_or(Scalar(1e-14) * gamma);

  VecIrlsTrace<Scalar> trace;
  const auto f_value = [&](const Vec<Scalar>& v, Scalar g) {
    Scalar out = 0;
    for (Index i = 0; i < v.size(); ++i) out += std::log(v(i) * v(i) + g);
    return out;
  };
  const auto record = [&](Scalar step) {
    trace.records.push_back({gamma, f_value(x, gamma),
                             (L * x - problem.y).norm(), step,
                             cardinality(x)});
  };
  record(Scalar(0));

  const bool kernel_only =
      config.strategy.kind == LsPolicy<Scalar>::Kind::KernelOnly;
  const bool image_only =
      config.strategy.kind == LsPolicy<Scalar>::Kind::ImageOnly;
  for (Index i = 1; i <= config.max_iters; ++i) {
    const Vec<Scalar> w = vec_weight(x, gamma, config.p);
    const Mat<Scalar> H =
        Mat<Scalar>(w.cwiseSqrt().asDiagonal());
    Vec<Scalar> next;
    try {
      if (kernel_only) {
        next = weighted_ls_kernel(L, H, problem.y, x, &K);
      } else {
        try {
          next = weighted_ls(L, H, problem.y);
        } catch (const IllConditionedError&) {
          if (image_only) throw;
          ++trace.kernel_fallbacks;
          next = weighted_ls_kernel(L, H, problem.y, x, &K);
        }
      }
    } catch (const std::exception& e) {
      throw SolverError(i, e.what());
    }
    const Scalar step = (next - x).norm();
    x = std::move(next);
    {
      Vec<Scalar> mags = x.cwiseAbs();
      std::sort(mags.data(), mags.data() + mags.size(),
                std::greater<Scalar>());
      gamma = config.schedule.next(gamma, mags);
    }
    trace.iterations = i;

    bool stop = false;
    if (config.recovery) {
      const auto& ref = config.recovery->reference;
      if ((x - ref.col(0)).norm() <=
          config.recovery->tol * ref.col(0).norm()) {
        trace.reason = StopReason::Recovered;
        stop = true;
      }
    }
    if (!stop && gamma < gamma_floor) {
      trace.reason = StopReason::GammaFloor;
      stop = true;
    }
    if (!stop && step < config.stall_tol * x.norm()) {
      trace.reason = StopReason::Stalled;
      stop = true;
    }
    if (!stop && i == config.max_iters) {
      trace.reason = StopReason::MaxIters;
      stop = true;
    }
    if (stop || (config.trace_stride > 0 && i % config.trace_stride == 0))
      record(step);
    if (stop) break;
  }
  trace.final_x = std::move(x);
  return trace;
}

}  // namespace rankmin
