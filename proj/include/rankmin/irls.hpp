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
#include <utility>
#include <vector>

#include "rankmin/lsq.hpp"

namespace rankmin {

class SolverError : public std::runtime_error {
 public:
  SolverError(Index iteration, const std::string& what)
      : std::runtime_error("iteration " + std::to_string(iteration) + ": " +
                           what),
        iteration_(iteration) {}
  Index iteration() const { return iteration_; }

 private:
  Index iteration_;
};

// Weakly decreasing regularization sequence. ConstantRate multiplies by a
// fixed factor nu in (0,1); SigmaBased tracks alpha * sigma_{K+1} of the
// current iterate, clamped to stay monotone.
template <typename Scalar>
struct GammaSchedule {
  enum class Kind { ConstantRate, SigmaBased };
  Kind kind = Kind::ConstantRate;
  Scalar rate = Scalar(0.97);  // nu
  Scalar alpha = Scalar(0.1);
  Index rank_cap = 1;  // K
  std::optional<Scalar> gamma0;  // empty = Auto (sigma_1(X0)^2)

  static GammaSchedule constant_rate(Scalar nu,
                                     std::optional<Scalar> g0 = {}) {
    if (!(nu > Scalar(0) && nu < Scalar(1)))
      throw DomainError("GammaSchedule: rate must lie in (0, 1)");
    GammaSchedule s;
    s.kind = Kind::ConstantRate;
    s.rate = nu;
    s.gamma0 = g0;
    return s;
  }

  static GammaSchedule sigma_based(Scalar alpha, Index K,
                                   std::optional<Scalar> g0 = {}) {
    if (!(alpha > Scalar(0) && alpha <= Scalar(1)))
      throw DomainError("GammaSchedule: alpha must lie in (0, 1]");
    GammaSchedule s;
    s.kind = Kind::SigmaBased;
    s.alpha = alpha;
    s.rank_cap = K;
    s.gamma0 = g0;
    return s;
  }

  // Frozen gamma: decay disabled, gamma0 fixed.
  static GammaSchedule frozen(Scalar g0) {
    GammaSchedule s;
    s.kind = Kind::SigmaBased;
    s.alpha = Scalar(1);
    s.rank_cap = 0;
    s.gamma0 = g0;
    s.freeze_ = true;
    return s;
  }

  Scalar initial(const Vec<Scalar>& sigma0) const {
    if (gamma0) return *gamma0;
    return sigma0.size() > 0 ? sigma0(0) * sigma0(0) : Scalar(1);
  }

  Scalar next(Scalar gamma, const Vec<Scalar>& sigma) const {
    if (freeze_) return gamma;
    if (kind == Kind::ConstantRate) return rate * gamma;
    const Scalar s =
        rank_cap < sigma.size() ? sigma(rank_cap) : Scalar(0);
    return std::min(gamma, alpha * s);
  }

 private:
  bool freeze_ = false;
};

// Weight-side sequence s_i: either fixed or alternating between the two
// complementary Gram sides.
struct SideSchedule {
  enum class Kind { Constant, Alternating };
  Kind kind = Kind::Constant;
  WeightSide first = WeightSide::Left;

  static SideSchedule constant(WeightSide side) {
    return SideSchedule{Kind::Constant, side};
  }
  static SideSchedule alternating(WeightSide first = WeightSide::Left) {
    return SideSchedule{Kind::Alternating, first};
  }

  WeightSide at(Index i) const {
    if (kind == Kind::Constant) return first;
    return i % 2 == 0 ? first : opposite(first);
  }
};

// How the weighted least-squares subproblem is solved. AutoImageKernel uses
// the image formula while its inner system is well-conditioned and falls
// back to the kernel formula with X0 = previous iterate otherwise.
template <typename Scalar>
struct LsPolicy {
  enum class Kind { AutoImageKernel, ImageOnly, KernelOnly, Relaxed };
  Kind kind = Kind::AutoImageKernel;
  std::optional<Scalar> c_L;  // Relaxed only; empty = Auto (||y||^2 / l)

  static LsPolicy auto_switch() { return LsPolicy{}; }
  static LsPolicy image_only() { return LsPolicy{Kind::ImageOnly, {}}; }
  static LsPolicy kernel_only() { return LsPolicy{Kind::KernelOnly, {}}; }
  static LsPolicy relaxed(std::optional<Scalar> c_L = {}) {
    return LsPolicy{Kind::Relaxed, c_L};
  }
};

template <typename Scalar>
struct RecoveryTarget {
  Mat<Scalar> reference;
  Scalar tol = Scalar(1e-6);
};

template <typename Scalar>
struct IrlsConfig {
  Scalar p = Scalar(0);
  SideSchedule sides = SideSchedule::constant(WeightSide::Left);
  GammaSchedule<Scalar> schedule = GammaSchedule<Scalar>::constant_rate(0.97);
  LsPolicy<Scalar> strategy = LsPolicy<Scalar>::auto_switch();
  Index max_iters = 100000;
  std::optional<Scalar> gamma_min;  // default 1e-14 * gamma0
  Scalar stall_tol = Scalar(1e-10);  // relative to ||X||_F
  std::optional<RecoveryTarget<Scalar>> recovery;
  std::optional<Mat<Scalar>> start;  // feasible override of the canonical X0
  Index trace_stride = 1;  // 0 = keep only first and final record
};

enum class StopReason { MaxIters, GammaFloor, Stalled, Recovered };

template <typename Scalar>
struct TraceRecord {
  Scalar gamma;
  Scalar f_left;
  Scalar f_right;
  Scalar residual;  // ||L(X) - y||
  Scalar step;      // ||X_i - X_{i-1}||_F
  Vec<Scalar> sigma;
};

template <typename Scalar>
struct IrlsTrace {
  std::vector<TraceRecord<Scalar>> records;
  Mat<Scalar> final_x;
  StopReason reason = StopReason::MaxIters;
  Index iterations = 0;
  Index kernel_fallbacks = 0;
};

namespace detail {

template <typename Scalar>
Scalar f_from_sigma(const Vec<Scalar>& sigma, Scalar gamma, Index count) {
  Scalar value = 0;
  for (Index i = 0; i < count; ++i) {
    const Scalar s2 = i < sigma.size() ? sigma(i) * sigma(i) : Scalar(0);
    value += std::log(s2 + gamma);
  }
  return value;
}

// Per-run cache of the dense operator and (on demand) its kernel basis.
template <typename Scalar>
struct StepContext {
  Mat<Scalar> L;
  Mat<Scalar> K;
  bool have_kernel = false;
  Index fallbacks = 0;

  explicit StepContext(const LinearMap<Scalar>& map) : map_(&map) {
    L = dense_matrix(map);
  }
  const Mat<Scalar>& kernel() {
    if (!have_kernel) {
      K = kernel_basis(*map_);
      have_kernel = true;
    }
    return K;
  }

 private:
  const LinearMap<Scalar>* map_;
};

}  // namespace detail

// One weighted least-squares update with the weight frozen at (X, gamma).
// gamma = 0 is admitted for frozen-gamma runs on full-rank iterates.
template <typename Scalar>
Mat<Scalar> irls_step(const Mat<Scalar>& X, Scalar gamma, WeightSide side,
                      Scalar p, const LsPolicy<Scalar>& strategy,
                      const ProblemInstance<Scalar>& problem,
                      detail::StepContext<Scalar>* ctx = nullptr) {
  const WeightMatrix<Scalar> W = weight(X, gamma, p, side);
  const Index n = problem.map.rows(), m = problem.map.cols();
  using Kind = typename LsPolicy<Scalar>::Kind;
  switch (strategy.kind) {
    case Kind::Relaxed: {
      const Scalar c =
          strategy.c_L.value_or(problem.y.squaredNorm() /
                                static_cast<Scalar>(problem.map.size()));
      return solve_relaxed(problem, W, gamma, c);
    }
    case Kind::ImageOnly:
      if (ctx)
        return detail::solve_image_dense(ctx->L, n, m, problem.y, W);
      return solve_image(problem, W);
    case Kind::KernelOnly:
      if (ctx)
        return detail::solve_kernel_dense(ctx->kernel(), n, m, X, W);
      return solve_kernel(problem, W, X);
    case Kind::AutoImageKernel: {
      try {
        if (ctx)
          return detail::solve_image_dense(ctx->L, n, m, problem.y, W);
        return solve_image(problem, W);
      } catch (const IllConditionedError&) {
        if (ctx) {
          ++ctx->fallbacks;
          return detail::solve_kernel_dense(ctx->kernel(), n, m, X, W);
        }
        return solve_kernel(problem, W, X);
      }
    }
  }
  throw DomainError("irls_step: unknown strategy");
}

// Canonical starting pair: minimum-norm feasible point and (unless pinned)
// gamma0 = sigma_1(X0)^2, large enough that the first weight is nearly a
// multiple of the identity.
template <typename Scalar>
std::pair<Mat<Scalar>, Scalar> canonical_start(
    const ProblemInstance<Scalar>& problem,
    const GammaSchedule<Scalar>& schedule) {
  Mat<Scalar> X0 = min_norm_solution(problem.map, problem.y);
  const Scalar g0 = schedule.initial(singular_values(X0));
  return {std::move(X0), g0};
}

// Full-matrix IRLS-p iteration with weight-side schedule, gamma schedule,
// and stopping control.
template <typename Scalar>
IrlsTrace<Scalar> irls_run(const ProblemInstance<Scalar>& problem,
                           const IrlsConfig<Scalar>& config) {
  if (config.max_iters < 1)
    throw DomainError("irls_run: max_iters must be at least 1");
  IrlsTrace<Scalar> trace;
  detail::StepContext<Scalar> ctx(problem.map);

  auto [X, gamma] = canonical_start(problem, config.schedule);
  if (config.start) {
    X = *config.start;
    gamma = config.schedule.initial(singular_values(X));
  }
  const Scalar gamma_floor =
      config.gamma_min.value_or(Scalar(1e-14) * gamma);
  const Index n = problem.map.rows(), m = problem.map.cols();

  Vec<Scalar> sigma = singular_values(X);
  const auto record = [&](Scalar step) {
    trace.records.push_back(
        {gamma, detail::f_from_sigma(sigma, gamma, n),
         detail::f_from_sigma(sigma, gamma, m),
         (apply(problem.map, X) - problem.y).norm(), step, sigma});
  };
  record(Scalar(0));

  for (Index i = 1; i <= config.max_iters; ++i) {
    const WeightSide side = config.sides.at(i - 1);
    Mat<Scalar> next;
    try {
      next = irls_step(X, gamma, side, config.p, config.strategy, problem,
                       &ctx);
    } catch (const std::exception& e) {
      throw SolverError(i, e.what());
    }
    const Scalar step = (next - X).norm();
    X = std::move(next);
    sigma = singular_values(X);
    gamma = config.schedule.next(gamma, sigma);
    trace.iterations = i;

    bool stop = false;
    if (config.recovery) {
      const Scalar err = (X - config.recovery->reference).norm();
      if (err <= config.recovery->tol * config.recovery->reference.norm()) {
        trace.reason = StopReason::Recovered;
        stop = true;
      }
    }
    if (!stop && gamma < gamma_floor) {
      trace.reason = StopReason::GammaFloor;
      stop = true;
    }
    if (!stop && step < config.stall_tol * X.norm()) {
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
  trace.kernel_fallbacks = ctx.fallbacks;
  trace.final_x = std::move(X);
  return trace;
}

// ||X - X_W|| / max(1, ||X||) for the p = 0 weight at (X, gamma); zero
// exactly at stationary points of f_gamma restricted to the affine set.
template <typename Scalar>
Scalar stationarity_residual(const Mat<Scalar>& X, Scalar gamma,
                             const ProblemInstance<Scalar>& problem) {
  const Mat<Scalar> XW = irls_step(X, gamma, WeightSide::Left, Scalar(0),
                                   LsPolicy<Scalar>::auto_switch(), problem);
  return (X - XW).norm() / std::max<Scalar>(Scalar(1), X.norm());
}

}  // namespace rankmin
