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

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "rankmin/acm.hpp"
#include "rankmin/airls.hpp"
#include "rankmin/irls.hpp"

namespace rankmin {

// Classification thresholds (relative).
inline constexpr double kRankEps = 1e-6;          // rank_eps default
inline constexpr double kResidualFailTol = 1e-6;  // strong-fail residual
inline constexpr double kQImprovement = 0.98;
inline constexpr double kQWeakFail = 1.005;
inline constexpr double kRecoveryTol = 1e-4;      // reported recovery
inline constexpr double kRecoveryStopTol = 1e-6;  // in-run early stop

enum class Category { Improvement, Success, WeakFail, StrongFail };

inline const char* to_string(Category c) {
  switch (c) {
    case Category::Improvement: return "improvement";
    case Category::Success: return "success";
    case Category::WeakFail: return "weak_fail";
    case Category::StrongFail: return "strong_fail";
  }
  return "?";
}

struct TrialOutcome {
  Index trial = 0;
  std::uint64_t seed = 0;
  int k = -1;  // sensitivity index; -1 = none (failed through k_max)
  Category category = Category::StrongFail;
  bool recovered = false;
  double Q = 0;             // limit quotient, may be +inf
  double residual_rel = 0;  // ||L(X)-y|| / ||y||
  double error_rel = 0;     // ||X - X_rs||_F / ||X_rs||_F
  Index iterations = 0;
  double wall_ms = 0;
  std::string note;  // error annotation for aborted trials
};

enum class OperatorKind { Gaussian, Sampling };
enum class SolverKind { Irls, Airls, Acm };

struct ExperimentConfig {
  Index n = 12, m = 12, r = 3;
  std::optional<Index> l;      // explicit measurement count ...
  std::optional<double> c_mf;  // ... or multiplier of dim V_{<=r}
  OperatorKind op = OperatorKind::Gaussian;
  SolverKind solver = SolverKind::Irls;
  double p = 0;
  Index trials = 50;
  Index k_max = 10;
  std::uint64_t base_seed = 1;
  double nu0 = 1.2;
  Index max_iters = 500000;  // per-rerun cap
  Index post_sweeps = 200;
  std::optional<Index> rank_override;  // AIRLS representation rank
  bool measure_time = false;

  Index measurements() const {
    if (l) return *l;
    const double dim = static_cast<double>((n + m) * r - r * r);
    return static_cast<Index>(std::llround(c_mf.value_or(1.0) * dim));
  }
};

// Seed streams so reference, operator, and solver init draw independent
// randomness from one per-trial seed.
inline constexpr std::uint64_t kReferenceStream = 1;
inline constexpr std::uint64_t kOperatorStream = 2;
inline constexpr std::uint64_t kSamplingStream = 3;

// Rank-r reference X = Y * Z with i.i.d. standard normal factor entries.
template <typename Scalar = double>
Mat<Scalar> gen_reference(Index n, Index m, Index r, std::uint64_t seed) {
  if (r < 1 || r > std::min(n, m))
    throw DomainError("gen_reference: rank out of range");
  Rng rng(seed, kReferenceStream);
  const Mat<Scalar> Y = rng.gaussian<Scalar>(n, r);
  const Mat<Scalar> Z = rng.gaussian<Scalar>(r, m);
  return Y * Z;
}

template <typename Scalar = double>
LinearMap<Scalar> gen_gaussian_operator(Index n, Index m, Index l,
                                        std::uint64_t seed) {
  if (l >= n * m) throw DimensionError("gen_gaussian_operator: l >= n*m");
  for (int attempt = 0; attempt < 8; ++attempt) {
    Rng rng(seed, kOperatorStream + 16 * attempt);
    Mat<Scalar> L = rng.gaussian<Scalar>(l, n * m);
    const Vec<Scalar> s = singular_values(L);
    if (s(s.size() - 1) > Scalar(1e-10) * s(0))
      return LinearMap<Scalar>::dense(std::move(L), n, m);
  }
  throw DegenerateOperatorError(
      "gen_gaussian_operator: could not draw a full-row-rank operator");
}

// l distinct uniform positions covering every row and column at least r
// times; whole sets are redrawn until the coverage holds.
template <typename Scalar = double>
LinearMap<Scalar> gen_sampling_operator(Index n, Index m, Index l, Index r,
                                        std::uint64_t seed) {
  if (l >= n * m) throw DimensionError("gen_sampling_operator: l >= n*m");
  if (l < r * std::max(n, m))
    throw DomainError("gen_sampling_operator: coverage infeasible, need l >= "
                      "r*max(n,m)");
  Rng rng(seed, kSamplingStream);
  std::vector<Index> positions(static_cast<std::size_t>(n * m));
  for (int attempt = 0; attempt < 10000; ++attempt) {
    for (Index i = 0; i < n * m; ++i) positions[i] = i;
    // partial Fisher-Yates draw of l distinct positions
    std::vector<std::pair<Index, Index>> samples;
    samples.reserve(l);
    std::vector<Index> row_count(n, 0), col_count(m, 0);
    for (Index t = 0; t < l; ++t) {
      const Index pick =
          t + static_cast<Index>(rng.below(static_cast<std::uint64_t>(
                  n * m - t)));
      std::swap(positions[t], positions[pick]);
      const Index pos = positions[t];
      const Index row = pos % n, col = pos / n;
      samples.emplace_back(row, col);
      ++row_count[row];
      ++col_count[col];
    }
    const bool covered =
        *std::min_element(row_count.begin(), row_count.end()) >= r &&
        *std::min_element(col_count.begin(), col_count.end()) >= r;
    if (covered) return LinearMap<Scalar>::sampling(n, m, std::move(samples));
  }
  throw CoverageError(
      "gen_sampling_operator: coverage not met within 10^4 attempts");
}

// rank_eps(X) = max{ i : sigma_i > eps * ||X||_F }.
template <typename Scalar>
Index rank_eps(const Mat<Scalar>& X, Scalar eps = Scalar(kRankEps)) {
  const Vec<Scalar> sigma = singular_values(X);
  const Scalar bar = eps * sigma.norm();
  Index r = 0;
  for (Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) > bar) r = i + 1;
  return r;
}

namespace detail {

template <typename Scalar>
double spectrum_quotient(const Vec<Scalar>& sa, Index ra, const Vec<Scalar>& sr,
                         Index rr) {
  if (ra < rr) return 0.0;
  if (ra > rr) return std::numeric_limits<double>::infinity();
  double log_q = 0.0;
  for (Index i = 0; i < ra; ++i)
    log_q += 2.0 * (std::log(static_cast<double>(sa(i))) -
                    std::log(static_cast<double>(sr(i))));
  return std::exp(log_q);
}

}  // namespace detail

// Closed-form value of the gamma -> 0 limit quotient: 0 / infinity when the
// numerical ranks differ, otherwise the ratio of squared singular value
// products over the common rank.
template <typename Scalar>
double Q_eps(const Mat<Scalar>& X_alg, const Mat<Scalar>& X_rs,
             Scalar eps = Scalar(kRankEps)) {
  const Vec<Scalar> sa = singular_values(X_alg);
  const Vec<Scalar> sr = singular_values(X_rs);
  const auto count = [eps](const Vec<Scalar>& s) {
    const Scalar bar = eps * s.norm();
    Index r = 0;
    for (Index i = 0; i < s.size(); ++i)
      if (s(i) > bar) r = i + 1;
    return r;
  };
  return detail::spectrum_quotient(sa, count(sa), sr, count(sr));
}

template <typename Scalar>
Mat<Scalar> truncate_rank(const Mat<Scalar>& X, Index r) {
  Eigen::JacobiSVD<Mat<Scalar>> svd(
      X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vec<Scalar> s = svd.singularValues();
  for (Index i = r; i < s.size(); ++i) s(i) = Scalar(0);
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

// Alternating projection onto the rank-r variety and the affine set; purifies
// near-solutions so the rank verdict is insensitive to eps.
template <typename Scalar>
Mat<Scalar> post_iterate(const Mat<Scalar>& X_in,
                         const ProblemInstance<Scalar>& problem, Index r,
                         Index sweeps = 200) {
  if (r < 1) throw DomainError("post_iterate: r must be at least 1");
  Mat<Scalar> X = X_in;
  const bool sampling =
      problem.map.kind() == LinearMap<Scalar>::Kind::Sampling;
  std::optional<detail::OperatorSvd<Scalar>> op;
  Mat<Scalar> L;
  if (!sampling) {
    L = dense_matrix(problem.map);
    op.emplace(L, /*need_full_v=*/false);
  }
  for (Index sweep = 0; sweep < sweeps; ++sweep) {
    Mat<Scalar> next = truncate_rank(X, r);
    if (sampling) {
      for (Index j = 0; j < problem.map.size(); ++j) {
        const auto& [row, col] = problem.map.samples()[j];
        next(row, col) = problem.y(j);
      }
    } else {
      const Vec<Scalar> v = vectorize(next);
      next = unvectorize<Scalar>(
          Vec<Scalar>(v - op->pinv_apply(Vec<Scalar>(L * v - problem.y))),
          X.rows(), X.cols());
    }
    const Scalar move = (next - X).norm();
    X = std::move(next);
    if (move < Scalar(1e-14) * X.norm()) break;
  }
  return X;
}

// Assign exactly one category from residual and quotient; the recovery flag
// additionally requires the 1e-4 relative error and a success verdict.
template <typename Scalar>
TrialOutcome classify(const Mat<Scalar>& X_alg,
                      const ProblemInstance<Scalar>& problem,
                      Scalar eps = Scalar(kRankEps)) {
  if (!problem.reference)
    throw DomainError("classify: problem has no reference solution");
  TrialOutcome out;
  out.seed = problem.seed;
  out.residual_rel = static_cast<double>(
      (apply(problem.map, X_alg) - problem.y).norm() / problem.y.norm());
  out.Q = Q_eps(X_alg, *problem.reference, eps);
  out.error_rel = static_cast<double>(
      (X_alg - *problem.reference).norm() / problem.reference->norm());
  if (out.residual_rel > kResidualFailTol || std::isinf(out.Q))
    out.category = Category::StrongFail;
  else if (out.Q >= kQWeakFail)
    out.category = Category::WeakFail;
  else if (out.Q > kQImprovement)
    out.category = Category::Success;
  else
    out.category = Category::Improvement;
  out.recovered =
      out.error_rel <= kRecoveryTol && out.category == Category::Success;
  return out;
}

// nu_k = nu0^(2^-k); the gamma decay factor applied in rerun k is 1/nu_k.
inline double sensitivity_decay(double nu0, int k) {
  return std::pow(nu0, -std::pow(2.0, -static_cast<double>(k)));
}

namespace detail {

template <typename Scalar>
GammaSchedule<Scalar> rerun_schedule(double nu0, int k) {
  return GammaSchedule<Scalar>::constant_rate(
      static_cast<Scalar>(sensitivity_decay(nu0, k)));
}

}  // namespace detail

// Rerun the matrix solver from the same canonical start with slower decay
// per retry; the first non-failing outcome wins. Failures through k_max keep
// the last outcome with k = -1.
template <typename Scalar>
TrialOutcome sensitivity_run(const ProblemInstance<Scalar>& problem,
                             const ExperimentConfig& config) {
  TrialOutcome out;
  out.seed = problem.seed;
  for (int k = 0; k <= static_cast<int>(config.k_max); ++k) {
    Index iterations = 0;
    Mat<Scalar> X_alg;
    try {
      if (config.solver == SolverKind::Airls) {
        AirlsConfig<Scalar> ac;
        ac.p = static_cast<Scalar>(config.p);
        ac.rank = config.rank_override;
        ac.schedule = detail::rerun_schedule<Scalar>(config.nu0, k);
        ac.max_sweeps = config.max_iters;
        ac.trace_stride = 0;
        if (problem.reference)
          ac.recovery = RecoveryTarget<Scalar>{*problem.reference,
                                               Scalar(kRecoveryStopTol)};
        AirlsTrace<Scalar> trace = airls_run(problem, ac);
        iterations = trace.sweeps;
        X_alg = trace.final_x();
      } else {
        IrlsConfig<Scalar> ic;
        ic.p = static_cast<Scalar>(config.p);
        ic.schedule = detail::rerun_schedule<Scalar>(config.nu0, k);
        ic.max_iters = config.max_iters;
        ic.trace_stride = 0;
        if (problem.reference)
          ic.recovery = RecoveryTarget<Scalar>{*problem.reference,
                                               Scalar(kRecoveryStopTol)};
        IrlsTrace<Scalar> trace = irls_run(problem, ic);
        iterations = trace.iterations;
        X_alg = trace.final_x;
      }
      const Mat<Scalar> purified =
          post_iterate(X_alg, problem, problem.reference_rank,
                       config.post_sweeps);
      out = classify(purified, problem);
    } catch (const std::exception& e) {
      out = TrialOutcome{};
      out.seed = problem.seed;
      out.category = Category::StrongFail;
      out.Q = std::numeric_limits<double>::infinity();
      out.note = e.what();
    }
    out.iterations = iterations;
    if (out.category == Category::Success ||
        out.category == Category::Improvement) {
      out.k = k;
      return out;
    }
  }
  out.k = -1;
  return out;
}

// -------- vector (ACM) analogues: sigma is replaced by sorted |x| --------

template <typename Scalar>
Vec<Scalar> sorted_magnitudes(const Vec<Scalar>& x) {
  Vec<Scalar> mags = x.cwiseAbs();
  std::sort(mags.data(), mags.data() + mags.size(), std::greater<Scalar>());
  return mags;
}

template <typename Scalar>
Vec<Scalar> gen_sparse_reference(Index n, Index support, std::uint64_t seed) {
  if (support < 1 || support > n)
    throw DomainError("gen_sparse_reference: support out of range");
  Rng rng(seed, kReferenceStream);
  Vec<Scalar> x = Vec<Scalar>::Zero(n);
  // distinct support positions via partial Fisher-Yates
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) idx[i] = i;
  for (Index t = 0; t < support; ++t) {
    const Index pick =
        t + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - t)));
    std::swap(idx[t], idx[pick]);
    x(idx[t]) = static_cast<Scalar>(rng.normal());
  }
  return x;
}

template <typename Scalar>
Vec<Scalar> post_iterate_vec(const Vec<Scalar>& x_in,
                             const VectorProblem<Scalar>& problem,
                             Index support, Index sweeps = 200) {
  Vec<Scalar> x = x_in;
  detail::OperatorSvd<Scalar> op(problem.map, /*need_full_v=*/false);
  for (Index sweep = 0; sweep < sweeps; ++sweep) {
    // keep the `support` largest magnitudes
    Vec<Scalar> mags = sorted_magnitudes(x);
    const Scalar bar = support < x.size() ? mags(support) : Scalar(-1);
    Vec<Scalar> next = x;
    for (Index i = 0; i < next.size(); ++i)
      if (std::abs(next(i)) <= bar) next(i) = Scalar(0);
    next -= op.pinv_apply(Vec<Scalar>(problem.map * next - problem.y));
    const Scalar move = (next - x).norm();
    x = std::move(next);
    if (move < Scalar(1e-14) * x.norm()) break;
  }
  return x;
}

template <typename Scalar>
TrialOutcome classify_vec(const Vec<Scalar>& x_alg,
                          const VectorProblem<Scalar>& problem,
                          Scalar eps = Scalar(kRankEps)) {
  if (!problem.reference)
    throw DomainError("classify_vec: problem has no reference solution");
  TrialOutcome out;
  out.seed = problem.seed;
  out.residual_rel = static_cast<double>(
      (problem.map * x_alg - problem.y).norm() / problem.y.norm());
  const Vec<Scalar> sa = sorted_magnitudes(x_alg);
  const Vec<Scalar> sr = sorted_magnitudes(*problem.reference);
  out.Q = detail::spectrum_quotient(sa, cardinality(x_alg, eps), sr,
                                    cardinality(*problem.reference, eps));
  out.error_rel = static_cast<double>((x_alg - *problem.reference).norm() /
                                      problem.reference->norm());
  if (out.residual_rel > kResidualFailTol || std::isinf(out.Q))
    out.category = Category::StrongFail;
  else if (out.Q >= kQWeakFail)
    out.category = Category::WeakFail;
  else if (out.Q > kQImprovement)
    out.category = Category::Success;
  else
    out.category = Category::Improvement;
  out.recovered =
      out.error_rel <= kRecoveryTol && out.category == Category::Success;
  return out;
}

template <typename Scalar>
TrialOutcome sensitivity_run_vec(const VectorProblem<Scalar>& problem,
                                 const ExperimentConfig& config) {
  TrialOutcome out;
  out.seed = problem.seed;
  for (int k = 0; k <= static_cast<int>(config.k_max); ++k) {
    Index iterations = 0;
    try {
      IrlsConfig<Scalar> ic;
      ic.p = static_cast<Scalar>(config.p);
      ic.schedule = detail::rerun_schedule<Scalar>(config.nu0, k);
      ic.max_iters = config.max_iters;
      ic.trace_stride = 0;
      if (problem.reference) {
        ic.recovery = RecoveryTarget<Scalar>{Mat<Scalar>(*problem.reference),
                                             Scalar(kRecoveryStopTol)};
      }
      VecIrlsTrace<Scalar> trace = vec_irls_run(problem, ic);
      iterations = trace.iterations;
      const Vec<Scalar> purified = post_iterate_vec(
          trace.final_x, problem, problem.support_size, config.post_sweeps);
      out = classify_vec(purified, problem);
    } catch (const std::exception& e) {
      out = TrialOutcome{};
      out.seed = problem.seed;
      out.category = Category::StrongFail;
      out.Q = std::numeric_limits<double>::infinity();
      out.note = e.what();
    }
    out.iterations = iterations;
    if (out.category == Category::Success ||
        out.category == Category::Improvement) {
      out.k = k;
      return out;
    }
  }
  out.k = -1;
  return out;
}

// -------- experiment orchestration --------

inline Index worker_count() {
  if (const char* env = std::getenv("RANKMIN_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<Index>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<Index>(hw) : 1;
}

namespace detail {

template <typename F>
void parallel_for(Index count, F&& body) {
  const Index workers = std::min<Index>(worker_count(), count);
  if (workers <= 1) {
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<Index> cursor{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (Index w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (Index i = cursor.fetch_add(1); i < count; i = cursor.fetch_add(1))
        body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

// Run one classified trial per seed; trials are independent, deterministic
// per seed, and aggregated by trial index. Errors inside a trial become
// strong fails with a note.
inline std::vector<TrialOutcome> run_experiment(const ExperimentConfig& config) {
  if (config.trials < 1) throw DomainError("run_experiment: trials < 1");
  const Index l = config.measurements();
  std::vector<TrialOutcome> table(static_cast<std::size_t>(config.trials));
  detail::parallel_for(config.trials, [&](Index trial) {
    const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(trial);
    const auto t0 = std::chrono::steady_clock::now();
    TrialOutcome out;
    try {
      if (config.solver == SolverKind::Acm) {
        const Vec<double> x_rs =
            gen_sparse_reference<double>(config.n, config.r, seed);
        Rng rng(seed, kOperatorStream);
        VectorProblem<double> problem = VectorProblem<double>::planted(
            rng.gaussian<double>(l, config.n), x_rs, config.r, seed);
        out = sensitivity_run_vec(problem, config);
      } else {
        const Mat<double> x_rs =
            gen_reference<double>(config.n, config.m, config.r, seed);
        LinearMap<double> map =
            config.op == OperatorKind::Gaussian
                ? gen_gaussian_operator<double>(config.n, config.m, l, seed)
                : gen_sampling_operator<double>(config.n, config.m, l,
                                                config.r, seed);
        ProblemInstance<double> problem =
            ProblemInstance<double>::planted(std::move(map), x_rs, config.r,
                                             seed);
        out = sensitivity_run(problem, config);
      }
    } catch (const std::exception& e) {
      out = TrialOutcome{};
      out.category = Category::StrongFail;
      out.Q = std::numeric_limits<double>::infinity();
      out.note = e.what();
    }
    out.trial = trial;
    out.seed = seed;
    if (config.measure_time) {
      out.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    }
    table[static_cast<std::size_t>(trial)] = std::move(out);
  });
  return table;
}

}  // namespace rankmin
