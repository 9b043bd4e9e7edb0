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
#include <vector>

#include "rankmin/irls.hpp"

namespace rankmin {

// Smallest representation rank that is always large enough for l
// measurements: one past the largest r with dim(V_{<=r}) = (n+m)r - r^2 <= l.
inline Index rank_bound(Index n, Index m, Index l) {
  const double s = static_cast<double>(n + m);
  const double disc = s * s - 4.0 * static_cast<double>(l);
  Index r;
  if (disc < 0.0) {
    r = std::min(n, m);
  } else {
    r = 1 + static_cast<Index>(std::floor((s - std::sqrt(disc)) / 2.0));
  }
  return std::clamp<Index>(r, 1, std::min(n, m));
}

// Low-rank iterate X = Y * Z with one factor kept orthonormal. sigma holds
// the singular values of X, refreshed at every refactor.
template <typename Scalar>
struct FactoredIterate {
  Mat<Scalar> Y;      // n x R
  Mat<Scalar> Z;      // R x m
  Vec<Scalar> sigma;  // R values, descending
  enum class Phase { YOrtho, ZOrtho };
  Phase phase = Phase::ZOrtho;

  Index rank() const { return Y.cols(); }
  Mat<Scalar> product() const { return Y * Z; }
};

template <typename Scalar>
struct AirlsConfig {
  Scalar p = Scalar(0);
  std::optional<Index> rank;   // empty = Auto via rank_bound
  std::optional<Scalar> c_L;   // empty = Auto (||y||^2 / l)
  GammaSchedule<Scalar> schedule = GammaSchedule<Scalar>::constant_rate(0.9);
  Index max_sweeps = 100000;
  std::optional<Scalar> gamma_min;
  Scalar stall_tol = Scalar(1e-10);
  std::optional<RecoveryTarget<Scalar>> recovery;
  Index trace_stride = 1;
};

template <typename Scalar>
struct AirlsTrace {
  std::vector<TraceRecord<Scalar>> records;
  FactoredIterate<Scalar> final_iterate;
  StopReason reason = StopReason::MaxIters;
  Index sweeps = 0;
  Scalar c_L = Scalar(0);

  Mat<Scalar> final_x() const { return final_iterate.product(); }
};

// Switch which factor is orthonormal by taking the SVD of the other one;
// the product Y * Z is unchanged and sigma is refreshed.
template <typename Scalar>
FactoredIterate<Scalar> refactor(FactoredIterate<Scalar> it) {
  using Phase = typename FactoredIterate<Scalar>::Phase;
  if (it.phase == Phase::ZOrtho) {
    // Z has orthonormal rows, so the SVD of Y is the SVD data of X.
    Eigen::JacobiSVD<Mat<Scalar>> svd(
        it.Y, Eigen::ComputeThinU | Eigen::ComputeThinV);
    it.sigma = svd.singularValues();
    it.Z = it.sigma.asDiagonal() * (svd.matrixV().transpose() * it.Z);
    it.Y = svd.matrixU();
    it.phase = Phase::YOrtho;
  } else {
    Eigen::JacobiSVD<Mat<Scalar>> svd(
        it.Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    it.sigma = svd.singularValues();
    it.Y = it.Y * svd.matrixU() * it.sigma.asDiagonal();
    it.Z = svd.matrixV().transpose();
    it.phase = Phase::ZOrtho;
  }
  return it;
}

namespace detail {

// Squared diagonal ridge weights (sigma_k^2 + gamma)^{p/2 - 1}.
template <typename Scalar>
Vec<Scalar> ridge_diagonal(const Vec<Scalar>& sigma, Scalar gamma, Scalar p) {
  Vec<Scalar> d(sigma.size());
  for (Index k = 0; k < sigma.size(); ++k)
    d(k) = std::pow(sigma(k) * sigma(k) + gamma, p / 2 - 1);
  return d;
}

template <typename Scalar>
struct SampleIndex {
  std::vector<std::vector<Index>> by_row;
  std::vector<std::vector<Index>> by_col;

  SampleIndex(const LinearMap<Scalar>& map)
      : by_row(map.rows()), by_col(map.cols()) {
    for (Index j = 0; j < map.size(); ++j) {
      const auto& [r, c] = map.samples()[j];
      by_row[r].push_back(j);
      by_col[c].push_back(j);
    }
  }
};

// Khatri-Rao system matrix for the Z step: columns ordered so that
// A * vec(Z) = L(Y Z) under column-major vectorization of Z.
template <typename Scalar>
Mat<Scalar> z_system(const LinearMap<Scalar>& map, const Mat<Scalar>& Y) {
  const Index l = map.size(), m = map.cols(), R = Y.cols();
  Mat<Scalar> A = Mat<Scalar>::Zero(l, R * m);
  for (const auto& f : map.factors()) {
    const Mat<Scalar> LY = f.left * Y;  // l x R
    for (Index c = 0; c < m; ++c)
      A.middleCols(c * R, R) +=
          f.right.row(c).transpose().asDiagonal() * LY;
  }
  return A;
}

template <typename Scalar>
Mat<Scalar> y_system(const LinearMap<Scalar>& map, const Mat<Scalar>& Z) {
  const Index l = map.size(), n = map.rows(), R = Z.rows();
  Mat<Scalar> A = Mat<Scalar>::Zero(l, n * R);
  for (const auto& f : map.factors()) {
    const Mat<Scalar> ZR = Z * f.right;  // R x l
    for (Index k = 0; k < R; ++k)
      A.middleCols(k * n, n) += ZR.row(k).transpose().asDiagonal() * f.left;
  }
  return A;
}

template <typename Scalar>
Vec<Scalar> small_ridge_solve(const Mat<Scalar>& A, const Vec<Scalar>& rhs,
                              const Vec<Scalar>& penalty) {
  Mat<Scalar> G = A.transpose() * A;
  G.diagonal() += penalty;
  return spd_solve_refined<Scalar>(G, Vec<Scalar>(A.transpose() * rhs));
}

}  // namespace detail

// Minimizer of || L(Y Z) - y ||^2 + c_L * gamma * ||(S^2+g I)^{-1/2+p/4} Z||^2
// for the orthonormal Y and current sigma. Sampling maps are solved
// column-by-column; factored maps assemble the Khatri-Rao system.
template <typename Scalar>
Mat<Scalar> update_Z(const FactoredIterate<Scalar>& it, Scalar gamma, Scalar p,
                     Scalar c_L, const ProblemInstance<Scalar>& problem) {
  if (it.phase != FactoredIterate<Scalar>::Phase::YOrtho)
    throw DomainError("update_Z: iterate must be in the Y-orthonormal phase");
  if (!(gamma > Scalar(0)) || !(c_L > Scalar(0)))
    throw DomainError("update_Z: gamma and c_L must be positive");
  const Index R = it.rank(), m = problem.map.cols();
  const Vec<Scalar> penalty =
      c_L * gamma * detail::ridge_diagonal(it.sigma, gamma, p);

  if (problem.map.kind() == LinearMap<Scalar>::Kind::Sampling) {
    detail::SampleIndex<Scalar> index(problem.map);
    Mat<Scalar> Z(R, m);
    for (Index c = 0; c < m; ++c) {
      const auto& rows = index.by_col[c];
      Mat<Scalar> A(static_cast<Index>(rows.size()), R);
      Vec<Scalar> rhs(static_cast<Index>(rows.size()));
      for (Index t = 0; t < A.rows(); ++t) {
        A.row(t) = it.Y.row(problem.map.samples()[rows[t]].first);
        rhs(t) = problem.y(rows[t]);
      }
      Z.col(c) = detail::small_ridge_solve(A, rhs, penalty);
    }
    return Z;
  }
  if (problem.map.kind() != LinearMap<Scalar>::Kind::Factored)
    throw UnsupportedVariantError("update_Z: map must be sampling or factored");
  const Mat<Scalar> A = detail::z_system(problem.map, it.Y);
  Mat<Scalar> G = A.transpose() * A;
  for (Index c = 0; c < m; ++c)
    G.diagonal().segment(c * R, R) += penalty;
  const Vec<Scalar> z = detail::spd_solve_refined<Scalar>(
      G, Vec<Scalar>(A.transpose() * problem.y));
  return unvectorize(z, R, m);
}

// Mirror of update_Z for the row-orthonormal Z phase (row-wise separable on
// sampling maps).
template <typename Scalar>
Mat<Scalar> update_Y(const FactoredIterate<Scalar>& it, Scalar gamma, Scalar p,
                     Scalar c_L, const ProblemInstance<Scalar>& problem) {
  if (it.phase != FactoredIterate<Scalar>::Phase::ZOrtho)
    throw DomainError("update_Y: iterate must be in the Z-orthonormal phase");
  if (!(gamma > Scalar(0)) || !(c_L > Scalar(0)))
    throw DomainError("update_Y: gamma and c_L must be positive");
  const Index R = it.rank(), n = problem.map.rows();
  const Vec<Scalar> penalty =
      c_L * gamma * detail::ridge_diagonal(it.sigma, gamma, p);

  if (problem.map.kind() == LinearMap<Scalar>::Kind::Sampling) {
    detail::SampleIndex<Scalar> index(problem.map);
    Mat<Scalar> Y(n, R);
    for (Index r = 0; r < n; ++r) {
      const auto& cols = index.by_row[r];
      Mat<Scalar> A(static_cast<Index>(cols.size()), R);
      Vec<Scalar> rhs(static_cast<Index>(cols.size()));
      for (Index t = 0; t < A.rows(); ++t) {
        A.row(t) = it.Z.col(problem.map.samples()[cols[t]].second);
        rhs(t) = problem.y(cols[t]);
      }
      Y.row(r) = detail::small_ridge_solve(A, rhs, penalty).transpose();
    }
    return Y;
  }
  if (problem.map.kind() != LinearMap<Scalar>::Kind::Factored)
    throw UnsupportedVariantError("update_Y: map must be sampling or factored");
  const Mat<Scalar> A = detail::y_system(problem.map, it.Z);
  Mat<Scalar> G = A.transpose() * A;
  for (Index k = 0; k < R; ++k)
    G.diagonal().segment(k * n, n).array() += penalty(k);
  const Vec<Scalar> yv = detail::spd_solve_refined<Scalar>(
      G, Vec<Scalar>(A.transpose() * problem.y));
  return unvectorize(yv, n, R);
}

namespace detail {

template <typename Scalar>
Scalar factored_residual(const LinearMap<Scalar>& map, const Vec<Scalar>& y,
                         const Mat<Scalar>& Y, const Mat<Scalar>& Z) {
  if (map.kind() == LinearMap<Scalar>::Kind::Sampling) {
    Scalar sum = 0;
    for (Index j = 0; j < map.size(); ++j) {
      const auto& [r, c] = map.samples()[j];
      const Scalar d = Y.row(r).dot(Z.col(c)) - y(j);
      sum += d * d;
    }
    return std::sqrt(sum);
  }
  return (apply_factored(map, Y, Z) - y).norm();
}

}  // namespace detail

inline constexpr std::uint64_t kAirlsInitStream = 4;

// Alternating IRLS-p on the factored iterate (data-sparse, relaxed
// constraint). One sweep refactors into the Y-orthonormal phase, updates Z,
// refactors into the Z-orthonormal phase, updates Y, then decays gamma.
template <typename Scalar>
AirlsTrace<Scalar> airls_run(const ProblemInstance<Scalar>& problem,
                             const AirlsConfig<Scalar>& config) {
  using Kind = typename LinearMap<Scalar>::Kind;
  if (problem.map.kind() == Kind::Dense)
    throw UnsupportedVariantError(
        "airls_run: map must be sampling or factored");
  const Index n = problem.map.rows(), m = problem.map.cols(),
              l = problem.map.size();
  Index R = config.rank.value_or(rank_bound(n, m, l));
  R = std::clamp<Index>(R, 1, std::min(n, m));
  const Scalar c_L =
      config.c_L.value_or(problem.y.squaredNorm() / static_cast<Scalar>(l));

  Rng rng(problem.seed, kAirlsInitStream);
  FactoredIterate<Scalar> it;
  it.Y = rng.gaussian<Scalar>(n, R);
  {
    const Mat<Scalar> Z0 = rng.gaussian<Scalar>(R, m);
    Eigen::JacobiSVD<Mat<Scalar>> svd(Z0, Eigen::ComputeThinV);
    it.Z = svd.matrixV().transpose();  // row-orthonormal
  }
  it.sigma = singular_values(it.Y);
  it.phase = FactoredIterate<Scalar>::Phase::ZOrtho;

  Scalar gamma = config.schedule.initial(it.sigma);
  const Scalar gamma_floor =
      config.gamma_min.value_or(Scalar(1e-14) * gamma);

  AirlsTrace<Scalar> trace;
  trace.c_L = c_L;
  const auto record = [&](Scalar step) {
    trace.records.push_back(
        {gamma, detail::f_from_sigma(it.sigma, gamma, n),
         detail::f_from_sigma(it.sigma, gamma, m),
         detail::factored_residual(problem.map, problem.y, it.Y, it.Z), step,
         it.sigma});
  };
  record(Scalar(0));

  Mat<Scalar> Y_prev = it.Y, Z_prev = it.Z;
  Scalar prev_norm2 = it.sigma.squaredNorm();
  for (Index i = 1; i <= config.max_sweeps; ++i) {
    try {
      it = refactor(std::move(it));
      it.Z = update_Z(it, gamma, config.p, c_L, problem);
      it = refactor(std::move(it));
      it.Y = update_Y(it, gamma, config.p, c_L, problem);
      it.sigma = singular_values(it.Y);
    } catch (const std::exception& e) {
      throw SolverError(i, e.what());
    }
    const Scalar norm2 = it.sigma.squaredNorm();
    // ||X_i - X_{i-1}||_F via R x R Grams; resolution floors near
    // sqrt(eps) * ||X|| due to cancellation, which only affects the stall
    // test, not the iteration itself.
    const Mat<Scalar> cross =
        (Y_prev.transpose() * it.Y) * (it.Z * Z_prev.transpose());
    const Scalar step = std::sqrt(std::max<Scalar>(
        Scalar(0), prev_norm2 + norm2 - 2 * cross.trace()));
    gamma = config.schedule.next(gamma, it.sigma);
    trace.sweeps = i;

    bool stop = false;
    if (config.recovery) {
      const auto& ref = config.recovery->reference;
      const Scalar dot =
          (it.Z.array() * (it.Y.transpose() * ref).array()).sum();
      const Scalar err2 =
          std::max<Scalar>(0, norm2 - 2 * dot + ref.squaredNorm());
      if (std::sqrt(err2) <= config.recovery->tol * ref.norm()) {
        trace.reason = StopReason::Recovered;
        stop = true;
      }
    }
    if (!stop && gamma < gamma_floor) {
      trace.reason = StopReason::GammaFloor;
      stop = true;
    }
    if (!stop && step < config.stall_tol * std::sqrt(norm2)) {
      trace.reason = StopReason::Stalled;
      stop = true;
    }
    if (!stop && i == config.max_sweeps) {
      trace.reason = StopReason::MaxIters;
      stop = true;
    }
    if (stop || (config.trace_stride > 0 && i % config.trace_stride == 0))
      record(step);
    Y_prev = it.Y;
    Z_prev = it.Z;
    prev_norm2 = norm2;
    if (stop) break;
  }
  trace.final_iterate = std::move(it);
  return trace;
}

}  // namespace rankmin
