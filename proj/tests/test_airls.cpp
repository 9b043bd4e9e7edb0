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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rankmin/airls.hpp"
#include "support/fixtures.hpp"

using namespace rankmin;

namespace {

ProblemInstance<double> planted_completion(Index n, Index m, Index r,
                                           double c_mf, std::uint64_t seed) {
  const Index dim = (n + m) * r - r * r;
  const Index l = static_cast<Index>(std::llround(c_mf * dim));
  return ProblemInstance<double>::planted(
      gen_sampling_operator<double>(n, m, l, r, seed),
      gen_reference<double>(n, m, r, seed), r, seed);
}

FactoredIterate<double> random_y_ortho_iterate(Index n, Index m, Index R,
                                               Rng& rng) {
  FactoredIterate<double> it;
  it.Y = rng.gaussian(n, R);
  it.Z = rng.gaussian(R, m);
  it.phase = FactoredIterate<double>::Phase::ZOrtho;
  // normalize through one refactor pair to get consistent sigma
  Eigen::JacobiSVD<MatXd> svd(it.Z, Eigen::ComputeThinV);
  it.Z = svd.matrixV().transpose();
  it.sigma = singular_values(it.Y);
  return refactor(std::move(it));  // -> YOrtho
}

// F^a value from a trace record (c_L-weighted relaxed objective).
double relaxed_objective(const TraceRecord<double>& rec, Index n, double c_L) {
  return rec.residual * rec.residual +
         c_L * rec.gamma * (rec.f_left - n * std::log(rec.gamma));
}

}  // namespace

TEST_CASE("rank_bound arithmetic") {
  CHECK(rank_bound(12, 12, 63) == 4);
  CHECK(rank_bound(12, 12, 72) == 4);
  CHECK(rank_bound(12, 12, 143) == 12);  // l = n*m - 1, clamped to n
  CHECK(rank_bound(4, 4, 15) == 4);      // discriminant just above zero
  CHECK(rank_bound(2, 2, 3) == 2);       // negative discriminant clamps
  CHECK(rank_bound(50, 50, 950) == 11);
}

TEST_CASE("refactor preserves the product and establishes phase invariants") {
  Rng rng(61);
  FactoredIterate<double> it;
  it.Y = rng.gaussian(6, 3);
  {
    Eigen::JacobiSVD<MatXd> svd(MatXd(rng.gaussian(3, 7)),
                                Eigen::ComputeThinV);
    it.Z = svd.matrixV().transpose();
  }
  it.sigma = singular_values(it.Y);
  it.phase = FactoredIterate<double>::Phase::ZOrtho;
  const MatXd X = it.product();

  const auto y_ortho = refactor(it);
  CHECK(y_ortho.phase == FactoredIterate<double>::Phase::YOrtho);
  CHECK((y_ortho.Y.transpose() * y_ortho.Y - MatXd::Identity(3, 3)).norm() <=
        1e-10);
  CHECK((y_ortho.product() - X).norm() <= 1e-10 * X.norm());
  // sigma matches the singular values of the product
  const VecXd sx = singular_values(X);
  CHECK((y_ortho.sigma - sx.head(3)).norm() <= 1e-10 * sx.norm());

  const auto z_ortho = refactor(y_ortho);
  CHECK(z_ortho.phase == FactoredIterate<double>::Phase::ZOrtho);
  CHECK((z_ortho.Z * z_ortho.Z.transpose() - MatXd::Identity(3, 3)).norm() <=
        1e-10);
  CHECK((z_ortho.product() - X).norm() <= 1e-10 * X.norm());

  SUBCASE("sigma stays weakly decreasing and non-negative") {
    for (Index k = 0; k + 1 < z_ortho.sigma.size(); ++k) {
      CHECK(z_ortho.sigma(k) >= z_ortho.sigma(k + 1));
      CHECK(z_ortho.sigma(k + 1) >= 0.0);
    }
  }
}

TEST_CASE("refactor handles rank-deficient factors without error") {
  Rng rng(62);
  FactoredIterate<double> it;
  it.Y = rng.gaussian(5, 3);
  it.Y.col(2).setZero();
  {
    Eigen::JacobiSVD<MatXd> svd(MatXd(rng.gaussian(3, 6)),
                                Eigen::ComputeThinV);
    it.Z = svd.matrixV().transpose();
  }
  it.sigma = singular_values(it.Y);
  it.phase = FactoredIterate<double>::Phase::ZOrtho;
  const auto out = refactor(it);
  CHECK(out.sigma(2) <= 1e-12 * out.sigma(0));
  CHECK((out.product() - it.product()).norm() <= 1e-10 * it.product().norm());
}

TEST_CASE("update_Z: single observed entry matches the scalar ridge") {
  // one sample at (0,1) of a 2x2 matrix, R = 1
  auto map = LinearMap<double>::sampling(2, 2, {{0, 1}});
  VecXd y(1);
  y << 3.0;
  const auto problem =
      ProblemInstance<double>::from_measurements(std::move(map), y);

  FactoredIterate<double> it;
  it.Y = MatXd::Zero(2, 1);
  it.Y(0, 0) = 1.0;
  it.Z = MatXd::Zero(1, 2);
  it.sigma = VecXd::Constant(1, 2.0);  // sigma_1 = 2
  it.phase = FactoredIterate<double>::Phase::YOrtho;

  const double gamma = 0.5, c_L = 1.5;
  for (double p : {0.0, 1.0}) {
    const MatXd Z = update_Z(it, gamma, p, c_L, problem);
    const double d2 = std::pow(4.0 + gamma, p / 2 - 1);
    const double expected = 3.0 / (1.0 + c_L * gamma * d2);
    CHECK(Z(0, 1) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(Z(0, 0) == doctest::Approx(0.0));
  }
}

TEST_CASE("ridge diagonal exponent: p=0 vs p=1") {
  VecXd sigma(3);
  sigma << 2.0, 1.0, 0.5;
  const double gamma = 0.3;
  const VecXd d0 = detail::ridge_diagonal(sigma, gamma, 0.0);
  const VecXd d1 = detail::ridge_diagonal(sigma, gamma, 1.0);
  for (Index k = 0; k < 3; ++k) {
    const double s2g = sigma(k) * sigma(k) + gamma;
    CHECK(d0(k) == doctest::Approx(1.0 / s2g));
    CHECK(d1(k) == doctest::Approx(1.0 / std::sqrt(s2g)));
  }
}

TEST_CASE("update_Z: huge gamma forces the iterate toward zero for p = 1") {
  Rng rng(63);
  const auto problem = planted_completion(8, 8, 2, 2.0, 63);
  auto it = random_y_ortho_iterate(8, 8, 3, rng);
  double prev = std::numeric_limits<double>::infinity();
  for (double gamma : {1e2, 1e4, 1e6, 1e8}) {
    const MatXd Z = update_Z(it, gamma, 1.0, 1.0, problem);
    CHECK(Z.norm() <= prev);
    prev = Z.norm();
  }
  CHECK(prev <= 1e-2);
}

TEST_CASE("separable and monolithic Z/Y updates agree on sampling maps") {
  Rng rng(64);
  const auto problem = planted_completion(9, 7, 2, 2.0, 64);
  // same problem with the map converted to its Khatri-Rao form
  ProblemInstance<double> factored{as_factored(problem.map), problem.y,
                                   problem.reference, problem.reference_rank,
                                   problem.seed};
  auto it = random_y_ortho_iterate(9, 7, 3, rng);
  const double gamma = 0.2, c_L = 0.7;
  for (double p : {0.0, 0.5, 1.0}) {
    const MatXd Zs = update_Z(it, gamma, p, c_L, problem);
    const MatXd Zm = update_Z(it, gamma, p, c_L, factored);
    CHECK((Zs - Zm).norm() <= 1e-9 * std::max(1.0, Zm.norm()));
  }
  auto zo = it;
  zo.Z = update_Z(it, gamma, 0.0, c_L, problem);
  zo = refactor(std::move(zo));
  const MatXd Ys = update_Y(zo, gamma, 0.0, c_L, problem);
  const MatXd Ym = update_Y(zo, gamma, 0.0, c_L, factored);
  CHECK((Ys - Ym).norm() <= 1e-9 * std::max(1.0, Ym.norm()));
}

TEST_CASE("update_Y mirrors update_Z under transposition") {
  Rng rng(65);
  const auto problem = planted_completion(6, 9, 2, 1.6, 65);
  // transposed sampling problem: swap every index pair
  std::vector<std::pair<Index, Index>> swapped;
  for (const auto& [r, c] : problem.map.samples()) swapped.emplace_back(c, r);
  const auto problem_t = ProblemInstance<double>::from_measurements(
      LinearMap<double>::sampling(9, 6, std::move(swapped)), problem.y);

  auto it = random_y_ortho_iterate(6, 9, 3, rng);
  const double gamma = 0.4, c_L = 1.1, p = 0.0;
  const MatXd Z = update_Z(it, gamma, p, c_L, problem);

  // transposed iterate: Y_t = Z^T is arbitrary, Z_t = Y^T is row-orthonormal
  FactoredIterate<double> mirrored;
  mirrored.Y = it.Z.transpose();
  mirrored.Z = it.Y.transpose();
  mirrored.sigma = it.sigma;
  mirrored.phase = FactoredIterate<double>::Phase::ZOrtho;
  const MatXd Yt = update_Y(mirrored, gamma, p, c_L, problem_t);
  CHECK((Yt - Z.transpose()).norm() <= 1e-10 * std::max(1.0, Z.norm()));
}

TEST_CASE("half-updates do not increase the relaxed objective") {
  Rng rng(66);
  const auto problem = planted_completion(8, 8, 2, 2.0, 66);
  auto it = random_y_ortho_iterate(8, 8, 3, rng);
  const double gamma = 0.8, c_L = 1.0;
  const auto value = [&](const MatXd& X) {
    return F_relaxed(problem, X, gamma, c_L);
  };
  const double before = value(it.product());
  it.Z = update_Z(it, gamma, 0.0, c_L, problem);
  const double after_z = value(it.product());
  CHECK(after_z <= before + 1e-10 * std::abs(before));
  it = refactor(std::move(it));
  it.Y = update_Y(it, gamma, 0.0, c_L, problem);
  const double after_y = value(it.product());
  CHECK(after_y <= after_z + 1e-10 * std::abs(after_z));
}

TEST_CASE("airls_run: relaxed objective decreases monotonically") {
  const auto problem = planted_completion(10, 10, 2, 2.0, 67);
  AirlsConfig<double> config;
  config.schedule = GammaSchedule<double>::constant_rate(0.9);
  config.max_sweeps = 60;
  const auto trace = airls_run(problem, config);
  for (std::size_t i = 1; i < trace.records.size(); ++i) {
    const double prev =
        relaxed_objective(trace.records[i - 1], 10, trace.c_L);
    const double cur = relaxed_objective(trace.records[i], 10, trace.c_L);
    CHECK(cur <= prev + 1e-10 * std::abs(prev));
  }

  SUBCASE("frozen gamma keeps the same monotonicity") {
    AirlsConfig<double> frozen;
    frozen.schedule = GammaSchedule<double>::frozen(0.3);
    frozen.max_sweeps = 40;
    frozen.stall_tol = 0.0;
    const auto t2 = airls_run(problem, frozen);
    for (std::size_t i = 1; i < t2.records.size(); ++i) {
      const double prev = relaxed_objective(t2.records[i - 1], 10, t2.c_L);
      const double cur = relaxed_objective(t2.records[i], 10, t2.c_L);
      CHECK(cur <= prev + 1e-10 * std::abs(prev));
    }
  }
}

TEST_CASE("airls_run recovers planted completions in a majority of trials") {
  int recovered = 0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    const auto problem =
        planted_completion(20, 20, 2, 2.0, 6700 + static_cast<std::uint64_t>(t));
    AirlsConfig<double> config;
    config.schedule = GammaSchedule<double>::constant_rate(0.9);
    config.max_sweeps = 3000;
    config.recovery = RecoveryTarget<double>{*problem.reference, 1e-6};
    const auto trace = airls_run(problem, config);
    const double err = (trace.final_x() - *problem.reference).norm() /
                       problem.reference->norm();
    if (err <= 1e-4) ++recovered;
  }
  CHECK(recovered > trials / 2);
}

TEST_CASE("airls_run is immune to overestimating the representation rank") {
  const auto problem = planted_completion(20, 20, 2, 2.0, 68);
  AirlsConfig<double> config;
  config.schedule = GammaSchedule<double>::constant_rate(0.9);
  config.max_sweeps = 3000;
  config.rank = 4;  // 2x the true rank
  config.recovery = RecoveryTarget<double>{*problem.reference, 1e-6};
  const auto trace = airls_run(problem, config);
  const double err = (trace.final_x() - *problem.reference).norm() /
                     problem.reference->norm();
  CHECK(err <= 1e-4);
}

TEST_CASE("airls_run rejects dense maps") {
  const auto problem = rankmin::testing::random_gaussian_problem(6, 6, 2, 20,
                                                                 69);
  AirlsConfig<double> config;
  CHECK_THROWS_AS(airls_run(problem, config), UnsupportedVariantError);
}

TEST_CASE("update phase preconditions are enforced") {
  Rng rng(70);
  const auto problem = planted_completion(8, 8, 2, 2.0, 70);
  auto it = random_y_ortho_iterate(8, 8, 3, rng);
  CHECK_THROWS_AS(update_Y(it, 0.5, 0.0, 1.0, problem), DomainError);
  auto zo = refactor(it);
  CHECK_THROWS_AS(update_Z(zo, 0.5, 0.0, 1.0, problem), DomainError);
  CHECK_THROWS_AS(update_Z(it, -1.0, 0.0, 1.0, problem), DomainError);
}
