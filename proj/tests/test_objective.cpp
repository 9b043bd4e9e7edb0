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

#include "rankmin/objective.hpp"
#include "support/fixtures.hpp"

using namespace rankmin;
using rankmin::testing::det2_k_minor_oracle;
using rankmin::testing::grad_f_fd_oracle;

TEST_CASE("f_gamma: zero matrix and the 2x3 example") {
  const MatXd Z = MatXd::Zero(2, 2);
  CHECK(f_gamma(Z, std::exp(1.0), WeightSide::Left) == doctest::Approx(2.0));

  // X(1,0) of the rank-gap family has det(X X^T) = 3
  const MatXd X = rankmin::testing::rank_gap_matrix(1.0, 0.0);
  const double limit = std::exp(f_gamma(X, 1e-12, WeightSide::Left));
  CHECK(limit == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("f_gamma: side identity f2 - f1 = (m-n) log gamma") {
  Rng rng(2);
  const MatXd X = rng.gaussian(3, 5);
  const double gamma = 0.7;
  const double f1 = f_gamma(X, gamma, WeightSide::Left);
  const double f2 = f_gamma(X, gamma, WeightSide::Right);
  CHECK(std::abs(f2 - f1 - 2.0 * std::log(gamma)) <= 1e-12 * std::abs(f2));
}

TEST_CASE("f_gamma rejects negative gamma") {
  CHECK_THROWS_AS(f_gamma(MatXd(MatXd::Zero(2, 2)), -1.0, WeightSide::Left),
                  DomainError);
  CHECK_THROWS_AS(f_gamma_scaled(MatXd(MatXd::Zero(2, 2)), 0.0), DomainError);
}

TEST_CASE("f_gamma_scaled: zero at X = 0 and definition identity") {
  CHECK(f_gamma_scaled(MatXd(MatXd::Zero(3, 4)), 0.5) == 0.0);
  Rng rng(3);
  const MatXd X = rng.gaussian(3, 4);
  const double gamma = 0.37;
  const double direct = f_gamma_scaled(X, gamma);
  const double via_f = f_gamma(X, gamma, WeightSide::Left) -
                       3.0 * std::log(gamma);
  CHECK(std::abs(direct - via_f) <= 1e-12 * std::abs(direct));

  SUBCASE("monotone decreasing in gamma") {
    double prev = f_gamma_scaled(X, 1e-4);
    for (double g : {1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
      const double cur = f_gamma_scaled(X, g);
      CHECK(cur <= prev + 1e-12);
      prev = cur;
    }
  }
}

TEST_CASE("schatten: nuclear norm at p=1, zero matrix, p->0 limit") {
  CHECK(schatten(MatXd(MatXd::Identity(2, 2)), 0.0, 1.0) ==
        doctest::Approx(2.0));
  CHECK(schatten(MatXd(MatXd::Zero(3, 3)), 2.0, 0.5) ==
        doctest::Approx(3.0 * std::pow(2.0, 0.25)));
  CHECK_THROWS_AS(schatten(MatXd(MatXd::Zero(2, 2)), 1.0, 1.5), DomainError);

  Rng rng(4);
  const MatXd X = rng.gaussian(3, 3);
  const double gamma = 0.3, p = 1e-6;
  const double quotient = (schatten(X, gamma, p) - 3.0) / p;
  const double target = 0.5 * f_gamma(X, gamma, WeightSide::Left);
  CHECK(std::abs(quotient - target) <= 1e-4 * std::abs(target));
}

TEST_CASE("det2_k: identity, rank-1, and the minor-enumeration oracle") {
  const MatXd I2 = MatXd::Identity(2, 2);
  CHECK(det2_k(I2, 1) == doctest::Approx(2.0));
  CHECK(det2_k(I2, 2) == doctest::Approx(1.0));

  Rng rng(5);
  const MatXd rank1 = rng.gaussian(3, 1) * rng.gaussian(1, 4);
  CHECK(det2_k(rank1, 2) <= 1e-12 * rank1.squaredNorm());
  CHECK(det2_k(rank1, 3) <= 1e-12 * rank1.squaredNorm());

  const MatXd X = rng.gaussian(4, 5);
  for (Index k = 1; k <= 4; ++k) {
    const double fast = det2_k(X, k);
    const double slow = det2_k_minor_oracle(X, k);
    CHECK(std::abs(fast - slow) <= 1e-10 * std::abs(slow));
  }
  CHECK_THROWS_AS(det2_k(X, 0), DomainError);
  CHECK_THROWS_AS(det2_k(X, 5), DomainError);
}

TEST_CASE("det_expansion: closed forms and direct determinant") {
  const MatXd I2 = MatXd::Identity(2, 2);
  for (double g : {0.0, 0.5, 2.0})
    CHECK(det_expansion(I2, g) == doctest::Approx(g * g + 2 * g + 1));
  const MatXd Z = MatXd::Zero(3, 3);
  CHECK(det_expansion(Z, 0.5) == doctest::Approx(0.125));

  Rng rng(6);
  const MatXd X = rng.gaussian(3, 4);
  const double gamma = 0.3;
  const MatXd G = X * X.transpose() + gamma * MatXd::Identity(3, 3);
  CHECK(std::abs(det_expansion(X, gamma) - G.determinant()) <=
        1e-10 * std::abs(G.determinant()));
  CHECK(std::abs(det_expansion(X, gamma) -
                 std::exp(f_gamma(X, gamma, WeightSide::Left))) <=
        1e-10 * det_expansion(X, gamma));
}

TEST_CASE("Frobenius bound from the expansion") {
  Rng rng(7);
  for (int t = 0; t < 100; ++t) {
    const MatXd X = rng.gaussian(3, 5);
    for (double gamma : {1e-3, 0.1, 1.0}) {
      const double det = det_expansion(X, gamma);
      CHECK(X.squaredNorm() <= std::pow(gamma, 1.0 - 3.0) * det * (1 + 1e-12));
    }
  }
}

TEST_CASE("weight: closed forms") {
  const MatXd Z = MatXd::Zero(2, 3);
  const auto W = weight(Z, 2.0, 0.0, WeightSide::Left);
  CHECK((W.matrix() - 0.5 * MatXd::Identity(2, 2)).norm() <= 1e-14);
  CHECK((W.inverse() - 2.0 * MatXd::Identity(2, 2)).norm() <= 1e-14);

  // sigma = (2, 1) at p = 1, gamma = 0: weight eigenvalues 1/2 and 1
  MatXd D = MatXd::Zero(2, 2);
  D(0, 0) = 2.0;
  D(1, 1) = 1.0;
  const auto W1 = weight(D, 0.0, 1.0, WeightSide::Left);
  Eigen::SelfAdjointEigenSolver<MatXd> eig(W1.matrix());
  CHECK(eig.eigenvalues()(0) == doctest::Approx(0.5));
  CHECK(eig.eigenvalues()(1) == doctest::Approx(1.0));

  CHECK_THROWS_AS(weight(Z, -1.0, 0.0, WeightSide::Left), DomainError);
  CHECK_THROWS_AS(weight(Z, 1.0, 2.0, WeightSide::Left), DomainError);
}

TEST_CASE("weight: p=0 weight inverts the regularized Gram matrix") {
  Rng rng(8);
  for (int t = 0; t < 10; ++t) {
    const MatXd X = rng.gaussian(4, 6);
    const double gamma = 0.2;
    const auto W = weight(X, gamma, 0.0, WeightSide::Left);
    const MatXd G = X * X.transpose() + gamma * MatXd::Identity(4, 4);
    CHECK((W.matrix() * G - MatXd::Identity(4, 4)).norm() <= 1e-10);
    const auto W2 = weight(X, gamma, 0.0, WeightSide::Right);
    const MatXd G2 = X.transpose() * X + gamma * MatXd::Identity(6, 6);
    CHECK((W2.matrix() * G2 - MatXd::Identity(6, 6)).norm() <= 1e-10);
  }
}

TEST_CASE("J_gamma: optimal weight recovers f_gamma") {
  Rng rng(9);
  for (WeightSide side : {WeightSide::Left, WeightSide::Right}) {
    const MatXd X = rng.gaussian(3, 4);
    const double gamma = 0.6;
    const auto W = weight(X, gamma, 0.0, side);
    const double J = J_gamma(X, W, gamma);
    const double f = f_gamma(X, gamma, side);
    CHECK(std::abs(J - f) <= 1e-10 * std::abs(f));
  }
}

TEST_CASE("J_gamma: identity weight at X = 0 gives n(gamma - 1)") {
  const MatXd Z = MatXd::Zero(3, 5);
  const double gamma = 2.5;
  const double J = J_gamma(Z, MatXd(MatXd::Identity(3, 3)), WeightSide::Left,
                           gamma);
  CHECK(J == doctest::Approx(3.0 * (gamma - 1.0)));
}

TEST_CASE("J_gamma: any SPD perturbation of the optimal weight increases J") {
  Rng rng(10);
  const MatXd X = rng.gaussian(3, 4);
  const double gamma = 0.4;
  const MatXd W_opt = weight(X, gamma, 0.0, WeightSide::Left).matrix();
  const double J_opt = J_gamma(X, W_opt, WeightSide::Left, gamma);
  for (int t = 0; t < 50; ++t) {
    const MatXd E = rng.gaussian(3, 3);
    MatXd W = W_opt + 1e-3 * (E + E.transpose());
    Eigen::LLT<MatXd> llt(W);
    if (llt.info() != Eigen::Success) continue;
    CHECK(J_gamma(X, W, WeightSide::Left, gamma) > J_opt);
  }
}

TEST_CASE("J_gamma rejects non-SPD weights") {
  const MatXd X = MatXd::Zero(2, 2);
  MatXd W(2, 2);
  W << 1, 0, 0, -1;
  CHECK_THROWS_AS(J_gamma(X, W, WeightSide::Left, 1.0), DomainError);
  MatXd N(2, 2);
  N << 1, 0.5, -0.5, 1;  // not symmetric
  CHECK_THROWS_AS(J_gamma(X, N, WeightSide::Left, 1.0), DomainError);
}

TEST_CASE("grad_f: zero at origin and finite-difference agreement") {
  CHECK(grad_f(MatXd(MatXd::Zero(2, 3)), 0.5).norm() == 0.0);
  Rng rng(11);
  const MatXd X = rng.gaussian(3, 4);
  const double gamma = 0.5;
  const MatXd G = grad_f(X, gamma);
  const MatXd fd = grad_f_fd_oracle(X, gamma);
  CHECK((G - fd).norm() <= 1e-6 * fd.norm());
}

TEST_CASE("rank surrogate limit: weighted norm approaches the rank") {
  Rng rng(12);
  const MatXd X = rng.gaussian(4, 2) * rng.gaussian(2, 6);  // rank 2
  const VecXd sigma = singular_values(X);
  const double sr = sigma(1);
  double prev = 0.0;
  for (double gamma : {1.0, 1e-2, 1e-4, 1e-6, 1e-8, 1e-12 * sr * sr}) {
    const auto W = weight(X, gamma, 0.0, WeightSide::Left);
    const double value = (W.sqrt_matrix() * X).squaredNorm();
    CHECK(value >= prev - 1e-9);
    prev = value;
  }
  CHECK(std::abs(prev - 2.0) <= 1e-6);
}

TEST_CASE("F_relaxed: values and gamma monotonicity") {
  const auto problem = rankmin::testing::random_gaussian_problem(3, 4, 2, 7,
                                                                 131);
  const MatXd zero = MatXd::Zero(3, 4);
  CHECK(F_relaxed(problem, zero, 1.0, 2.0) ==
        doctest::Approx(problem.y.squaredNorm()));

  Rng rng(13);
  const MatXd X = rng.gaussian(3, 4);
  double prev = F_relaxed(problem, X, 1e-8, 1.0);
  for (double gamma : {1e-6, 1e-4, 1e-2, 1.0, 1e2}) {
    const double cur = F_relaxed(problem, X, gamma, 1.0);
    CHECK(cur >= prev - 1e-10 * std::abs(prev));
    prev = cur;
  }

  // feasible X: both terms vanish as gamma -> 0
  const MatXd feasible = *problem.reference;
  CHECK(F_relaxed(problem, feasible, 1e-14, 1.0) <= 1e-10);
}

TEST_CASE("determinant expansion identity on 1000 random matrices") {
  Rng rng(14);
  for (int t = 0; t < 1000; ++t) {
    const Index n = 1 + static_cast<Index>(rng.below(5));
    const Index m = n + static_cast<Index>(rng.below(3));
    const MatXd X = rng.gaussian(n, m);
    for (double gamma : {1e-3, 1.0, 10.0}) {
      const MatXd G = X * X.transpose() +
                      gamma * MatXd::Identity(n, n);
      const double direct = G.determinant();
      CHECK(std::abs(det_expansion(X, gamma) - direct) <=
            1e-10 * std::abs(direct));
    }
  }
}
