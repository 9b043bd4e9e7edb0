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

// Shared analytic fixtures and independent oracles for the test suites.
#pragma once

#include <vector>

#include "rankmin/harness.hpp"

namespace rankmin::testing {

// 2x2 completion problem observing the off-diagonal entries:
// feasible set { [[a, 1], [1, b]] }. Rank-1 iff a*b = 1; for 0 < gamma < 1
// the attracting fixed points of the IRLS map are a = b = +-sqrt(1-gamma),
// and one update step is the rational map
//   a' = (a+b)/(1+gamma+b^2),  b' = (a+b)/(1+gamma+a^2).
inline ProblemInstance<double> corner_completion_problem() {
  auto map = LinearMap<double>::sampling(2, 2, {{0, 1}, {1, 0}});
  VecXd y(2);
  y << 1.0, 1.0;
  return ProblemInstance<double>::from_measurements(std::move(map), y);
}

inline MatXd corner_matrix(double a, double b) {
  MatXd X(2, 2);
  X << a, 1.0, 1.0, b;
  return X;
}

// 2x3 problem with feasible set { [[a, 1, a+1], [b+1, b, b+1]] }: the
// minimum rank is 2 (global optimum at (a,b) = (-1,-2/3), det(XX^T) = 1/3),
// yet at gamma = 0 the iteration started inside the b > 0 valley diverges
// with sigma_1 -> inf, sigma_2 -> 0.
inline ProblemInstance<double> rank_gap_problem() {
  // column-major positions for n=2, m=3: (r,c) -> 2c + r
  MatXd L = MatXd::Zero(4, 6);
  L(0, 2) = 1.0;                 // X(0,1) = 1
  L(1, 4) = 1.0; L(1, 0) = -1.0; // X(0,2) - X(0,0) = 1
  L(2, 1) = 1.0; L(2, 3) = -1.0; // X(1,0) - X(1,1) = 1
  L(3, 5) = 1.0; L(3, 3) = -1.0; // X(1,2) - X(1,1) = 1
  VecXd y = VecXd::Ones(4);
  return ProblemInstance<double>::from_measurements(
      LinearMap<double>::dense(std::move(L), 2, 3), y);
}

inline MatXd rank_gap_matrix(double a, double b) {
  MatXd X(2, 3);
  X << a, 1.0, a + 1.0, b + 1.0, b, b + 1.0;
  return X;
}

// Random planted instance with a Gaussian operator.
inline ProblemInstance<double> random_gaussian_problem(Index n, Index m,
                                                       Index r, Index l,
                                                       std::uint64_t seed) {
  return ProblemInstance<double>::planted(
      gen_gaussian_operator<double>(n, m, l, seed),
      gen_reference<double>(n, m, r, seed), r, seed);
}

// ---- independent oracles ----

// Sum of squared k x k minors by direct enumeration of index subsets.
// Exponential in k; test-only, for n*m <= ~36.
inline double det2_k_minor_oracle(const MatXd& X, Index k) {
  const Index n = X.rows(), m = X.cols();
  std::vector<Index> rows(k), cols(k);
  double total = 0.0;

  const auto for_each_subset = [](Index count, Index size,
                                  auto&& visit) -> void {
    std::vector<Index> subset(size);
    for (Index i = 0; i < size; ++i) subset[i] = i;
    while (true) {
      visit(subset);
      Index i = size - 1;
      while (i >= 0 && subset[i] == count - size + i) --i;
      if (i < 0) break;
      ++subset[i];
      for (Index j = i + 1; j < size; ++j) subset[j] = subset[j - 1] + 1;
    }
  };

  if (k > std::min(n, m)) return 0.0;
  for_each_subset(n, k, [&](const std::vector<Index>& I) {
    for_each_subset(m, k, [&](const std::vector<Index>& J) {
      MatXd sub(k, k);
      for (Index a = 0; a < k; ++a)
        for (Index b = 0; b < k; ++b) sub(a, b) = X(I[a], J[b]);
      const double minor = sub.determinant();
      total += minor * minor;
    });
  });
  return total;
}

// Central finite differences of f_gamma with respect to every entry.
inline MatXd grad_f_fd_oracle(const MatXd& X, double gamma, double h = 1e-5) {
  MatXd G(X.rows(), X.cols());
  for (Index i = 0; i < X.rows(); ++i) {
    for (Index j = 0; j < X.cols(); ++j) {
      MatXd Xp = X, Xm = X;
      Xp(i, j) += h;
      Xm(i, j) -= h;
      G(i, j) = (f_gamma(Xp, gamma, WeightSide::Left) -
                 f_gamma(Xm, gamma, WeightSide::Left)) /
                (2 * h);
    }
  }
  return G;
}

// Exhaustive affine cardinality minimum: smallest support size S such that
// y lies in the image of the corresponding column submatrix.
inline Index min_cardinality_oracle(const MatXd& L, const VecXd& y,
                                    double tol = 1e-8) {
  const Index n = L.cols();
  for (Index k = 0; k <= n; ++k) {
    if (k == 0) {
      if (y.norm() <= tol) return 0;
      continue;
    }
    std::vector<Index> subset(k);
    for (Index i = 0; i < k; ++i) subset[i] = i;
    bool more = true;
    while (more) {
      MatXd cols(L.rows(), k);
      for (Index i = 0; i < k; ++i) cols.col(i) = L.col(subset[i]);
      const VecXd coef = cols.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV)
                             .solve(y);
      if ((cols * coef - y).norm() <= tol * std::max(1.0, y.norm())) return k;
      Index i = k - 1;
      while (i >= 0 && subset[i] == n - k + i) --i;
      if (i < 0) {
        more = false;
      } else {
        ++subset[i];
        for (Index j = i + 1; j < k; ++j) subset[j] = subset[j - 1] + 1;
      }
    }
  }
  return n;
}

}  // namespace rankmin::testing
