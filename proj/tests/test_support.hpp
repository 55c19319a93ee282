// Copyright 2026 The latflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Generators and brute-force oracles shared by the test binaries.

#ifndef LATFLOW_TESTS_TEST_SUPPORT_HPP_
#define LATFLOW_TESTS_TEST_SUPPORT_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "latflow/lattice.hpp"

namespace latflow::testing {

// Q from the QR factorization of a Gaussian matrix times a size-reduced
// upper-triangular factor with log-normal diagonal, rescaled to det 1. The
// result is well conditioned, so a small coefficient box is a sound oracle.
inline Eigen::MatrixXd random_unimodular_basis(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  Eigen::MatrixXd A(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) A(r, c) = g(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  Eigen::MatrixXd Q = qr.householderQ();
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(d, d);
  for (int c = 0; c < d; ++c) {
    T(c, c) = std::exp(0.4 * g(rng));
    for (int r = 0; r < c; ++r) T(r, c) = u(rng) * T(r, r);
  }
  Eigen::MatrixXd B = Q * T;
  double det = B.determinant();
  if (det < 0) {
    B.col(0) *= -1;
    det = -det;
  }
  return B / std::pow(det, 1.0 / d);
}

// Product of random elementary column moves: an integer matrix of det 1.
inline Eigen::MatrixXd random_unimodular_integer(int d, int moves, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, d - 1);
  std::uniform_int_distribution<int> mult(-3, 3);
  Eigen::MatrixXd V = Eigen::MatrixXd::Identity(d, d);
  for (int m = 0; m < moves; ++m) {
    int a = pick(rng), b = pick(rng);
    if (a == b) continue;
    V.col(a) += mult(rng) * V.col(b);
  }
  return V;
}

// Calls f(coeffs) for every integer vector in [-box, box]^d except 0.
inline void for_each_in_box(int d, int box,
                            const std::function<void(const std::vector<std::int64_t>&)>& f) {
  std::vector<std::int64_t> c(d, -box);
  while (true) {
    bool zero = true;
    for (auto v : c) zero = zero && v == 0;
    if (!zero) f(c);
    int i = 0;
    while (i < d && c[i] == box) c[i++] = -box;
    if (i == d) break;
    ++c[i];
  }
}

inline long double brute_norm2(const Eigen::MatrixXd& B, const std::vector<std::int64_t>& c) {
  long double s = 0;
  for (int r = 0; r < B.rows(); ++r) {
    long double x = 0;
    for (int j = 0; j < B.cols(); ++j) x += static_cast<long double>(B(r, j)) * c[j];
    s += x * x;
  }
  return s;
}

// Smallest box [-K, K]^d guaranteed to contain every coefficient vector c
// with |B c| <= radius, since |c_i| <= |row_i(B^{-1})| |B c|.
inline int certified_box(const Eigen::MatrixXd& B, double radius) {
  Eigen::MatrixXd inv = B.inverse();
  double worst = 0;
  for (int r = 0; r < inv.rows(); ++r) worst = std::max(worst, inv.row(r).norm());
  return static_cast<int>(std::ceil(radius * worst * (1 + 1e-9)));
}

// Minimum over [-K, K]^d with K = max(box, certified box for the shortest
// basis column), so the result is exact for any basis.
inline double brute_shortest(const Eigen::MatrixXd& B, int box) {
  double radius = B.col(0).norm();
  for (int c = 1; c < B.cols(); ++c) radius = std::min(radius, B.col(c).norm());
  box = std::max(box, certified_box(B, radius));
  long double best = -1;
  for_each_in_box(static_cast<int>(B.rows()), box, [&](const std::vector<std::int64_t>& c) {
    long double n2 = brute_norm2(B, c);
    if (best < 0 || n2 < best) best = n2;
  });
  return static_cast<double>(std::sqrt(best));
}

}  // namespace latflow::testing

#endif  // LATFLOW_TESTS_TEST_SUPPORT_HPP_
