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


#include "latflow/heights.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "latflow/errors.hpp"

namespace latflow::heights {
namespace {

using flows::XPrimePoint;
using lattice::Matrix;
using lattice::UnimodularLattice;
using lattice::WedgeElement;

WedgeElement make_wedge(int d, int k, std::vector<double> coords) {
  WedgeElement w;
  w.dim = d;
  w.degree = k;
  w.coords = std::move(coords);
  return w;
}

UnimodularLattice diag_lattice(std::vector<double> log_scale) {
  const int d = static_cast<int>(log_scale.size());
  std::vector<HighReal> core(d * d, 0), s(log_scale.begin(), log_scale.end());
  for (int r = 0; r < d; ++r) core[r * d + r] = 1;
  return UnimodularLattice::row_scaled(s, core);
}

CalibratedConstants test_constants(double E101) {
  CalibratedConstants c;
  c.E101 = E101;
  c.D_breakpoints = {{1, 2}, {10, 30}};
  return c;
}

HeightParams params(double eps = 0.3) {
  HeightParams p;
  p.epsilon = eps;
  return p;
}

TEST(ProjectWedge, DegreeTwoInDimensionThree) {
  // Subsets in order {0,1}, {0,2}, {1,2}; i = 0, last index 2.
  WedgeProjection p = project_wedge(make_wedge(3, 2, {1, 2, 3}), 0);
  EXPECT_EQ(p.v1, (std::vector<double>{1, 3}));
  EXPECT_EQ(p.v0, (std::vector<double>{2}));
}

TEST(ProjectWedge, DegreeOne) {
  WedgeProjection p = project_wedge(make_wedge(4, 1, {1, 2, 3, 4}), 1);
  EXPECT_EQ(p.v1, (std::vector<double>{2, 4}));
  EXPECT_EQ(p.v0, (std::vector<double>{1, 3}));
}

TEST(ProjectWedge, OrthogonalSplit) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 3 + trial % 3;
    const int k = 1 + trial % (d - 1);
    std::vector<double> c(lattice::wedge_subsets(d, k).size());
    for (double& v : c) v = uniform(rng, -2, 2);
    WedgeProjection p = project_wedge(make_wedge(d, k, c), trial % (d - 1));
    double a = 0, b = 0;
    for (double v : c) a += v * v;
    for (double v : p.v0) b += v * v;
    for (double v : p.v1) b += v * v;
    EXPECT_NEAR(a, b, 1e-12);
  }
}

TEST(BqPhi, Examples) {
  HeightParams p = params(0.5);
  EXPECT_DOUBLE_EQ(bq_phi(make_wedge(3, 1, {1, 0, 0}), 0, p).value, 0.25);
  EXPECT_EQ(bq_phi(make_wedge(3, 1, {0, 1, 0}), 0, p).value, 0.0);
  EXPECT_NEAR(bq_phi(make_wedge(3, 1, {0.1, 0, 0}), 0, p).value, 0.25 * std::pow(10.0, 0.9),
              1e-13);
  EXPECT_NEAR(bq_phi(make_wedge(3, 1, {0.1, 0, 0}), 0, p).value, 1.98582, 1e-5);
  HeightValue blow = bq_phi(make_wedge(3, 1, {0, 0.01, 0}), 0, p);
  EXPECT_TRUE(blow.blow_up);
  EXPECT_EQ(blow.value, kBlowUp);
}

TEST(BqAlpha, StandardLattice) {
  UnimodularLattice Z3(Matrix::Identity(3, 3));
  for (int i = 0; i < 2; ++i) {
    HeightValue a = bq_alpha(Z3, i, params(0.5));
    EXPECT_DOUBLE_EQ(a.value, 0.25);
    EXPECT_FALSE(a.blow_up);
  }
}

TEST(BqAlpha, DiagonalCuspPoint) {
  UnimodularLattice L = diag_lattice({2, 2, -4});
  // eps = 0.5: e1 ^ e3 has |v0| = e^{-2} < 0.25 and v1 = 0.
  HeightValue big = bq_alpha(L, 0, params(0.5));
  EXPECT_TRUE(big.blow_up);
  EXPECT_EQ(big.degree, 2);
  // eps = 0.3: e1 ^ e3 fails the gate; e3 gives 0.09 e^{3.6}.
  HeightValue a = bq_alpha(L, 0, params(0.3));
  EXPECT_FALSE(a.blow_up);
  EXPECT_EQ(a.degree, 1);
  EXPECT_NEAR(a.value, 0.09 * std::exp(3.6), 1e-12 * a.value);
}

TEST(BqAlpha, DeepCuspIsFast) {
  XPrimePoint x = XPrimePoint::make({30, 25}, std::vector<double>{0.3141592653589793, -0.2});
  HeightValue a = bq_alpha(flows::to_lattice(x), 0, params());
  EXPECT_TRUE(std::isfinite(a.value));
  const double kappa = flows::kappa_i(x, 0);
  EXPECT_GE(a.value, 0.09 * alpha_prime(x, 0, 0.9) / (kappa * kappa));
  // xi = 0: the degree-2 element e_1 ^ e_3 has v1 = 0 and |v0| = e^{-25}.
  XPrimePoint r = XPrimePoint::make({30, 25}, std::vector<double>{0, 0});
  HeightValue b = bq_alpha(flows::to_lattice(r), 0, params());
  EXPECT_TRUE(b.blow_up);
  EXPECT_EQ(b.degree, 2);
}

TEST(BqAlpha, FloorAgreesAboveFloor) {
  Rng rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    XPrimePoint x = flows::sample_xprime(3, {}, rng);
    UnimodularLattice L = flows::to_lattice(x);
    for (int i = 0; i < 2; ++i) {
      HeightValue exact = bq_alpha(L, i, params());
      HeightValue floored = bq_alpha(L, i, params(), 1.0);
      if (exact.value >= 1) {
        EXPECT_NEAR(floored.value, exact.value, 1e-12 * exact.value);
      } else {
        EXPECT_LT(floored.value, 1.0);
      }
    }
  }
}

// Brute force over a coefficient box, valid when the box contains every
// vector that could matter (moderate tau).
double brute_alpha_degree1(const UnimodularLattice& L, int i, double eps, double lambda, int box) {
  const int d = L.dim();
  const double g = std::pow(eps, d - 1);
  double best = 0;
  std::vector<std::int64_t> c(d, -box);
  while (true) {
    bool zero = true;
    for (auto v : c) zero = zero && v == 0;
    if (!zero) {
      auto x = L.vector(lattice::IntVector(c.begin(), c.end()));
      double n0 = 0, n1 = 0;
      for (int r = 0; r < d; ++r) {
        double v = to_double(x[r]);
        ((r == i || r == d - 1) ? n1 : n0) += v * v;
      }
      if (n0 < g * g && n1 > 0) best = std::max(best, g * std::pow(std::sqrt(n1), -lambda));
    }
    int j = 0;
    while (j < d && c[j] == box) c[j++] = -box;
    if (j == d) break;
    ++c[j];
  }
  return best;
}

TEST(BqAlpha, MatchesBruteForceAtModerateHeight) {
  Rng rng(22);
  for (int trial = 0; trial < 25; ++trial) {
    XPrimePoint x = flows::sample_xprime(3, {0.1, 0.8}, rng);
    UnimodularLattice L = flows::to_lattice(x);
    double a1 = brute_alpha_degree1(L, 0, 0.3, 0.9, 12);
    double a2 = brute_alpha_degree1(L.dual(), 0, 0.3, 0.9, 12);
    HeightValue a = bq_alpha(L, 0, params());
    EXPECT_NEAR(a.value, std::max(a1, a2), 1e-9 * a.value) << trial;
  }
}

TEST(BqAlpha, DimensionFourUsesMiddleDegree) {
  UnimodularLattice Z4(Matrix::Identity(4, 4));
  HeightValue a = bq_alpha(Z4, 0, params(0.5));
  // Degree 1 and 3 give eps^3; degree 2 gives eps^4 from e1 ^ e2.
  EXPECT_DOUBLE_EQ(a.value, 0.125);
}

TEST(Ht2, Examples) {
  EXPECT_DOUBLE_EQ(ht2(UnimodularLattice(Matrix::Identity(2, 2)), 0.9), 1.0);
  for (double T : {0.5, 1.0, 2.0}) {
    EXPECT_NEAR(ht2(diag_lattice({T, -T}), 0.9), std::exp(0.9 * T), 1e-12 * std::exp(0.9 * T));
  }
  Matrix u(2, 2);
  u << 1, 0.5, 0, 1;
  EXPECT_NEAR(ht2(UnimodularLattice(u), 0.9), 1.0, 1e-15);
}

TEST(AlphaPrime, Example) {
  XPrimePoint x = XPrimePoint::make({1, 1}, std::vector<double>{0, 0});
  EXPECT_NEAR(alpha_prime(x, 0, 0.9), std::exp(2.8), 1e-12 * std::exp(2.8));
  EXPECT_NEAR(alpha_prime(x, 0, 0.9), 16.4446, 1e-4);
}

TEST(AlphaPrime, StableAlongOtherHorocycles) {
  Rng rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    const int d = 3 + trial % 2;
    XPrimePoint x = flows::sample_xprime(d, {}, rng);
    const int i = trial % (d - 1);
    const int j = (i + 1 + trial % (d - 2)) % (d - 1);
    ASSERT_NE(i, j);
    XPrimePoint y = flows::act_horo_i(uniform(rng, -100, 100), j, x);
    EXPECT_NEAR(alpha_prime(y, i, 0.9), alpha_prime(x, i, 0.9), 1e-9 * alpha_prime(x, i, 0.9));
  }
}

TEST(AlphaPrime, ShortestVectorInequality) {
  Rng rng(24);
  for (int trial = 0; trial < 1000; ++trial) {
    XPrimePoint x = flows::sample_xprime(3, {}, rng);
    double l1 = lattice::shortest_vector(flows::to_lattice(x)).norm;
    for (int i = 0; i < 2; ++i) {
      EXPECT_GE(alpha_prime(x, i, 0.9) * std::pow(l1, 0.9), 1.0 - 1e-12) << trial;
    }
  }
}

TEST(AlphaTilde, BranchesAndBounds) {
  Rng rng(25);
  CalibratedConstants c = test_constants(20);
  for (int trial = 0; trial < 200; ++trial) {
    XPrimePoint x = flows::sample_xprime(3, {}, rng);
    for (int i = 0; i < 2; ++i) {
      TildeValue t = alpha_tilde_detail(x, i, params(), c);
      const double kappa = flows::kappa_i(x, i);
      const double ap = alpha_prime(x, i, 0.9);
      EXPECT_GE(t.value, 1.0);
      EXPECT_LE(t.value, std::max(c.E101 * kappa, ap) * (1 + 1e-12));
      if (!t.min_branch) {
        EXPECT_EQ(t.value, std::max(t.bq, 1.0));
      } else {
        EXPECT_EQ(t.value, std::min(t.bq, ap));
      }
      // Lemma-type sandwich between alpha' and alpha.
      double exact_bq = bq_alpha(flows::to_lattice(x), i, params()).value;
      EXPECT_LE(0.09 * ap / (kappa * kappa), exact_bq * (1 + 1e-12)) << trial;
    }
  }
}

TEST(AlphaTilde, MinBranchOnDeepPoint) {
  CalibratedConstants c = test_constants(20);
  // alpha = 0.09 e^{0.9 * 8.2} exceeds E101 kappa_0 = 20 e^{0.2}.
  XPrimePoint x = XPrimePoint::make({8, 0.2}, std::vector<double>{0, 0});
  TildeValue t = alpha_tilde_detail(x, 0, params(), c);
  EXPECT_TRUE(t.min_branch);
  EXPECT_NEAR(t.bq, 0.09 * std::exp(0.9 * 8.2), 1e-12 * t.bq);
  EXPECT_EQ(t.value, std::min(t.bq, alpha_prime(x, 0, 0.9)));
  EXPECT_EQ(t.value, t.bq);
}

TEST(AlphaTilde, BlowUpFallsBackToAlphaPrime) {
  CalibratedConstants c = test_constants(20);
  XPrimePoint x = XPrimePoint::make({2, 2}, std::vector<double>{0, 0});
  TildeValue t = alpha_tilde_detail(x, 0, params(0.5), c);
  EXPECT_TRUE(t.blow_up);
  EXPECT_DOUBLE_EQ(t.value, alpha_prime(x, 0, 0.9));
}

TEST(AlphaTilde, InjectivityRadiusLink) {
  Rng rng(26);
  CalibratedConstants c = test_constants(20);
  double cmin = 1e300;
  int used = 0;
  for (int trial = 0; trial < 300; ++trial) {
    // xi near 0 keeps e_3 short, so most samples lie in the cusp.
    std::vector<double> tau{uniform(rng, 0.5, 4.0), uniform(rng, 0.5, 4.0)};
    std::vector<double> xi{uniform(rng, -0.05, 0.05) * std::exp(-tau[0]),
                           uniform(rng, -0.05, 0.05) * std::exp(-tau[1])};
    XPrimePoint x = XPrimePoint::make(tau, xi);
    double l1 = lattice::shortest_vector(flows::to_lattice(x)).norm;
    if (l1 > 0.2) continue;
    ++used;
    double a = std::max(alpha_tilde(x, 0, params(), c), alpha_tilde(x, 1, params(), c));
    cmin = std::min(cmin, a * std::pow(l1, 0.9));
  }
  ASSERT_GT(used, 20);
  EXPECT_GT(cmin, 0.0);
}

TEST(JSet, DefinitionalIdentities) {
  CalibratedConstants c = test_constants(20);
  HeightParams p = params();
  p.t = 0.5;
  XPrimePoint x = XPrimePoint::make({0.3, 0.4}, std::vector<double>{0.1, 0.2});
  std::vector<int> full = j_set(x, 0, 1.0, 6, p, c);
  EXPECT_EQ(full, (std::vector<int>{1, 2, 3, 4, 5, 6}));
  std::vector<int> lo = j_set(x, 0, 3.0, 6, p, c), hi = j_set(x, 0, 30.0, 6, p, c);
  for (int j : hi) EXPECT_TRUE(std::find(lo.begin(), lo.end(), j) != lo.end());
  // Rational point: alpha~ = 0.09 e^{0.9 (0.7 + 0.5 j)} grows along the
  // orbit, so exactly the late j belong.
  XPrimePoint r = XPrimePoint::make({0.3, 0.4}, std::vector<double>{0, 0});
  EXPECT_EQ(j_set(r, 0, 10.0, 12, p, c), (std::vector<int>{10, 11, 12}));
}

TEST(Beta, DefinitionalIdentities) {
  CalibratedConstants c = test_constants(20);
  HeightParams p = params();
  p.t = 0.5;
  XPrimePoint x = XPrimePoint::make({0.3, 0.4}, std::vector<double>{0.1, 0.2});
  flows::DiagParam s{{6 * p.t, 0}};
  double top = alpha_tilde(flows::act_diag(s, x), 0, p, c);
  EXPECT_DOUBLE_EQ(beta(x, 6, 0.2, 0, 1.0, p, c), top);
  double b = beta(x, 6, 0.2, 0, 5.0, p, c);
  EXPECT_TRUE(b == 0 || b == top);
  EXPECT_LE(b, top);
}

TEST(Omega, DefinitionalIdentities) {
  CalibratedConstants c = test_constants(20);
  HeightParams p = params();
  p.t = 0.5;
  XPrimePoint x = XPrimePoint::make({0.2, 0.3}, std::vector<double>{0.17, -0.31});
  EXPECT_EQ(omega_set(x, 2, 1.0, p, c).size(), flows::make_D_N(2, p.t, 3).size());
  auto lo = omega_set(x, 2, 2.0, p, c);
  auto hi = omega_set(x, 2, 8.0, p, c);
  EXPECT_LE(hi.size(), lo.size());
  for (const auto& m : hi.points)
    EXPECT_TRUE(std::find(lo.points.begin(), lo.points.end(), m) != lo.points.end());
  // Omega(2N) restricted to D_N is Omega(N).
  auto big = omega_set(x, 4, 2.0, p, c);
  auto D2 = flows::make_D_N(2, p.t, 3);
  std::vector<std::vector<int>> restricted;
  for (const auto& m : big.points)
    if (std::find(D2.points.begin(), D2.points.end(), m) != D2.points.end())
      restricted.push_back(m);
  EXPECT_EQ(restricted, lo.points);
}

TEST(Psi, GateAndBounds) {
  CalibratedConstants c = test_constants(20);
  HeightParams p = params();
  p.t = 0.5;
  XPrimePoint x = XPrimePoint::make({0.2, 0.3}, std::vector<double>{0.17, -0.31});
  // h = 1: Omega is everything, so the gate passes.
  PsiValue full = psi(x, 4, 0.5, 1.0, p, c, 2.0);
  EXPECT_TRUE(full.gate_passed);
  ASSERT_FALSE(full.empty_min_set);
  EXPECT_GE(full.value, 1.0);
  double bound = 1;
  for (int i = 0; i < 2; ++i) {
    double mx = 0;
    auto E = flows::make_E(4, 0.5, i, p.t, 3);
    for (size_t j = 0; j < E.size(); ++j)
      mx = std::max(mx, alpha_tilde(flows::act_diag({E.tau(j)}, x), i, p, c));
    bound *= mx;
  }
  EXPECT_LE(full.value, bound * (1 + 1e-12));
  // Huge h: Omega is empty and the gate fails.
  PsiValue none = psi(x, 4, 0.5, 1e9, p, c, 2.0);
  EXPECT_FALSE(none.gate_passed);
  EXPECT_EQ(none.value, 0.0);
}

TEST(CalibratedConstants, JsonRoundTrip) {
  CalibratedConstants c = test_constants(12.5);
  c.C = 1.25;
  c.C_ht = 0.1 + 0.2;
  c.C5 = 3.7;
  c.seed = 42;
  CalibratedConstants back = CalibratedConstants::from_json(c.to_json());
  EXPECT_EQ(back.C, c.C);
  EXPECT_EQ(back.C_ht, c.C_ht);
  EXPECT_EQ(back.E101, c.E101);
  EXPECT_EQ(back.C5, c.C5);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.D_breakpoints, c.D_breakpoints);
  EXPECT_NE(c.to_json().find("\"E101\": 1.2500000000000000e+01"), std::string::npos);
  EXPECT_THROW(CalibratedConstants::from_json("{\"lambda\": 0.9}"), Error);
  EXPECT_THROW(CalibratedConstants::from_json("not json"), Error);
}

TEST(CalibratedConstants, DTableAndE101) {
  CalibratedConstants c = test_constants(1);
  EXPECT_DOUBLE_EQ(c.D(1), 2);
  EXPECT_DOUBLE_EQ(c.D(5.5), 16);
  EXPECT_DOUBLE_EQ(c.D(20), 60);
  c.C = 3;
  c.C_ht = 1;
  c.epsilon = 0.3;
  c.assemble_E101();
  EXPECT_NEAR(c.E101, std::max(15.0, 1 / 0.09), 1e-12);
  EXPECT_GE(c.E101, 1 / 0.09);
}

}  // namespace
}  // namespace latflow::heights
