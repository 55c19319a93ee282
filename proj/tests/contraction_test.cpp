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

#include "latflow/contraction.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "json.hpp"
#include "latflow/errors.hpp"

namespace latflow::contraction {
namespace {

using heights::CalibratedConstants;
using heights::HeightParams;

// Constants of the size calibrate() produces at the default parameters;
// tests that need a real fit call calibrated() (each ctest case is its own
// process, so the fit is not shared).
const CalibratedConstants& consts() {
  static const CalibratedConstants c = [] {
    CalibratedConstants k;
    k.C = k.C_p99 = 0.2;
    k.C_ht = 2.7;
    k.C_ht_p99 = 2.4;
    k.assemble_E101();
    k.D_breakpoints = {{1.0, 1.5}};
    k.C4 = 7.4;
    k.C4_max = 30;
    k.C7 = fit_c7(3, {1, 2, 3, 4, 5, 6, 7, 8}, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9});
    return k;
  }();
  return c;
}

const CalibratedConstants& calibrated() {
  static const CalibratedConstants c = [] {
    SampleSpec s;
    s.count = 100;
    s.seed = 7;
    return calibrate(HeightParams{}, s);
  }();
  return c;
}

SampleSpec fresh(std::size_t count, std::uint64_t seed = 99) {
  SampleSpec s;
  s.count = count;
  s.seed = seed;
  return s;
}

TEST(Quadrature, ConstantIsExact) {
  QuadResult q = quad_average([](double) { return 1.0; }, 16);
  EXPECT_DOUBLE_EQ(q.estimate, 1.0);
  EXPECT_DOUBLE_EQ(q.coarse, 1.0);
  EXPECT_EQ(q.error, 0.0);
  EXPECT_EQ(q.evaluations, 16 + 32);
  EXPECT_FALSE(q.capped);
}

TEST(Quadrature, SmoothIntegrand) {
  QuadResult q = quad_average([](double s) { return s * s; }, 64);
  EXPECT_NEAR(q.estimate, 1.0 / 12, 1e-4);
  EXPECT_LE(std::abs(q.estimate - 1.0 / 12), q.error);
}

TEST(Quadrature, BlowUpIsSubdividedThenCapped) {
  // Infinite on |s| < 0.1: the centre stratum is split three times and the
  // innermost pieces take the largest finite value.
  auto g = [](double s) { return std::abs(s) < 0.1 ? heights::kBlowUp : 2.0; };
  QuadResult q = quad_average(g, 3);
  EXPECT_GT(q.subdivided, 0);
  EXPECT_TRUE(q.capped);
  EXPECT_DOUBLE_EQ(q.estimate, 2.0);
  QuadResult clean = quad_average([](double s) { return 1 + s; }, 4);
  EXPECT_FALSE(clean.capped);
  EXPECT_EQ(clean.subdivided, 0);
}

TEST(Quadrature, ErrorCoversStepDiscontinuity) {
  // A jump between the nodes of a stratum: the node spread bounds the
  // midpoint error.
  auto g = [](double s) { return s < 0.04 ? 0.0 : 1.0; };
  QuadResult q = quad_average(g, 8);
  EXPECT_LE(std::abs(q.estimate - 0.46), q.error);
}

TEST(Quadrature, HorosphericalResolutionFloor) {
  auto x = flows::XPrimePoint::make({1.0, 1.0}, std::vector<double>{0.1, 0.2});
  auto f = height_integrand(HeightKind::kHt, 0, HeightParams{});
  EXPECT_THROW(quad_average_u(f, x, 0, 4, 32), Error);
  EXPECT_THROW(quad_average_u(f, x, 2, 4, 64), Error);
}

TEST(Samples, DeterministicAndCyclic) {
  SampleSpec s = fresh(6, 3);
  auto a = draw_samples(s);
  auto b = draw_samples(s);
  ASSERT_EQ(a.size(), 6u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].i, static_cast<int>(k % 2));
    EXPECT_EQ(a[k].x.tau(), b[k].x.tau());
    EXPECT_EQ(a[k].x.xi_double(), b[k].x.xi_double());
  }
}

TEST(Samples, DiagonalLaw) {
  SampleSpec s = fresh(10);
  s.law = SampleLaw::kDiagonal;
  s.tau = {40, 48};
  for (const auto& p : draw_samples(s)) {
    EXPECT_GE(p.x.tau()[p.i], 40);
    EXPECT_LE(p.x.tau()[p.i], 48);
    EXPECT_LE(p.x.tau()[1 - p.i], 2);
    EXPECT_EQ(p.x.xi_double(), (std::vector<double>{0, 0}));
  }
}

TEST(Samples, CuspLawIsNearRationals) {
  SampleSpec s = fresh(20);
  s.law = SampleLaw::kCusp;
  s.tau = {2, 6};
  for (const auto& p : draw_samples(s)) {
    const double sum = p.x.sum_tau();
    for (int j = 0; j < 2; ++j) {
      const double xi = p.x.xi_double()[j];
      double best = 1;
      for (int q = 1; q <= 4; ++q) best = std::min(best, std::abs(xi * q - std::round(xi * q)) / q);
      EXPECT_LE(best, std::exp(-p.x.tau()[j] - sum) * (1 + 1e-9));
    }
  }
}

TEST(FitConstant, MaxAndNearestRankPercentile) {
  std::vector<double> v;
  for (int k = 100; k >= 1; --k) v.push_back(k);
  ConstantFit f = fit_constant(v);
  EXPECT_EQ(f.max, 100);
  EXPECT_EQ(f.p99, 99);
  EXPECT_EQ(fit_constant({}).max, 0);
}

TEST(Calibrate, Preconditions) {
  EXPECT_THROW(calibrate(HeightParams{}, fresh(50)), Error);
  HeightParams bad;
  bad.t = 0;
  EXPECT_THROW(calibrate(bad, fresh(100)), Error);
}

TEST(Calibrate, ConstantsAreFiniteAndConsistent) {
  const auto& c = calibrated();
  EXPECT_GE(c.C, 0);
  EXPECT_GE(c.C_ht, 0);
  EXPECT_LE(c.C_p99, c.C);
  EXPECT_LE(c.C_ht_p99, c.C_ht);
  EXPECT_GE(c.E101, std::pow(0.3, -2));
  EXPECT_GE(c.E101, 5 * c.C);
  EXPECT_GE(c.E101, 5 * c.C_ht);
  EXPECT_GE(c.C4_max, c.C4);
  EXPECT_GE(c.C4, 1);
  EXPECT_GE(c.C5, 1);
  EXPECT_GE(c.C7, 1);
  EXPECT_FALSE(c.D_breakpoints.empty());
  EXPECT_EQ(c.samples, 100);
  EXPECT_EQ(c.seed, 7u);
  // Round trip through the calibration file format.
  auto back = CalibratedConstants::from_json(c.to_json());
  EXPECT_EQ(back.E101, c.E101);
  EXPECT_EQ(back.C5_max, c.C5_max);
}

TEST(Subharmonic, HtOnFreshSample) {
  auto rep = check_subharmonic(HeightKind::kHt, HeightParams{}, calibrated(), fresh(40));
  EXPECT_EQ(rep.applicable, 40);
  EXPECT_GE(rep.pass_rate, 0.95);
  auto j = nlohmann::json::parse(rep.to_json());
  EXPECT_EQ(j["samples"].size(), 40u);
  EXPECT_EQ(j["inequality"], "ht");
}

TEST(Subharmonic, AlphaPrimeUsesKappaScaling) {
  auto rep = check_subharmonic(HeightKind::kAlphaPrime, HeightParams{}, consts(), fresh(20));
  for (const auto& s : rep.samples) {
    auto x = flows::XPrimePoint::make(s.tau, s.xi);
    const double expect = std::exp(-0.9 * 4) * s.input_height +
                          consts().C_ht_p99 * flows::kappa_i(x, s.i);
    EXPECT_NEAR(s.bound, expect, 1e-9 * expect);
  }
}

TEST(Subharmonic, AlphaTildeOnlyAppliesToHighPoints) {
  // The harness law stays far below E101 e^t.
  auto rep = check_subharmonic(HeightKind::kAlphaTilde, HeightParams{}, consts(), fresh(10));
  EXPECT_EQ(rep.applicable, 0);
  EXPECT_EQ(rep.pass_rate, 1.0);
}

TEST(Subharmonic, QuadratureConvergesOnMostSamples) {
  // Doubling the resolution moves the integral by less than the reported
  // error proxy on >= 95% of samples.
  HeightParams p;
  const auto pts = draw_samples(fresh(40, 5));
  int ok = 0;
  for (const auto& [x, i] : pts) {
    auto f = height_integrand(HeightKind::kBqAlpha, i, p);
    QuadResult a = quad_average_u(f, x, i, p.t, 64);
    QuadResult b = quad_average_u(f, x, i, p.t, 128);
    if (std::abs(b.estimate - a.estimate) <= a.error + 1e-12) ++ok;
  }
  EXPECT_GE(ok, 38);  // 95% of 40
}

TEST(LogLipschitz, AlphaPrimeIsExactlyStableAlongUiPerp) {
  LipschitzOptions o;
  o.per_point = 5;
  auto rep = check_log_lipschitz(HeightKind::kAlphaPrime, PerturbGroup::kUiPerp, HeightParams{},
                                 consts(), fresh(40), o);
  EXPECT_EQ(rep.perturbations, 200);
  EXPECT_LE(rep.max_log_ratio, 1e-9);
}

TEST(LogLipschitz, IdentityPerturbationHasRatioOne) {
  LipschitzOptions o;
  o.radius = 0;
  o.per_point = 2;
  for (auto g : {PerturbGroup::kAUBall, PerturbGroup::kAiUiBall, PerturbGroup::kUiPerp}) {
    auto rep = check_log_lipschitz(HeightKind::kAlphaPrime, g, HeightParams{}, consts(),
                                   fresh(10), o);
    EXPECT_EQ(rep.max_log_ratio, 0) << to_string(g);
  }
  auto hi = check_log_lipschitz(HeightKind::kBqAlpha, PerturbGroup::kHiBall, HeightParams{},
                                consts(), fresh(10), o);
  EXPECT_LE(hi.max_log_ratio, 1e-12);
}

TEST(LogLipschitz, AlphaTildeWithinCalibratedC5) {
  // Same sample law and perturbation ball as the fit, fresh seed: the p99
  // ratio stays within the fitted maximum.
  auto rep = check_log_lipschitz(HeightKind::kAlphaTilde, PerturbGroup::kAiUiBall,
                                 HeightParams{}, calibrated(), fresh(20));
  EXPECT_LE(rep.p99_log_ratio, std::log(calibrated().C5_max) + 1e-12);
}

TEST(LogLipschitz, HiBallNeedsLatticeHeight) {
  EXPECT_THROW(check_log_lipschitz(HeightKind::kAlphaPrime, PerturbGroup::kHiBall,
                                   HeightParams{}, consts(), fresh(2)),
               Error);
}

TEST(LogLipschitz, TildeKappaSquaredBoundIsChecked) {
  auto rep = check_log_lipschitz(HeightKind::kAlphaTilde, PerturbGroup::kUiPerp, HeightParams{},
                                 consts(), fresh(10));
  EXPECT_EQ(rep.bound_checks, rep.perturbations);
  EXPECT_EQ(rep.bound_violations, 0);
}

TEST(Beta, RejectsLowH) {
  BetaOptions o;
  o.h = consts().E101;
  EXPECT_THROW(check_beta_contraction(HeightParams{}, consts(), fresh(1), o), Error);
}

TEST(Beta, HugeHIsVacuous) {
  BetaOptions o;
  o.N = 2;
  o.h = 1e200;
  auto rep = check_beta_contraction(HeightParams{}, consts(), fresh(4), o);
  EXPECT_EQ(rep.nonvacuous, 0);
  EXPECT_EQ(rep.pass_rate, 1.0);
  for (const auto& s : rep.samples) EXPECT_TRUE(s.vacuous);
}

TEST(Beta, DeepDiagonalPointsContract) {
  HeightParams p;
  SampleSpec s = fresh(2, 21);
  s.law = SampleLaw::kDiagonal;
  s.tau = {12, 14};
  BetaOptions o;
  o.N = 2;
  o.h = 1.01 * consts().E101 * std::exp(p.t);
  o.slack = 0.2;
  auto rep = check_beta_contraction(p, consts(), s, o);
  EXPECT_EQ(rep.nonvacuous, 2);
  for (const auto& b : rep.samples) EXPECT_LT(b.rate, 0);
}

TEST(Beta, BoundIsMonotoneInDelta) {
  CalibratedConstants c = consts();
  c.C6 = 1;
  double prev = -1e9;
  for (double delta : {0.1, 0.3, 0.6, 0.9}) {
    BetaOptions o;
    o.N = 1;
    o.delta = delta;
    o.h = 1e200;
    o.slack = 0.2;
    auto rep = check_beta_contraction(HeightParams{}, c, fresh(1), o);
    EXPECT_GT(rep.samples[0].bound, prev);
    prev = rep.samples[0].bound;
  }
}

TEST(Beta, DefaultSlackComesFromC5) {
  BetaOptions o;
  o.N = 1;
  o.h = 1e200;
  auto rep = check_beta_contraction(HeightParams{}, consts(), fresh(1), o);
  EXPECT_DOUBLE_EQ(rep.slack, std::log(8 * consts().C5) / 4);
}

TEST(Psi, VanishingPsiMeetsBound) {
  PsiOptions o;
  o.N = 1;
  o.h = 1e200;
  o.C7 = consts().C7;
  o.resolution = 3;
  o.inductive = false;
  auto x = flows::XPrimePoint::make({0.5, 0.5}, std::vector<double>{0.1, 0.3});
  auto rep = check_psi_bounds(HeightParams{}, consts(), x, o);
  EXPECT_EQ(rep.integral, 0);
  EXPECT_EQ(rep.gate_passed, 0);
  EXPECT_TRUE(rep.pass);
  EXPECT_GE(rep.M, 1);
}

TEST(Psi, BoundIsMonotoneInM) {
  PsiOptions o;
  o.N = 2;  // E_{N,delta,i} is empty for N = 1
  o.delta = 0.9;
  o.h = 1;
  o.resolution = 2;
  o.inductive = false;
  auto shallow = flows::XPrimePoint::make({0.5, 0.5}, std::vector<double>{0.1, 0.3});
  auto deep = flows::XPrimePoint::make({6.0, 6.0}, std::vector<double>{0.0, 0.0});
  auto a = check_psi_bounds(HeightParams{}, consts(), shallow, o);
  auto b = check_psi_bounds(HeightParams{}, consts(), deep, o);
  ASSERT_LT(a.M, b.M);
  EXPECT_LT(a.bound, b.bound);
  EXPECT_GT(a.integral, 0);  // h = 1: the gate always passes
  EXPECT_EQ(a.gate_passed, 4);
}

TEST(FitC7, TwoSidedOverNonemptyE) {
  const std::vector<int> Ns = {2, 4};
  const std::vector<double> deltas = {0.2, 0.5};
  const double c7 = fit_c7(3, Ns, deltas);
  for (int N : Ns) {
    const double D = static_cast<double>(flows::make_D_N(N, 1, 3).size());
    for (double delta : deltas) {
      const double E = static_cast<double>(flows::make_E(N, delta, 0, 1, 3).size());
      if (E == 0) continue;
      const double r = E / (std::pow(delta, 3) * D);
      EXPECT_LE(r, c7 * (1 + 1e-12));
      EXPECT_GE(r, 1 / c7 * (1 - 1e-12));
    }
  }
}

TEST(Covering, FullGridAtUnitHeight) {
  auto s = covering_counts({0.5, 0.5}, {1}, 0.3, {1.0}, 0.35, HeightParams{}, consts(),
                           consts().C7);
  ASSERT_EQ(s.size(), 1u);
  const auto& row = s[0].rows[0];
  EXPECT_EQ(row.M, row.cells);
  EXPECT_NEAR(row.slope, std::log(static_cast<double>(row.cells)) / (6 * 0.35), 1e-12);
}

TEST(Covering, HugeHEmptiesTheGrid) {
  auto s = covering_counts({0.5, 0.5}, {1}, 0.3, {1e200}, 0.35, HeightParams{}, consts(),
                           consts().C7);
  EXPECT_EQ(s[0].rows[0].M, 0);
  EXPECT_EQ(s[0].rows[0].slope, 0);
  EXPECT_EQ(s[0].to_csv().substr(0, 20), "N,resolution,M,slope");
}

TEST(Covering, MonotoneInHAndDelta) {
  // Deep base point so intermediate h splits the grid.
  const std::vector<double> hs = {1.0, 2.0, 8.0, 64.0};
  auto s = covering_counts({3.0, 3.0}, {1}, 0.3, hs, 0.3, HeightParams{}, consts(), 1.0);
  for (std::size_t a = 1; a < hs.size(); ++a) EXPECT_LE(s[a].rows[0].M, s[a - 1].rows[0].M);
  std::int64_t prev = -1;
  for (double delta : {0.2, 0.5, 0.9}) {
    auto t = covering_counts({3.0, 3.0}, {1}, delta, {8.0}, 0.3, HeightParams{}, consts(), 1.0);
    EXPECT_GE(t[0].rows[0].M, prev);
    prev = t[0].rows[0].M;
  }
}

TEST(Covering, GridBudget) {
  CoveringOptions o;
  o.max_cells = 10;  // N = 1, t = 0.35 needs 5 x 5 cells
  try {
    covering_counts({0.5, 0.5}, {1}, 0.3, {1.0}, 0.35, HeightParams{}, consts(), 1.0, o);
    FAIL() << "expected GridBudgetExceeded";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kGridBudgetExceeded);
  }
}

TEST(Names, RoundTrip) {
  for (auto k : {HeightKind::kHt, HeightKind::kBqAlpha, HeightKind::kAlphaPrime,
                 HeightKind::kAlphaTilde}) {
    EXPECT_EQ(parse_height_kind(to_string(k)), k);
  }
  for (auto g : {PerturbGroup::kHiBall, PerturbGroup::kAUBall, PerturbGroup::kAiUiBall,
                 PerturbGroup::kUiPerp}) {
    EXPECT_EQ(parse_perturb_group(to_string(g)), g);
  }
  EXPECT_THROW(parse_height_kind("nope"), Error);
}

}  // namespace
}  // namespace latflow::contraction
