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


// Numerical checks of the contraction inequalities for the height functions:
// quadrature along expanding horospheres, constant fitting, and the covering
// counts behind the dimension estimate.

#ifndef LATFLOW_CONTRACTION_HPP_
#define LATFLOW_CONTRACTION_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "latflow/flows.hpp"
#include "latflow/heights.hpp"

namespace latflow::contraction {

enum class HeightKind { kHt, kBqAlpha, kAlphaPrime, kAlphaTilde };

const char* to_string(HeightKind kind);
// Accepts ht, bq_alpha, alpha_prime, alpha_tilde.
HeightKind parse_height_kind(const std::string& text);

// f(y) for a slice point y; heights::kBlowUp marks an infinite value.
using Integrand = std::function<double(const flows::XPrimePoint&)>;

// kHt is ht_lambda of phi_i(y) (of y itself when d = 2). kAlphaTilde needs
// consts.
Integrand height_integrand(HeightKind kind, int i, const heights::HeightParams& params,
                           const heights::CalibratedConstants* consts = nullptr);

struct QuadResult {
  double estimate = 0;     // midpoint rule on 2 * resolution strata
  double coarse = 0;       // midpoint rule on resolution strata
  // max(|estimate - coarse|, half the node spread per coarse stratum
  // times its width)
  double error = 0;
  int evaluations = 0;
  int subdivided = 0;      // strata split because the midpoint blew up
  bool capped = false;     // some stratum stayed infinite after 3 splits
};

// Midpoint average of g over [-1/2, 1/2]. A stratum whose midpoint value is
// heights::kBlowUp is halved, up to three times; one still infinite then
// contributes the largest finite value seen and sets `capped`.
QuadResult quad_average(const std::function<double(double)>& g, int resolution);

// Average of f(a_{t e_i} u_i(s) x) over s in [-1/2, 1/2]. resolution >= 64.
QuadResult quad_average_u(const Integrand& f, const flows::XPrimePoint& x, int i, double t,
                          int resolution);

enum class SampleLaw {
  kUniform,  // flows::sample_xprime
  // Near rational points: tau uniform, xi = p/q + O(e^{-tau_j - sum tau})
  // with q <= 4, so some lattice vector is short.
  kCusp,
  // xi = 0, tau_i uniform on [tau_min, tau_max] for the sampled direction i,
  // the other entries uniform on [0.5, 2].
  kDiagonal,
};

struct SampleSpec {
  int d = 3;
  std::size_t count = 200;
  std::uint64_t seed = 1;
  flows::SampleSpec tau{};
  SampleLaw law = SampleLaw::kUniform;
};

struct SamplePoint {
  flows::XPrimePoint x;
  int i = 0;  // direction, 0-based
};

// Deterministic in spec; directions cycle through 0..d-2.
std::vector<SamplePoint> draw_samples(const SampleSpec& spec);

struct ConstantFit {
  double max = 0;
  double p99 = 0;
};

// Max and 99th percentile (nearest rank) of the values, 0 when empty.
ConstantFit fit_constant(std::vector<double> values);

// Fits C, C_ht, E101, the D table, C4, C5 and C7 on a calibration sample
// (uniform law). C6 and C11 come from fit_c6 / fit_c11.
// Throws CalibrationUnstable when high sample points show no contraction.
heights::CalibratedConstants calibrate(const heights::HeightParams& params,
                                       const SampleSpec& spec);

struct SampleResult {
  std::vector<double> tau;
  std::vector<double> xi;
  int i = 0;
  double input_height = 0;
  double integral = 0;
  double error = 0;
  double bound = 0;
  bool applicable = true;  // false outside the regime the bound covers
  bool pass = false;       // integral <= bound + error
  bool capped = false;
};

struct ContractionReport {
  std::string inequality;
  SampleSpec sample;
  int resolution = 0;
  std::vector<std::pair<std::string, double>> constants;
  std::vector<SampleResult> samples;
  int applicable = 0;
  int passed = 0;
  double pass_rate = 0;          // passed / applicable (1 when none apply)
  double max_refinement_error = 0;
  std::string to_json() const;
};

enum class ConstantChoice { kMax, kP99 };

struct CheckOptions {
  ConstantChoice constants = ConstantChoice::kP99;
};

// ht: e^{-lambda t} ht + C_ht; bq_alpha: e^{-lambda t} alpha + C;
// alpha_prime: e^{-lambda t} alpha' + C_ht kappa_i; alpha_tilde: points with
// alpha~ >= E101 e^t only, bound 2 e^{-lambda^2 t} alpha~.
ContractionReport check_subharmonic(HeightKind kind, const heights::HeightParams& params,
                                    const heights::CalibratedConstants& consts,
                                    const SampleSpec& spec, const CheckOptions& opts = {});

enum class PerturbGroup {
  kHiBall,     // exp(X), X in sl_2 on coordinates (i, d), |X| <= radius
  kAUBall,     // a_sigma u(s), sigma >= 0, |sigma| <= radius, |s_j| <= radius
  kAiUiBall,   // a_{sigma e_i} u_i(s), 0 <= sigma <= radius, |s| <= radius
  kUiPerp,     // u_j(s), j != i, |s| <= radius
};

const char* to_string(PerturbGroup group);
PerturbGroup parse_perturb_group(const std::string& text);

struct LogLipschitzReport {
  HeightKind kind = HeightKind::kAlphaPrime;
  PerturbGroup group = PerturbGroup::kAUBall;
  int perturbations = 0;
  double max_log_ratio = 0;
  double p99_log_ratio = 0;
  // kUiPerp with alpha_tilde: ratios checked against E101 kappa_i(x)^2.
  int bound_checks = 0;
  int bound_violations = 0;
  std::string to_json() const;
};

struct LipschitzOptions {
  int per_point = 4;
  double radius = 1.0;
};

// kHiBall acts on the lattice and supports ht and bq_alpha only.
LogLipschitzReport check_log_lipschitz(HeightKind kind, PerturbGroup group,
                                       const heights::HeightParams& params,
                                       const heights::CalibratedConstants& consts,
                                       const SampleSpec& spec,
                                       const LipschitzOptions& opts = {});

struct BetaOptions {
  int N = 8;
  double delta = 0.1;
  double h = 0;  // must be >= E101 e^t
  // Added to -lambda^2 + C6 delta; log(8 C5) / t when negative.
  double slack = -1;
};

struct BetaSample {
  std::vector<double> tau;
  std::vector<double> xi;
  int i = 0;
  double alpha_tilde = 0;
  double integral = 0;
  double error = 0;
  bool vacuous = false;  // beta vanished on every quadrature node
  double rate = 0;       // log(integral / alpha_tilde) / (N t); 0 when vacuous
  double bound = 0;
  bool pass = false;
};

struct BetaReport {
  BetaOptions options;
  SampleSpec sample;
  double slack = 0;
  double C6 = 0;
  std::vector<BetaSample> samples;
  int nonvacuous = 0;
  int passed = 0;          // nonvacuous samples within the bound
  double pass_rate = 0;    // passed / nonvacuous (1 when all vacuous)
  std::string to_json() const;
};

BetaReport check_beta_contraction(const heights::HeightParams& params,
                                  const heights::CalibratedConstants& consts,
                                  const SampleSpec& spec, const BetaOptions& opts);

// C6 making every nonvacuous rate satisfy r <= -lambda^2 + C6 delta + slack.
ConstantFit fit_c6(const BetaReport& report, double lambda);

struct PsiOptions {
  int N = 2;
  double delta = 0.3;
  double h = 1;
  double C7 = 1;
  int resolution = 8;      // midpoint nodes per horospherical coordinate
  bool inductive = true;   // also integrate psi at 2N (N <= 4 only)
};

struct PsiReport {
  PsiOptions options;
  double integral = 0;         // over u in [-1/2, 1/2]^{d-1}
  double integral_2N = 0;
  double ratio = 0;            // integral_2N / integral, 0 when undefined
  double M = 0;                // product over i of alpha~_i(x)
  double bound = 0;            // E101 e^{C11 N t} M
  bool pass = false;
  int gate_passed = 0;         // nodes where the Omega density gate passed
  int empty_min_sets = 0;
  std::string to_json() const;
};

PsiReport check_psi_bounds(const heights::HeightParams& params,
                           const heights::CalibratedConstants& consts,
                           const flows::XPrimePoint& x, const PsiOptions& opts);

// Smallest C11 >= 0 with integral <= E101 e^{C11 N t} M on every report.
double fit_c11(const std::vector<PsiReport>& reports, double E101, double t);

// max over (N, delta, i) with nonempty E of max(r, 1/r),
// r = |E_{N,delta,i}| / (delta^d |D_N|).
double fit_c7(int d, const std::vector<int>& Ns, const std::vector<double>& deltas);

struct CoveringRow {
  int N = 0;
  double resolution = 0;  // e^{-2 d N t}
  std::int64_t cells = 0;
  std::int64_t M = 0;     // member cells
  double slope = 0;       // log M / (2 d N t); 0 when M = 0
};

struct CoveringSeries {
  double h = 0;
  double delta = 0;
  double t = 0;
  std::vector<CoveringRow> rows;
  std::string to_csv() const;
};

struct CoveringOptions {
  std::int64_t max_cells = 10'000'000;
};

// For each N, covers xi in [-1/2, 1/2]^{d-1} with cells of side
// 2 e^{-2 d N t}; a cell centre xi is a member when the fraction of
// tau in D_N (step t) with min_i alpha~_i(a_tau a_base u(xi)) >= h is at least
// 1 - delta^d / (4 C7). One series per h; membership is computed once.
// Throws GridBudgetExceeded past max_cells.
std::vector<CoveringSeries> covering_counts(const std::vector<double>& base_tau,
                                            const std::vector<int>& Ns, double delta,
                                            const std::vector<double>& hs, double t,
                                            const heights::HeightParams& params,
                                            const heights::CalibratedConstants& consts,
                                            double C7, const CoveringOptions& opts = {});

}  // namespace latflow::contraction

#endif  // LATFLOW_CONTRACTION_HPP_
