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

// Diophantine front end: Littlewood products, multiplicative singularity,
// membership in R_d, escape of mass along the diagonal flow, Dirichlet
// witnesses from continued fractions, and inhomogeneous grid scans.
//
// ||x|| denotes the distance from x to the nearest integer. Direction indices
// are 0-based.

#ifndef LATFLOW_DIOPHANTINE_HPP_
#define LATFLOW_DIOPHANTINE_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "latflow/flows.hpp"
#include "latflow/heights.hpp"
#include "latflow/lattice.hpp"
#include "latflow/quadratic.hpp"

namespace latflow::diophantine {

// Window minimum of a Littlewood product together with its record series.
struct DioReport {
  std::int64_t q0 = 1;
  std::int64_t Q = 1;
  // (q, value) each time the running minimum strictly drops.
  std::vector<std::pair<std::int64_t, double>> records;
  double min_value = 0;
  std::int64_t argmin = 0;
  bool exact_zero = false;  // some product vanishes exactly (exact inputs)
};

// min over 1 <= q <= Q of q prod ||q xi_i||. Stops at the first exact zero.
DioReport littlewood_min(const std::vector<Number>& xi, std::int64_t Q);

// min over q0 <= q <= Q of q prod ||q xi_i - theta_i||.
DioReport inhom_littlewood_min(const std::vector<Number>& xi, const std::vector<Number>& theta,
                               std::int64_t Q, std::int64_t q0 = 1);

struct ThetaScan {
  int resolution = 64;
  double max_value = 0;  // max over the theta grid of the window minimum
  std::vector<double> argmax_theta;
  std::vector<double> window_min;  // row-major over the grid, theta_j = k_j / resolution
};

// Window minima of inhom_littlewood_min over theta in (Z / resolution)^{d-1}
// modulo 1. Cost is resolution^{d-1} (Q - q0 + 1).
ThetaScan inhom_theta_scan(const std::vector<Number>& xi, std::int64_t q0, std::int64_t Q,
                           int resolution = 64);

struct RdMembership {
  bool member = false;
  bool exact = false;       // decided by exact arithmetic
  double confidence = 1.0;  // 1 for the exact path
  int span_dim = 0;         // dim span_Q(1, xi) (exact path; heuristic estimate)
  // Integer relations c with c_0 + sum c_j xi_j = 0 (heuristic path).
  std::vector<std::vector<std::int64_t>> relations;
};

struct RdOptions {
  // Relative precision of float inputs; relations are sought among
  // coefficient vectors short enough for this precision to separate them.
  // At least 2^-60.
  double input_precision = 0x1p-52;
};

// dim span_Q(1, xi_1, ..., xi_{d-1}) <= 2. Exact when every entry is exact;
// otherwise a basis-reduction relation search.
RdMembership r_d_membership(const TargetSpec& spec, const RdOptions& opts = {});
RdMembership r_d_membership_heuristic(const std::vector<HighReal>& xi,
                                      const RdOptions& opts = {});

struct DensitySeries {
  std::vector<int> N;            // 1..Nmax
  std::vector<double> density;   // density[k] belongs to N[k]
  // Float inputs were pushed past the depth where float128 coordinates
  // resolve the lattice (exact inputs are evaluated exactly).
  bool precision_limited = false;
};

struct MultWitness {
  std::vector<int> n;
  Int128 q = 0;
};

struct MultSingularReport {
  double epsilon = 0;
  DensitySeries series;
  std::vector<MultWitness> witnesses;  // one per cell that has one, cell order
  int q_scan_cells = 0;                // cells decided by the direct q-scan
};

struct MultOptions {
  lattice::EnumerationLimits limits{};
  // Cells whose enumeration exceeds the budget fall back to scanning
  // q < eps e^{sum n} when that bound is at most this.
  double q_scan_limit = 1e7;
};

// For each N in 1..Nmax, the fraction of n in {1..N}^{d-1} admitting q >= 1
// with ||q xi_i|| <= eps e^{-n_i} for all i and q < eps e^{sum n}.
MultSingularReport mult_singular_density(const std::vector<Number>& xi, double eps, int Nmax,
                                         const MultOptions& opts = {});

// Re-evaluates the witness condition directly.
bool verify_mult_witness(const std::vector<Number>& xi, double eps, const MultWitness& w);

enum class GateKind { kShortVector, kHeight };

// K_eps = {lambda_1 >= eps} or K_h = {max_i alpha~_i <= h}.
struct Gate {
  GateKind kind = GateKind::kShortVector;
  double value = 0.1;
};

// a_tau u(xi) Z^d; for exact xi the point carries an exact core evaluator.
flows::XPrimePoint exact_point(std::vector<double> tau, const std::vector<Number>& xi);

// For each N in 1..Nmax, 1 - #{tau in {t, .., N t}^{d-1} : a_tau x in K} /
// N^{d-1}, with x = u(xi) Z^d or a given slice point. The height gate needs
// `consts`.
DensitySeries escape_of_mass(const std::vector<Number>& xi, int Nmax, double t,
                             const Gate& gate, const heights::HeightParams& params = {},
                             const heights::CalibratedConstants* consts = nullptr);
DensitySeries escape_of_mass(const flows::XPrimePoint& x, int Nmax, double t, const Gate& gate,
                             const heights::HeightParams& params = {},
                             const heights::CalibratedConstants* consts = nullptr);

struct DaniReport {
  double epsilon = 0;
  double t = 1;
  DensitySeries singular;  // mult_singular_density
  DensitySeries escape;    // escape_of_mass with the short-vector gate
  std::string caveat;
};

DaniReport dani_check(const std::vector<Number>& xi, double eps, int N, double t = 1.0);

struct DirichletWitness {
  Int128 q = 1;
  Int128 p = 0;
  double distance = 0;  // ||q xi0||
  bool exact = false;
  std::vector<Int128> partial_quotients;
  std::vector<Int128> denominators;  // convergent denominators up to q
};

// Last continued-fraction convergent denominator q <= Q; then
// ||q xi0|| < 1 / Q (= 0 when the expansion ends). Exact for inputs in Q
// and Q(sqrt D).
DirichletWitness dirichlet_witness(const Number& xi0, Int128 Q);

// u(xi) Z^d - (theta, 0).
lattice::Grid make_grid_point(const std::vector<Number>& xi, const std::vector<Number>& theta);

enum class PairClass { kRational, kIrrational, kUnknown };
const char* to_string(PairClass c);

// Rational when q xi - theta lies in Z^{d-1} for some integer q; unknown
// unless every entry is exact.
PairClass classify_pair(const std::vector<Number>& xi, const std::vector<Number>& theta);

struct InhomScanReport {
  std::optional<std::vector<double>> first_violation;  // tau
  double violation_norm = 0;
  std::int64_t cells = 0;
  PairClass pair = PairClass::kUnknown;
};

// Scans tau in (t {ceil(T/t), .., Nmax})^{d-1} in lexicographic order and
// reports the first tau whose grid a_tau x-hat meets the open eps-ball.
InhomScanReport inhom_dani_scan(const std::vector<Number>& xi, const std::vector<Number>& theta,
                                double eps, double T, int Nmax, double t,
                                const lattice::EnumerationLimits& limits = {});

}  // namespace latflow::diophantine

#endif  // LATFLOW_DIOPHANTINE_HPP_
