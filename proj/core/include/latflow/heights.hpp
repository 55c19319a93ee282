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


// Height functions on the space of lattices and on the slice X':
// Benoist-Quint functions phi_{i,k,eps} and alpha_{i,eps}, the 2D height
// ht_lambda, the auxiliary alpha'_i, the modified alpha~_i, and the dynamical
// heights J, beta, Omega and psi built from them.
//
// Direction indices are 0-based (see flows.hpp).

#ifndef LATFLOW_HEIGHTS_HPP_
#define LATFLOW_HEIGHTS_HPP_

#include <string>
#include <utility>
#include <vector>

#include "latflow/flows.hpp"
#include "latflow/lattice.hpp"

namespace latflow::heights {

// Stand-in for +infinity when a monomial has vanishing V_{i,k,1} part.
inline constexpr double kBlowUp = 1e300;

struct HeightParams {
  double lambda = 0.9;
  double t = 4.0;
  double epsilon = 0.3;
  // Initial search radius for alpha when no lower bar is known.
  double enum_bound = 1.0;
  int quad_resolution = 64;
  lattice::EnumerationLimits limits{};

  // Throws InvalidArgument unless 0 < lambda < 1, 0 < epsilon < 1, t > 0.
  void validate() const;
};

struct CalibratedConstants {
  double lambda = 0.9;
  double t = 4.0;
  double epsilon = 0.3;
  int d = 3;
  double C = 0;       // subharmonic constant for alpha (sample max)
  double C_ht = 0;    // subharmonic constant for ht_lambda (sample max)
  double C_p99 = 0;
  double C_ht_p99 = 0;
  double E101 = 1;
  std::vector<std::pair<double, double>> D_breakpoints;  // (h, D(h)), h ascending
  double C4 = 1;   // log-Lipschitz constant of alpha' on the A+U ball (p99)
  double C5 = 1;   // log-Lipschitz constant of alpha~ on the A_i+ U_i ball (p99)
  double C4_max = 1;
  double C5_max = 1;
  double C6 = 0;   // beta contraction slack
  double C7 = 1;   // |E| / (delta^d |D_N|) two-sided bound
  double C11 = 1;  // exponent in the trivial psi bound
  unsigned long long seed = 0;
  int samples = 0;
  bool growth_warning = false;

  // Piecewise-linear through the breakpoints; beyond the last breakpoint
  // D grows proportionally to h; below the first it is the first value.
  double D(double h) const;
  // Recomputes E101 = max(5 C, 5 C_ht, eps^{-(d-1)}).
  void assemble_E101();

  std::string to_json() const;
  // Throws Parse on malformed input or missing required fields.
  static CalibratedConstants from_json(const std::string& text);
};

// Parts of the wedge coordinates on V_{i,k,0} (|S & {i, d-1}| in {0, 2}) and
// V_{i,k,1} (|S & {i, d-1}| = 1), in subset order.
struct WedgeProjection {
  std::vector<double> v0;
  std::vector<double> v1;
};
WedgeProjection project_wedge(const lattice::WedgeElement& w, int i);

struct HeightValue {
  double value = 0;
  bool blow_up = false;  // value is kBlowUp
  bool empty = false;    // no monomial passed the gate (value 0)
  int degree = 0;        // degree k of the maximizing monomial, 0 if none
};

// eps^{k(d-k)} |pi_1 v|^{-lambda} if |pi_0 v| < eps^{k(d-k)}, else 0.
HeightValue bq_phi(const lattice::WedgeElement& w, int i, const HeightParams& params);

// alpha_{i,eps}(L): max of bq_phi over primitive monomials of every degree.
// Degrees 1 and d-1 are searched exactly; 2 <= k <= d-2 uses the
// generator-level wedge enumeration. With floor > 0 the search only looks
// for monomials with phi >= floor; the value is exact whenever it is >=
// floor and is otherwise only known to be < floor.
HeightValue bq_alpha(const lattice::UnimodularLattice& L, int i, const HeightParams& params,
                     double floor = 0);

// lambda_1(L2)^{-lambda}.
double ht2(const lattice::UnimodularLattice& L2, double lambda);

// kappa_i(x) ht_lambda(phi_i(x)).
double alpha_prime(const flows::XPrimePoint& x, int i, double lambda);

struct TildeValue {
  double value = 1;
  double bq = 0;          // alpha_{i,eps}(x), exact when >= 1
  double prime = 0;       // alpha'_i(x), only when the min branch was taken
  bool min_branch = false;
  bool blow_up = false;
};

// max(alpha, 1) if alpha <= E101 kappa_i(x), else min(alpha, alpha'_i(x)).
TildeValue alpha_tilde_detail(const flows::XPrimePoint& x, int i, const HeightParams& params,
                              const CalibratedConstants& consts);
double alpha_tilde(const flows::XPrimePoint& x, int i, const HeightParams& params,
                   const CalibratedConstants& consts);

// {j in 1..N : alpha~_i(a_{j t e_i} x) >= h}.
std::vector<int> j_set(const flows::XPrimePoint& x, int i, double h, int N,
                       const HeightParams& params, const CalibratedConstants& consts);

// alpha~_i(a_{N t e_i} x) if |J| >= (1 - delta) N, else 0.
double beta(const flows::XPrimePoint& x, int N, double delta, int i, double h,
            const HeightParams& params, const CalibratedConstants& consts);

// Points of D_N with min_i alpha~_i(a_tau x) >= h.
flows::TauGrid omega_set(const flows::XPrimePoint& x, int N, double h,
                         const HeightParams& params, const CalibratedConstants& consts);

struct PsiValue {
  double value = 0;
  bool gate_passed = false;
  bool empty_min_set = false;  // gate passed but some E_i & Omega was empty
  double omega_fraction = 0;
};

// prod_i min over E_{N,delta,i} & Omega of alpha~_i(a_tau x) when
// |Omega| / |D_N| >= 1 - delta^d / (4 C7), else 0.
PsiValue psi(const flows::XPrimePoint& x, int N, double delta, double h,
             const HeightParams& params, const CalibratedConstants& consts, double C7);

}  // namespace latflow::heights

#endif  // LATFLOW_HEIGHTS_HPP_
