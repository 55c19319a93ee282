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


// Diagonal and horospherical actions on the slice X' = A+ U Gamma, where a
// point is a_tau u(xi) Z^d with tau in (0, inf)^{d-1} and xi in
// [-1/2, 1/2)^{d-1}; the 2D fibre map phi_i; and the tau grids D_N, E, E-hat.
//
// Direction indices are 0-based: i in [0, d-2] refers to the i-th coordinate
// of tau and xi, and the last ambient coordinate is d-1.

#ifndef LATFLOW_FLOWS_HPP_
#define LATFLOW_FLOWS_HPP_

#include <memory>
#include <vector>

#include "latflow/lattice.hpp"
#include "latflow/numeric.hpp"
#include "latflow/random.hpp"

namespace latflow::flows {

// a_tau = diag(e^{tau_1}, ..., e^{tau_{d-1}}, e^{-sum tau}).
struct DiagParam {
  std::vector<double> tau;

  double sum() const;
  int dim() const { return static_cast<int>(tau.size()) + 1; }
};

class XPrimePoint {
 public:
  // Throws InvalidArgument unless every tau_j > 0, both vectors have the
  // same length >= 1 and all entries are finite. xi is wrapped.
  static XPrimePoint make(std::vector<double> tau, std::vector<HighReal> xi);
  static XPrimePoint make(std::vector<double> tau, const std::vector<double>& xi);

  int dim() const { return static_cast<int>(tau_.size()) + 1; }
  const std::vector<double>& tau() const { return tau_; }
  const std::vector<HighReal>& xi() const { return xi_; }
  std::vector<double> xi_double() const;
  double sum_tau() const;

  // Attaches an evaluator for the core u(xi) (see lattice::CoreEvaluator).
  // It must match the wrapped xi. Kept by act_diag, dropped when xi moves.
  XPrimePoint with_core(std::shared_ptr<const lattice::CoreEvaluator> ev) const;
  const std::shared_ptr<const lattice::CoreEvaluator>& core_evaluator() const { return core_; }

 private:
  XPrimePoint(std::vector<double> tau, std::vector<HighReal> xi)
      : tau_(std::move(tau)), xi_(std::move(xi)) {}

  std::vector<double> tau_;
  std::vector<HighReal> xi_;
  std::shared_ptr<const lattice::CoreEvaluator> core_;
};

// a_tau u(xi) as a row-scaled lattice; column d-1 of u(xi) is (xi, 1).
lattice::UnimodularLattice to_lattice(const XPrimePoint& x);

// (tau + sigma, xi). Throws LeavesSlice if some entry is <= 0.
XPrimePoint act_diag(const DiagParam& sigma, const XPrimePoint& x);

// u_i(s) x with u_i(s) = I + s E_{i,d-1}: xi_i += s e^{-(tau_i + sum tau)},
// wrapped into [-1/2, 1/2).
XPrimePoint act_horo_i(double s, int i, const XPrimePoint& x);
XPrimePoint act_horo_i(HighReal s, int i, const XPrimePoint& x);
// u(s) x for a full (d-1)-vector s.
XPrimePoint act_horo(const std::vector<double>& s, const XPrimePoint& x);

// diag(e^{sum tau}, e^{-sum tau}) [[1, xi_i], [0, 1]] Z^2.
lattice::UnimodularLattice phi_i(const XPrimePoint& x, int i);

// e^{sum tau - tau_i}.
double kappa_i(const XPrimePoint& x, int i);

// Finite subsets of (tZ_{>0})^{d-1}, stored as integer multiples of t.
struct TauGrid {
  int N = 0;
  double t = 0;
  int d = 0;
  std::vector<std::vector<int>> points;  // lexicographic
  bool empty_set = false;

  std::size_t size() const { return points.size(); }
  std::vector<double> tau(std::size_t j) const;
};

// D_N = {tau in (tN)^{d-1} : max tau + sum tau <= 2 d N t}.
TauGrid make_D_N(int N, double t, int d);
// E_{N,delta,i} = {tau in D_N : |tau - d N t e_i| <= delta N t}.
TauGrid make_E(int N, double delta, int i, double t, int d);
// E-hat: tau in D_N with (d/2 - delta) N t < tau_i <= (d - delta/2) N t and
// |tau - tau_i e_i| <= (delta/d) N t.
TauGrid make_Ehat(int N, double delta, int i, double t, int d);

// Harness measure on X': xi uniform on the box, tau_j uniform on
// [tau_min, tau_max].
struct SampleSpec {
  double tau_min = 0.1;
  double tau_max = 3.0;
};

XPrimePoint sample_xprime(int d, const SampleSpec& spec, Rng& rng);

}  // namespace latflow::flows

#endif  // LATFLOW_FLOWS_HPP_
