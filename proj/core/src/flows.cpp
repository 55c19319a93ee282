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


#include "latflow/flows.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "latflow/errors.hpp"

namespace latflow::flows {

namespace {

constexpr double kBoundarySlack = 1e-12;

bool le(double a, double b) { return a <= b + kBoundarySlack * std::max(1.0, std::fabs(b)); }
bool lt(double a, double b) { return a < b - kBoundarySlack * std::max(1.0, std::fabs(b)); }

void check_index(const XPrimePoint& x, int i) {
  if (i < 0 || i >= x.dim() - 1) fail(ErrorKind::kInvalidArgument, "direction index out of range");
}

HighReal sum_high(const std::vector<double>& tau) {
  HighReal s = 0;
  for (double v : tau) s += HighReal(v);
  return s;
}

// All m in Z_{>0}^{d-1} with max m + sum m <= bound.
void collect_D(int dims, int bound, std::vector<int>& cur, int sum, int mx,
               std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == dims) {
    out.push_back(cur);
    return;
  }
  for (int m = 1;; ++m) {
    // Remaining coordinates contribute at least 1 each.
    int rest = dims - static_cast<int>(cur.size()) - 1;
    if (std::max(mx, m) + sum + m + rest > bound) break;
    cur.push_back(m);
    collect_D(dims, bound, cur, sum + m, std::max(mx, m), out);
    cur.pop_back();
  }
}

void check_grid_args(int N, double t, int d) {
  if (N < 1) fail(ErrorKind::kInvalidArgument, "N must be >= 1");
  if (!(t > 0) || !std::isfinite(t)) fail(ErrorKind::kInvalidArgument, "t must be positive");
  if (d < 2 || d > lattice::kMaxDim) fail(ErrorKind::kInvalidArgument, "dimension out of range");
}

}  // namespace

double DiagParam::sum() const { return std::accumulate(tau.begin(), tau.end(), 0.0); }

XPrimePoint XPrimePoint::make(std::vector<double> tau, std::vector<HighReal> xi) {
  if (tau.empty() || tau.size() != xi.size() ||
      static_cast<int>(tau.size()) + 1 > lattice::kMaxDim) {
    fail(ErrorKind::kInvalidArgument, "tau and xi must both have length d-1 with 2 <= d <= 6");
  }
  for (double v : tau) {
    if (!(v > 0) || !std::isfinite(v)) fail(ErrorKind::kInvalidArgument, "tau entries must be > 0");
  }
  for (HighReal& v : xi) {
    if (!std::isfinite(to_double(v))) fail(ErrorKind::kInvalidArgument, "xi must be finite");
    v = wrap_unit(v);
  }
  return XPrimePoint(std::move(tau), std::move(xi));
}

XPrimePoint XPrimePoint::make(std::vector<double> tau, const std::vector<double>& xi) {
  return make(std::move(tau), std::vector<HighReal>(xi.begin(), xi.end()));
}

std::vector<double> XPrimePoint::xi_double() const {
  std::vector<double> out;
  for (HighReal v : xi_) out.push_back(to_double(v));
  return out;
}

double XPrimePoint::sum_tau() const { return to_double(sum_high(tau_)); }

XPrimePoint XPrimePoint::with_core(std::shared_ptr<const lattice::CoreEvaluator> ev) const {
  XPrimePoint y = *this;
  y.core_ = std::move(ev);
  return y;
}

lattice::UnimodularLattice to_lattice(const XPrimePoint& x) {
  const int d = x.dim();
  std::vector<HighReal> scale(d);
  for (int j = 0; j < d - 1; ++j) scale[j] = x.tau()[j];
  scale[d - 1] = -sum_high(x.tau());
  std::vector<HighReal> core(static_cast<size_t>(d) * d, 0);
  for (int r = 0; r < d; ++r) core[r * d + r] = 1;
  for (int r = 0; r < d - 1; ++r) core[r * d + d - 1] = x.xi()[r];
  auto L = lattice::UnimodularLattice::row_scaled(std::move(scale), std::move(core));
  return x.core_evaluator() ? L.with_evaluator(x.core_evaluator()) : L;
}

XPrimePoint act_diag(const DiagParam& sigma, const XPrimePoint& x) {
  if (sigma.tau.size() != x.tau().size()) fail(ErrorKind::kInvalidArgument, "sigma length");
  std::vector<double> tau = x.tau();
  for (size_t j = 0; j < tau.size(); ++j) {
    tau[j] += sigma.tau[j];
    if (!(tau[j] > 0)) fail(ErrorKind::kLeavesSlice, "a_sigma x leaves the slice (tau_j <= 0)");
  }
  return XPrimePoint::make(std::move(tau), x.xi()).with_core(x.core_evaluator());
}

XPrimePoint act_horo_i(HighReal s, int i, const XPrimePoint& x) {
  check_index(x, i);
  std::vector<HighReal> xi = x.xi();
  xi[i] += s * hexp(-(HighReal(x.tau()[i]) + sum_high(x.tau())));
  return XPrimePoint::make(x.tau(), std::move(xi));
}

XPrimePoint act_horo_i(double s, int i, const XPrimePoint& x) {
  return act_horo_i(HighReal(s), i, x);
}

XPrimePoint act_horo(const std::vector<double>& s, const XPrimePoint& x) {
  if (s.size() != x.tau().size()) fail(ErrorKind::kInvalidArgument, "s length");
  // The u_i commute, so the order is irrelevant.
  XPrimePoint y = x;
  for (size_t j = 0; j < s.size(); ++j) y = act_horo_i(s[j], static_cast<int>(j), y);
  return y;
}

lattice::UnimodularLattice phi_i(const XPrimePoint& x, int i) {
  check_index(x, i);
  HighReal T = sum_high(x.tau());
  return lattice::UnimodularLattice::row_scaled({T, -T}, {1, x.xi()[i], 0, 1});
}

double kappa_i(const XPrimePoint& x, int i) {
  check_index(x, i);
  return to_double(hexp(sum_high(x.tau()) - HighReal(x.tau()[i])));
}

std::vector<double> TauGrid::tau(std::size_t j) const {
  std::vector<double> out;
  for (int m : points.at(j)) out.push_back(m * t);
  return out;
}

TauGrid make_D_N(int N, double t, int d) {
  check_grid_args(N, t, d);
  TauGrid g{N, t, d, {}, false};
  std::vector<int> cur;
  collect_D(d - 1, 2 * d * N, cur, 0, 0, g.points);
  g.empty_set = g.points.empty();
  return g;
}

TauGrid make_E(int N, double delta, int i, double t, int d) {
  if (!(delta > 0 && delta < 1)) fail(ErrorKind::kInvalidArgument, "delta must lie in (0, 1)");
  if (i < 0 || i >= d - 1) fail(ErrorKind::kInvalidArgument, "direction index out of range");
  TauGrid D = make_D_N(N, t, d);
  TauGrid g{N, t, d, {}, false};
  const double r = delta * N;
  for (auto& m : D.points) {
    double s = 0;
    for (int j = 0; j < d - 1; ++j) {
      double c = m[j] - (j == i ? static_cast<double>(d) * N : 0.0);
      s += c * c;
    }
    if (le(s, r * r)) g.points.push_back(m);
  }
  g.empty_set = g.points.empty();
  return g;
}

TauGrid make_Ehat(int N, double delta, int i, double t, int d) {
  if (!(delta > 0 && delta < 1)) fail(ErrorKind::kInvalidArgument, "delta must lie in (0, 1)");
  if (i < 0 || i >= d - 1) fail(ErrorKind::kInvalidArgument, "direction index out of range");
  TauGrid D = make_D_N(N, t, d);
  TauGrid g{N, t, d, {}, false};
  const double lo = (d / 2.0 - delta) * N;
  const double hi = (d - delta / 2) * N;
  const double r = delta / d * N;
  for (auto& m : D.points) {
    if (!(lt(lo, m[i]) && le(m[i], hi))) continue;
    double s = 0;
    for (int j = 0; j < d - 1; ++j) {
      if (j != i) s += static_cast<double>(m[j]) * m[j];
    }
    if (le(s, r * r)) g.points.push_back(m);
  }
  g.empty_set = g.points.empty();
  return g;
}

XPrimePoint sample_xprime(int d, const SampleSpec& spec, Rng& rng) {
  if (!(spec.tau_min > 0 && spec.tau_max >= spec.tau_min)) {
    fail(ErrorKind::kInvalidArgument, "need 0 < tau_min <= tau_max");
  }
  std::vector<double> tau(d - 1), xi(d - 1);
  for (int j = 0; j < d - 1; ++j) tau[j] = uniform(rng, spec.tau_min, spec.tau_max);
  for (int j = 0; j < d - 1; ++j) xi[j] = uniform(rng, -0.5, 0.5);
  return XPrimePoint::make(std::move(tau), xi);
}

}  // namespace latflow::flows
