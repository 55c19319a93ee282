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

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "latflow/detail/json_dump.hpp"
#include "latflow/errors.hpp"
#include "latflow/parallel.hpp"

namespace latflow::heights {

namespace {

using lattice::ReducedLattice;
using lattice::UnimodularLattice;

double gate_for(double epsilon, int d, int k) { return std::pow(epsilon, k * (d - k)); }

bool in_v1(const std::vector<int>& S, int i, int d) {
  int hits = 0;
  for (int s : S) hits += (s == i || s == d - 1) ? 1 : 0;
  return hits == 1;
}

struct V1Search {
  bool found = false;
  bool zero = false;
  HighReal n1 = 0;
};

// Minimum of |v_1| over nonzero v in L with |v_0| < g and |v_1| <= b_max,
// where v_1 = (v_i, v_{d-1}) and v_0 holds the other coordinates.
//
// The cylinder {|v_1| <= b, |v_0| < g} sits inside the ellipsoid
// |v_1|^2 + (b/g)^2 |v_0|^2 <= 2 b^2, which is a ball for the lattice with
// the v_0 rows rescaled by b/g. Each round searches that ball and restarts
// with the smaller b as soon as a candidate halves it, so deep-cusp lattices
// with one tiny vector never enumerate its multiples.
V1Search min_v1(const UnimodularLattice& L, int i, double g, HighReal b_max,
                const lattice::EnumerationLimits& limits) {
  const int d = L.dim();
  const HighReal g_h = g;
  const HighReal g2 = g_h * g_h;
  V1Search best;
  HighReal b = b_max;
  std::vector<HighReal> x(d);
  for (int round = 0; round < 1000; ++round) {
    const HighReal log_w = hlog(b) - hlog(g_h);
    std::vector<HighReal> extra(d, 0);
    HighReal mean = 0;
    for (int r = 0; r < d; ++r) {
      if (r != i && r != d - 1) extra[r] = log_w;
      mean += extra[r];
    }
    mean /= d;
    for (HighReal& e : extra) e -= mean;
    const HighReal c = hexp(-mean);
    const double radius = to_double(c * b * hsqrt(HighReal(2)));
    ReducedLattice RL(L.scaled(extra));
    const HighReal b2 = b * b;
    bool restart = false;
    bool complete = RL.search_within(
        radius, limits,
        [&](const std::vector<Int128>& coeffs, const std::vector<HighReal>&, HighReal) {
          L.coordinates(coeffs.data(), x.data());
          HighReal n0 = 0, n1 = 0;
          for (int r = 0; r < d; ++r) {
            if (r == i || r == d - 1) {
              n1 += x[r] * x[r];
            } else {
              n0 += x[r] * x[r];
            }
          }
          if (n0 >= g2 || n1 > b2) return true;
          if (best.found && n1 >= best.n1 * best.n1) return true;
          best.found = true;
          best.n1 = hsqrt(n1);
          if (n1 == 0) {
            best.zero = true;
            return false;
          }
          if (4 * n1 < b2) {
            restart = true;
            return false;
          }
          return true;
        });
    if (best.zero || complete || !restart) return best;
    b = best.n1;
  }
  fail(ErrorKind::kNumericRange, "constrained search did not settle");
}

HighReal b_for(double g, double M, double lambda) {
  // g |v1|^{-lambda} >= M  <=>  |v1| <= (g / M)^{1 / lambda}.
  return hexp((hlog(HighReal(g)) - hlog(HighReal(M))) / HighReal(lambda));
}

double phi_value(double g, HighReal n1, double lambda) {
  return to_double(hexp(hlog(HighReal(g)) - HighReal(lambda) * hlog(n1)));
}

flows::XPrimePoint shifted(const flows::XPrimePoint& x, int i, double amount) {
  flows::DiagParam s{std::vector<double>(x.tau().size(), 0.0)};
  s.tau[i] = amount;
  return flows::act_diag(s, x);
}

}  // namespace

void HeightParams::validate() const {
  if (!(lambda > 0 && lambda < 1)) fail(ErrorKind::kInvalidArgument, "lambda must lie in (0, 1)");
  if (!(epsilon > 0 && epsilon < 1)) fail(ErrorKind::kInvalidArgument, "epsilon must lie in (0, 1)");
  if (!(t > 0) || !std::isfinite(t)) fail(ErrorKind::kInvalidArgument, "t must be positive");
  if (!(enum_bound > 0)) fail(ErrorKind::kInvalidArgument, "enum_bound must be positive");
}

double CalibratedConstants::D(double h) const {
  if (D_breakpoints.empty()) fail(ErrorKind::kInvalidArgument, "D table is empty");
  const auto& bp = D_breakpoints;
  if (h <= bp.front().first) return bp.front().second;
  for (size_t j = 1; j < bp.size(); ++j) {
    if (h <= bp[j].first) {
      double w = (h - bp[j - 1].first) / (bp[j].first - bp[j - 1].first);
      return bp[j - 1].second + w * (bp[j].second - bp[j - 1].second);
    }
  }
  return bp.back().second * (h / bp.back().first);
}

void CalibratedConstants::assemble_E101() {
  E101 = std::max({5 * C, 5 * C_ht, std::pow(epsilon, -(d - 1))});
}

std::string CalibratedConstants::to_json() const {
  nlohmann::ordered_json j;
  j["lambda"] = lambda;
  j["t"] = t;
  j["epsilon"] = epsilon;
  j["d"] = d;
  j["C"] = C;
  j["C_ht"] = C_ht;
  j["C_p99"] = C_p99;
  j["C_ht_p99"] = C_ht_p99;
  j["E101"] = E101;
  j["D_breakpoints"] = nlohmann::ordered_json::array();
  for (const auto& [h, D] : D_breakpoints) j["D_breakpoints"].push_back({h, D});
  j["C4"] = C4;
  j["C5"] = C5;
  j["C4_max"] = C4_max;
  j["C5_max"] = C5_max;
  j["C6"] = C6;
  j["C7"] = C7;
  j["C11"] = C11;
  j["seed"] = seed;
  j["samples"] = samples;
  j["growth_warning"] = growth_warning;
  return detail::dump_json(j);
}

CalibratedConstants CalibratedConstants::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorKind::kParse, std::string("calibration JSON: ") + e.what());
  }
  CalibratedConstants c;
  try {
    for (const char* key : {"lambda", "t", "epsilon", "C", "C_ht", "E101", "D_breakpoints"}) {
      if (!j.contains(key)) fail(ErrorKind::kParse, std::string("calibration JSON lacks ") + key);
    }
    c.lambda = j.at("lambda").get<double>();
    c.t = j.at("t").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.C = j.at("C").get<double>();
    c.C_ht = j.at("C_ht").get<double>();
    c.E101 = j.at("E101").get<double>();
    for (const auto& p : j.at("D_breakpoints")) {
      c.D_breakpoints.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    }
    c.d = j.value("d", 3);
    c.C_p99 = j.value("C_p99", c.C);
    c.C_ht_p99 = j.value("C_ht_p99", c.C_ht);
    c.C4 = j.value("C4", 1.0);
    c.C5 = j.value("C5", 1.0);
    c.C4_max = j.value("C4_max", c.C4);
    c.C5_max = j.value("C5_max", c.C5);
    c.C6 = j.value("C6", 0.0);
    c.C7 = j.value("C7", 1.0);
    c.C11 = j.value("C11", 1.0);
    c.seed = j.value("seed", 0ULL);
    c.samples = j.value("samples", 0);
    c.growth_warning = j.value("growth_warning", false);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(ErrorKind::kParse, std::string("calibration JSON: ") + e.what());
  }
  return c;
}

WedgeProjection project_wedge(const lattice::WedgeElement& w, int i) {
  const int d = w.dim;
  if (i < 0 || i >= d - 1) fail(ErrorKind::kInvalidArgument, "direction index out of range");
  auto subsets = lattice::wedge_subsets(d, w.degree);
  WedgeProjection p;
  for (size_t j = 0; j < subsets.size(); ++j) {
    (in_v1(subsets[j], i, d) ? p.v1 : p.v0).push_back(w.coords[j]);
  }
  return p;
}

HeightValue bq_phi(const lattice::WedgeElement& w, int i, const HeightParams& params) {
  WedgeProjection p = project_wedge(w, i);
  const double g = gate_for(params.epsilon, w.dim, w.degree);
  HighReal n0 = 0, n1 = 0;
  for (double v : p.v0) n0 += HighReal(v) * HighReal(v);
  for (double v : p.v1) n1 += HighReal(v) * HighReal(v);
  HeightValue out;
  if (!(n0 < HighReal(g) * HighReal(g))) {
    out.empty = true;
    return out;
  }
  out.degree = w.degree;
  if (n1 == 0) {
    out.value = kBlowUp;
    out.blow_up = true;
    return out;
  }
  out.value = phi_value(g, hsqrt(n1), params.lambda);
  return out;
}

HeightValue bq_alpha(const UnimodularLattice& L, int i, const HeightParams& params,
                     double floor) {
  params.validate();
  const int d = L.dim();
  if (i < 0 || i >= d - 1) fail(ErrorKind::kInvalidArgument, "direction index out of range");
  HeightValue best;
  double M = std::max(0.0, floor);

  std::vector<int> outer = {1};
  if (d - 1 != 1) outer.push_back(d - 1);
  for (int k : outer) {
    const double g = gate_for(params.epsilon, d, k);
    // Degree d-1 monomials correspond to primitive dual vectors w, with
    // coordinates +-w_j on the subset missing j.
    const UnimodularLattice Lk = k == 1 ? L : L.dual();
    V1Search res;
    if (M > 0) {
      res = min_v1(Lk, i, g, b_for(g, M, params.lambda), params.limits);
    } else {
      HighReal b = params.enum_bound;
      for (int grow = 0; grow < 12 && !res.found; ++grow, b *= 2) {
        res = min_v1(Lk, i, g, b, params.limits);
      }
    }
    if (res.zero) {
      best.value = kBlowUp;
      best.blow_up = true;
      best.degree = k;
      return best;
    }
    if (res.found) {
      double v = phi_value(g, res.n1, params.lambda);
      if (v > best.value) {
        best.value = v;
        best.degree = k;
      }
      M = std::max(M, v);
    }
  }

  for (int k = 2; k <= d - 2; ++k) {
    const double g = gate_for(params.epsilon, d, k);
    double bound = params.enum_bound;
    if (M > 0) {
      double b = to_double(b_for(g, M, params.lambda));
      bound = std::sqrt(g * g + b * b);
    }
    for (const auto& w : lattice::enumerate_primitive_wedges(L, k, bound, params.limits)) {
      HeightValue v = bq_phi(w, i, params);
      if (v.blow_up) return v;
      if (v.value > best.value) {
        best.value = v.value;
        best.degree = k;
      }
    }
  }
  best.empty = best.value == 0;
  return best;
}

double ht2(const UnimodularLattice& L2, double lambda) {
  if (L2.dim() != 2) fail(ErrorKind::kInvalidArgument, "ht2 needs a 2D lattice");
  HighReal l1 = lattice::lambda1_2d(L2);
  return to_double(hexp(-HighReal(lambda) * hlog(l1)));
}

double alpha_prime(const flows::XPrimePoint& x, int i, double lambda) {
  HighReal l1 = lattice::lambda1_2d(flows::phi_i(x, i));
  HighReal log_kappa = -HighReal(x.tau()[i]);
  for (double v : x.tau()) log_kappa += HighReal(v);
  return to_double(hexp(log_kappa - HighReal(lambda) * hlog(l1)));
}

TildeValue alpha_tilde_detail(const flows::XPrimePoint& x, int i, const HeightParams& params,
                              const CalibratedConstants& consts) {
  TildeValue out;
  // alpha below 1 maps to 1 on the first branch, so the search may stop at 1.
  HeightValue a = bq_alpha(flows::to_lattice(x), i, params, 1.0);
  out.bq = a.value;
  out.blow_up = a.blow_up;
  const double kappa = flows::kappa_i(x, i);
  if (!a.blow_up && a.value <= consts.E101 * kappa) {
    out.value = std::max(a.value, 1.0);
    return out;
  }
  out.min_branch = true;
  out.prime = alpha_prime(x, i, params.lambda);
  out.value = std::min(a.value, out.prime);
  return out;
}

double alpha_tilde(const flows::XPrimePoint& x, int i, const HeightParams& params,
                   const CalibratedConstants& consts) {
  return alpha_tilde_detail(x, i, params, consts).value;
}

std::vector<int> j_set(const flows::XPrimePoint& x, int i, double h, int N,
                       const HeightParams& params, const CalibratedConstants& consts) {
  if (!(h >= 1)) fail(ErrorKind::kInvalidArgument, "h must be >= 1");
  std::vector<int> out;
  for (int j = 1; j <= N; ++j) {
    if (alpha_tilde(shifted(x, i, j * params.t), i, params, consts) >= h) out.push_back(j);
  }
  return out;
}

double beta(const flows::XPrimePoint& x, int N, double delta, int i, double h,
            const HeightParams& params, const CalibratedConstants& consts) {
  if (!(delta > 0 && delta < 1)) fail(ErrorKind::kInvalidArgument, "delta must lie in (0, 1)");
  if (!(h >= 1)) fail(ErrorKind::kInvalidArgument, "h must be >= 1");
  // Count J while remembering the value at j = N, which beta returns.
  int count = 0;
  double last = 0;
  const double need = (1 - delta) * N;
  for (int j = 1; j <= N; ++j) {
    double v = alpha_tilde(shifted(x, i, j * params.t), i, params, consts);
    if (v >= h) ++count;
    if (j == N) last = v;
    // Stop once even a perfect remainder cannot reach the threshold.
    if (count + (N - j) < need) return 0;
  }
  return count >= need ? last : 0;
}

flows::TauGrid omega_set(const flows::XPrimePoint& x, int N, double h,
                         const HeightParams& params, const CalibratedConstants& consts) {
  if (!(h >= 1)) fail(ErrorKind::kInvalidArgument, "h must be >= 1");
  flows::TauGrid D = flows::make_D_N(N, params.t, x.dim());
  std::vector<char> keep(D.size(), 0);
  parallel_for(D.size(), [&](std::size_t j) {
    flows::XPrimePoint y = flows::act_diag({D.tau(j)}, x);
    bool ok = true;
    for (int i = 0; i < x.dim() - 1 && ok; ++i) ok = alpha_tilde(y, i, params, consts) >= h;
    keep[j] = ok ? 1 : 0;
  });
  flows::TauGrid out{D.N, D.t, D.d, {}, false};
  for (std::size_t j = 0; j < D.size(); ++j)
    if (keep[j]) out.points.push_back(D.points[j]);
  out.empty_set = out.points.empty();
  return out;
}

PsiValue psi(const flows::XPrimePoint& x, int N, double delta, double h,
             const HeightParams& params, const CalibratedConstants& consts, double C7) {
  if (!(C7 > 0)) fail(ErrorKind::kInvalidArgument, "C7 must be positive");
  const int d = x.dim();
  flows::TauGrid D = flows::make_D_N(N, params.t, d);
  flows::TauGrid Omega = omega_set(x, N, h, params, consts);
  PsiValue out;
  out.omega_fraction = static_cast<double>(Omega.size()) / static_cast<double>(D.size());
  out.gate_passed = out.omega_fraction >= 1 - std::pow(delta, d) / (4 * C7);
  if (!out.gate_passed) return out;
  double product = 1;
  for (int i = 0; i < d - 1; ++i) {
    flows::TauGrid E = flows::make_E(N, delta, i, params.t, d);
    double mn = -1;
    for (const auto& m : E.points) {
      if (std::find(Omega.points.begin(), Omega.points.end(), m) == Omega.points.end()) continue;
      std::vector<double> tau;
      for (int v : m) tau.push_back(v * params.t);
      double a = alpha_tilde(flows::act_diag({tau}, x), i, params, consts);
      if (mn < 0 || a < mn) mn = a;
    }
    if (mn < 0) {
      out.empty_min_set = true;
      out.value = 0;
      return out;
    }
    product *= mn;
  }
  out.value = product;
  return out;
}

}  // namespace latflow::heights
