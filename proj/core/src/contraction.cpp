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

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "json.hpp"
#include "latflow/detail/csv.hpp"
#include "latflow/detail/json_dump.hpp"
#include "latflow/errors.hpp"
#include "latflow/parallel.hpp"

namespace latflow::contraction {

using flows::XPrimePoint;
using heights::CalibratedConstants;
using heights::HeightParams;
using heights::kBlowUp;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kMaxSplits = 3;

bool blown(double v) { return !std::isfinite(v) || v >= kBlowUp; }

std::vector<double> unit_e(int n, int i, double v) {
  std::vector<double> e(static_cast<size_t>(n), 0.0);
  e[static_cast<size_t>(i)] = v;
  return e;
}

// Stable per-point stream, independent of the thread schedule.
Rng point_rng(std::uint64_t seed, std::size_t k) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  return Rng(seq);
}

// Midpoint of [a, b]; blown-up midpoints are split up to kMaxSplits times.
// Returns NaN for a piece that stays infinite.
double stratum(const std::function<double(double)>& g, double a, double b, int depth,
               QuadResult& q) {
  const double v = g(0.5 * (a + b));
  ++q.evaluations;
  if (!blown(v)) return v;
  if (depth >= kMaxSplits) return std::numeric_limits<double>::quiet_NaN();
  ++q.subdivided;
  const double m = 0.5 * (a + b);
  return 0.5 * (stratum(g, a, m, depth + 1, q) + stratum(g, m, b, depth + 1, q));
}

std::vector<double> strata(const std::function<double(double)>& g, int n, QuadResult& q) {
  std::vector<double> v(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double a = -0.5 + static_cast<double>(k) / n;
    v[static_cast<size_t>(k)] = stratum(g, a, a + 1.0 / n, 0, q);
  }
  return v;
}

Json tau_xi_json(const std::vector<double>& tau, const std::vector<double>& xi) {
  Json j;
  j["tau"] = tau;
  j["xi"] = xi;
  return j;
}

Json sample_spec_json(const SampleSpec& s) {
  Json j;
  j["d"] = s.d;
  j["count"] = s.count;
  j["seed"] = s.seed;
  j["tau_min"] = s.tau.tau_min;
  j["tau_max"] = s.tau.tau_max;
  j["law"] = s.law == SampleLaw::kUniform ? "uniform"
             : s.law == SampleLaw::kCusp  ? "cusp"
                                          : "diagonal";
  return j;
}

// 2x2 matrix exponential of a traceless X = [[a, b], [c, -a]].
Eigen::Matrix2d expm_sl2(double a, double b, double c) {
  Eigen::Matrix2d X;
  X << a, b, c, -a;
  const double disc = a * a + b * c;  // X^2 = disc I
  double ch, sh;
  if (disc > 0) {
    const double r = std::sqrt(disc);
    ch = std::cosh(r);
    sh = std::sinh(r) / r;
  } else if (disc < 0) {
    const double r = std::sqrt(-disc);
    ch = std::cos(r);
    sh = std::sin(r) / r;
  } else {
    ch = 1;
    sh = 1;
  }
  return ch * Eigen::Matrix2d::Identity() + sh * X;
}

}  // namespace

const char* to_string(HeightKind kind) {
  switch (kind) {
    case HeightKind::kHt: return "ht";
    case HeightKind::kBqAlpha: return "bq_alpha";
    case HeightKind::kAlphaPrime: return "alpha_prime";
    case HeightKind::kAlphaTilde: return "alpha_tilde";
  }
  return "?";
}

HeightKind parse_height_kind(const std::string& text) {
  if (text == "ht") return HeightKind::kHt;
  if (text == "bq_alpha" || text == "alpha") return HeightKind::kBqAlpha;
  if (text == "alpha_prime") return HeightKind::kAlphaPrime;
  if (text == "alpha_tilde") return HeightKind::kAlphaTilde;
  fail(ErrorKind::kInvalidArgument, "unknown height kind: " + text);
}

const char* to_string(PerturbGroup group) {
  switch (group) {
    case PerturbGroup::kHiBall: return "Hi";
    case PerturbGroup::kAUBall: return "AU";
    case PerturbGroup::kAiUiBall: return "AiUi";
    case PerturbGroup::kUiPerp: return "Uiperp";
  }
  return "?";
}

PerturbGroup parse_perturb_group(const std::string& text) {
  if (text == "Hi") return PerturbGroup::kHiBall;
  if (text == "AU") return PerturbGroup::kAUBall;
  if (text == "AiUi") return PerturbGroup::kAiUiBall;
  if (text == "Uiperp") return PerturbGroup::kUiPerp;
  fail(ErrorKind::kInvalidArgument, "unknown perturbation group: " + text);
}

Integrand height_integrand(HeightKind kind, int i, const HeightParams& params,
                           const CalibratedConstants* consts) {
  switch (kind) {
    case HeightKind::kHt:
      return [i, lambda = params.lambda](const XPrimePoint& y) {
        return y.dim() == 2 ? heights::ht2(flows::to_lattice(y), lambda)
                            : heights::ht2(flows::phi_i(y, i), lambda);
      };
    case HeightKind::kBqAlpha:
      return [i, params](const XPrimePoint& y) {
        const auto v = heights::bq_alpha(flows::to_lattice(y), i, params);
        return v.blow_up ? kBlowUp : v.value;
      };
    case HeightKind::kAlphaPrime:
      return [i, lambda = params.lambda](const XPrimePoint& y) {
        return heights::alpha_prime(y, i, lambda);
      };
    case HeightKind::kAlphaTilde:
      require(consts != nullptr, "alpha_tilde needs calibrated constants");
      return [i, params, c = *consts](const XPrimePoint& y) {
        return heights::alpha_tilde(y, i, params, c);
      };
  }
  fail(ErrorKind::kInvalidArgument, "height kind");
}

QuadResult quad_average(const std::function<double(double)>& g, int resolution) {
  require(resolution >= 1, "quadrature resolution must be >= 1");
  QuadResult q;
  std::vector<double> coarse = strata(g, resolution, q);
  std::vector<double> fine = strata(g, 2 * resolution, q);
  double cap = 0;
  for (const auto* v : {&coarse, &fine}) {
    for (double x : *v) {
      if (std::isfinite(x)) cap = std::max(cap, x);
    }
  }
  auto mean = [&](std::vector<double>& v) {
    double s = 0;
    for (double& x : v) {
      if (!std::isfinite(x)) {
        x = cap;
        q.capped = true;
      }
      s += x;
    }
    return s / static_cast<double>(v.size());
  };
  q.coarse = mean(coarse);
  q.estimate = mean(fine);
  // Half the spread of the three nodes in each coarse stratum, times its
  // width: bounds the midpoint error of integrands monotone on the halves.
  double spread = 0;
  for (int k = 0; k < resolution; ++k) {
    const double a = coarse[static_cast<size_t>(k)];
    const double b = fine[static_cast<size_t>(2 * k)];
    const double c = fine[static_cast<size_t>(2 * k + 1)];
    spread += std::max({a, b, c}) - std::min({a, b, c});
  }
  q.error = std::max(std::abs(q.estimate - q.coarse), 0.5 * spread / resolution);
  return q;
}

QuadResult quad_average_u(const Integrand& f, const XPrimePoint& x, int i, double t,
                          int resolution) {
  require(resolution >= 64, "quadrature resolution must be >= 64");
  require(i >= 0 && i + 1 < x.dim(), "direction index out of range");
  const flows::DiagParam a{unit_e(x.dim() - 1, i, t)};
  return quad_average(
      [&](double s) { return f(flows::act_diag(a, flows::act_horo_i(s, i, x))); }, resolution);
}

std::vector<SamplePoint> draw_samples(const SampleSpec& spec) {
  require(spec.d >= 2, "d must be >= 2");
  require(spec.tau.tau_min > 0 && spec.tau.tau_max >= spec.tau.tau_min, "tau range");
  const int n = spec.d - 1;
  Rng rng(spec.seed);
  std::vector<SamplePoint> out;
  out.reserve(spec.count);
  for (std::size_t k = 0; k < spec.count; ++k) {
    const int i = static_cast<int>(k % static_cast<std::size_t>(n));
    switch (spec.law) {
      case SampleLaw::kUniform:
        out.push_back({flows::sample_xprime(spec.d, spec.tau, rng), i});
        break;
      case SampleLaw::kCusp: {
        std::vector<double> tau(static_cast<size_t>(n));
        for (double& v : tau) v = uniform(rng, spec.tau.tau_min, spec.tau.tau_max);
        double sum = 0;
        for (double v : tau) sum += v;
        const int q = 1 + static_cast<int>(rng() % 4);
        std::vector<HighReal> xi(static_cast<size_t>(n));
        for (int j = 0; j < n; ++j) {
          const int p = static_cast<int>(rng() % static_cast<std::uint64_t>(q));
          xi[static_cast<size_t>(j)] =
              HighReal(p) / q + HighReal(uniform(rng, -1, 1)) * hexp(-(HighReal(tau[j]) + sum));
        }
        out.push_back({XPrimePoint::make(std::move(tau), std::move(xi)), i});
        break;
      }
      case SampleLaw::kDiagonal: {
        std::vector<double> tau(static_cast<size_t>(n));
        for (int j = 0; j < n; ++j) {
          tau[static_cast<size_t>(j)] = j == i ? uniform(rng, spec.tau.tau_min, spec.tau.tau_max)
                                               : uniform(rng, 0.5, 2.0);
        }
        out.push_back({XPrimePoint::make(std::move(tau), std::vector<double>(n, 0.0)), i});
        break;
      }
    }
  }
  return out;
}

ConstantFit fit_constant(std::vector<double> values) {
  ConstantFit fit;
  if (values.empty()) return fit;
  std::sort(values.begin(), values.end());
  fit.max = values.back();
  const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(values.size())));
  fit.p99 = values[std::max<std::size_t>(rank, 1) - 1];
  return fit;
}

CalibratedConstants calibrate(const HeightParams& params, const SampleSpec& spec) {
  params.validate();
  require(spec.count >= 100, "calibration needs at least 100 sample points");
  const double shrink = std::exp(-params.lambda * params.t);
  require(shrink < 1, "degenerate lambda t");

  CalibratedConstants c;
  c.lambda = params.lambda;
  c.t = params.t;
  c.epsilon = params.epsilon;
  c.d = spec.d;
  c.seed = spec.seed;
  c.samples = static_cast<int>(spec.count);

  const auto pts = draw_samples(spec);
  const std::size_t n = pts.size();
  std::vector<double> h_alpha(n), int_alpha(n), h_ht(n), int_ht(n);
  parallel_for(n, [&](std::size_t k) {
    const auto& [x, i] = pts[k];
    const Integrand fa = height_integrand(HeightKind::kBqAlpha, i, params);
    const Integrand fh = height_integrand(HeightKind::kHt, i, params);
    h_alpha[k] = fa(x);
    int_alpha[k] = quad_average_u(fa, x, i, params.t, params.quad_resolution).estimate;
    h_ht[k] = fh(x);
    int_ht[k] = quad_average_u(fh, x, i, params.t, params.quad_resolution).estimate;
  });

  std::vector<double> ex_alpha, ex_ht;
  std::vector<std::pair<double, double>> by_height;  // (alpha(x), integral / alpha(x))
  for (std::size_t k = 0; k < n; ++k) {
    if (!blown(h_alpha[k]) && !blown(int_alpha[k])) {
      ex_alpha.push_back(std::max(0.0, int_alpha[k] - shrink * h_alpha[k]));
      if (h_alpha[k] > 0) by_height.emplace_back(h_alpha[k], int_alpha[k] / h_alpha[k]);
    }
    if (!blown(h_ht[k]) && !blown(int_ht[k])) {
      ex_ht.push_back(std::max(0.0, int_ht[k] - shrink * h_ht[k]));
    }
  }
  require(!ex_alpha.empty() && !ex_ht.empty(), "calibration sample has no finite heights");
  const ConstantFit fa = fit_constant(ex_alpha);
  const ConstantFit fh = fit_constant(ex_ht);
  c.C = fa.max;
  c.C_p99 = fa.p99;
  c.C_ht = fh.max;
  c.C_ht_p99 = fh.p99;
  c.assemble_E101();

  // High points must contract on average, otherwise no additive constant
  // can absorb the excess.
  std::sort(by_height.begin(), by_height.end());
  if (by_height.size() >= 3) {
    const std::size_t lo = by_height.size() - by_height.size() / 3;
    std::vector<double> ratios;
    for (std::size_t k = lo; k < by_height.size(); ++k) ratios.push_back(by_height[k].second);
    std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2, ratios.end());
    const double median = ratios[ratios.size() / 2];
    if (median >= 1) {
      fail(ErrorKind::kCalibrationUnstable,
           "integral/height median " + std::to_string(median) + " >= 1 on the top tercile");
    }
    // Excess concentrated on high points hints that C grows with the height.
    double top = 0, rest = 0;
    for (std::size_t k = 0; k < by_height.size(); ++k) {
      const double ex = std::max(0.0, by_height[k].second - shrink) * by_height[k].first;
      (k >= lo ? top : rest) = std::max(k >= lo ? top : rest, ex);
    }
    c.growth_warning = top > 1 && top > 2 * rest;
  }

  // Log-Lipschitz constants and the D table, from per-point perturbations.
  constexpr int kPerPoint = 4;
  std::vector<std::vector<double>> log4(n), log5(n);
  std::vector<std::vector<std::pair<double, double>>> jumps(n);
  parallel_for(n, [&](std::size_t k) {
    const auto& [x, i] = pts[k];
    const int m = x.dim() - 1;
    Rng rng = point_rng(spec.seed, k);
    const double a0 = heights::alpha_prime(x, i, params.lambda);
    const double t0 = heights::alpha_tilde(x, i, params, c);
    for (int r = 0; r < kPerPoint; ++r) {
      std::vector<double> sigma(static_cast<size_t>(m)), s(static_cast<size_t>(m));
      double norm = 0;
      for (double& v : sigma) {
        v = uniform01(rng);
        norm += v * v;
      }
      norm = std::sqrt(norm);
      const double scale = uniform01(rng);
      for (double& v : sigma) v *= norm > 0 ? scale / norm : 0;
      for (double& v : s) v = uniform(rng, -1, 1);
      const XPrimePoint y = flows::act_diag({sigma}, flows::act_horo(s, x));
      const double a1 = heights::alpha_prime(y, i, params.lambda);
      if (a0 > 0 && a1 > 0 && !blown(a0) && !blown(a1)) log4[k].push_back(std::abs(std::log(a1 / a0)));
      const double t1 = heights::alpha_tilde(y, i, params, c);
      if (!blown(t0) && !blown(t1)) jumps[k].emplace_back(t0, t1);

      const XPrimePoint z = flows::act_diag({unit_e(m, i, uniform01(rng))},
                                            flows::act_horo_i(uniform(rng, -1, 1), i, x));
      const double t2 = heights::alpha_tilde(z, i, params, c);
      if (t0 > 0 && t2 > 0 && !blown(t0) && !blown(t2)) log5[k].push_back(std::abs(std::log(t2 / t0)));
    }
  });
  std::vector<double> l4, l5;
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t k = 0; k < n; ++k) {
    l4.insert(l4.end(), log4[k].begin(), log4[k].end());
    l5.insert(l5.end(), log5[k].begin(), log5[k].end());
    pairs.insert(pairs.end(), jumps[k].begin(), jumps[k].end());
  }
  const ConstantFit f4 = fit_constant(l4);
  const ConstantFit f5 = fit_constant(l5);
  c.C4 = std::exp(f4.p99);
  c.C4_max = std::exp(f4.max);
  c.C5 = std::exp(f5.p99);
  c.C5_max = std::exp(f5.max);

  // D(h): 1.5 times the largest perturbed alpha~ seen from a point of
  // height <= h, at the deciles of the starting heights.
  std::sort(pairs.begin(), pairs.end());
  if (!pairs.empty()) {
    double run = 0;
    std::size_t next = 0;
    for (int q = 1; q <= 10; ++q) {
      const std::size_t idx = std::min(pairs.size() - 1, (pairs.size() * q + 9) / 10 - 1);
      const double level = pairs[idx].first;
      while (next < pairs.size() && pairs[next].first <= level) run = std::max(run, pairs[next++].second);
      const double D = 1.5 * std::max(level, run);
      if (c.D_breakpoints.empty() || level > c.D_breakpoints.back().first) {
        c.D_breakpoints.emplace_back(level, std::max(D, c.D_breakpoints.empty() ? 0.0 : c.D_breakpoints.back().second));
      }
    }
  }

  std::vector<int> Ns;
  for (int N = 1; N <= 8; ++N) Ns.push_back(N);
  std::vector<double> deltas;
  for (int k = 1; k <= 9; ++k) deltas.push_back(0.1 * k);
  c.C7 = fit_c7(spec.d, Ns, deltas);
  return c;
}

std::string ContractionReport::to_json() const {
  Json j;
  j["inequality"] = inequality;
  j["sample"] = sample_spec_json(sample);
  j["resolution"] = resolution;
  Json cs = Json::object();
  for (const auto& [k, v] : constants) cs[k] = v;
  j["constants"] = cs;
  j["applicable"] = applicable;
  j["passed"] = passed;
  j["pass_rate"] = pass_rate;
  j["max_refinement_error"] = max_refinement_error;
  j["samples"] = Json::array();
  for (const auto& s : samples) {
    Json e = tau_xi_json(s.tau, s.xi);
    e["i"] = s.i + 1;
    e["input_height"] = s.input_height;
    e["integral"] = s.integral;
    e["error"] = s.error;
    e["bound"] = s.bound;
    e["applicable"] = s.applicable;
    e["pass"] = s.pass;
    e["capped"] = s.capped;
    j["samples"].push_back(std::move(e));
  }
  return detail::dump_json(j);
}

ContractionReport check_subharmonic(HeightKind kind, const HeightParams& params,
                                    const CalibratedConstants& consts, const SampleSpec& spec,
                                    const CheckOptions& opts) {
  params.validate();
  const bool use_max = opts.constants == ConstantChoice::kMax;
  const double C = use_max ? consts.C : consts.C_p99;
  const double C_ht = use_max ? consts.C_ht : consts.C_ht_p99;
  const double shrink = std::exp(-params.lambda * params.t);
  const double high = consts.E101 * std::exp(params.t);
  const double contract = 2 * std::exp(-params.lambda * params.lambda * params.t);

  ContractionReport rep;
  rep.inequality = to_string(kind);
  rep.sample = spec;
  rep.resolution = params.quad_resolution;
  switch (kind) {
    case HeightKind::kHt: rep.constants = {{"C_ht", C_ht}}; break;
    case HeightKind::kBqAlpha: rep.constants = {{"C", C}}; break;
    case HeightKind::kAlphaPrime: rep.constants = {{"C_ht", C_ht}}; break;
    case HeightKind::kAlphaTilde: rep.constants = {{"E101", consts.E101}}; break;
  }

  const auto pts = draw_samples(spec);
  rep.samples.resize(pts.size());
  parallel_for(pts.size(), [&](std::size_t k) {
    const auto& [x, i] = pts[k];
    SampleResult& r = rep.samples[k];
    r.tau = x.tau();
    r.xi = x.xi_double();
    r.i = i;
    const Integrand f = height_integrand(kind, i, params, &consts);
    r.input_height = f(x);
    if (blown(r.input_height)) {
      r.applicable = false;
      return;
    }
    switch (kind) {
      case HeightKind::kHt: r.bound = shrink * r.input_height + C_ht; break;
      case HeightKind::kBqAlpha: r.bound = shrink * r.input_height + C; break;
      case HeightKind::kAlphaPrime:
        r.bound = shrink * r.input_height + C_ht * flows::kappa_i(x, i);
        break;
      case HeightKind::kAlphaTilde:
        r.applicable = r.input_height >= high;
        r.bound = contract * r.input_height;
        break;
    }
    if (!r.applicable) return;
    const QuadResult q = quad_average_u(f, x, i, params.t, params.quad_resolution);
    r.integral = q.estimate;
    r.error = q.error;
    r.capped = q.capped;
    r.pass = r.integral <= r.bound + r.error;
  });
  for (const auto& r : rep.samples) {
    if (!r.applicable) continue;
    ++rep.applicable;
    if (r.pass) ++rep.passed;
    rep.max_refinement_error = std::max(rep.max_refinement_error, r.error);
  }
  rep.pass_rate = rep.applicable == 0 ? 1.0 : static_cast<double>(rep.passed) / rep.applicable;
  return rep;
}

std::string LogLipschitzReport::to_json() const {
  Json j;
  j["kind"] = to_string(kind);
  j["group"] = to_string(group);
  j["perturbations"] = perturbations;
  j["max_log_ratio"] = max_log_ratio;
  j["p99_log_ratio"] = p99_log_ratio;
  j["bound_checks"] = bound_checks;
  j["bound_violations"] = bound_violations;
  return detail::dump_json(j);
}

LogLipschitzReport check_log_lipschitz(HeightKind kind, PerturbGroup group,
                                       const HeightParams& params,
                                       const CalibratedConstants& consts, const SampleSpec& spec,
                                       const LipschitzOptions& opts) {
  params.validate();
  require(opts.per_point >= 1, "per_point must be >= 1");
  require(opts.radius >= 0, "radius must be >= 0");
  require(group != PerturbGroup::kHiBall || kind == HeightKind::kBqAlpha,
          "the H_i ball acts on lattices: only bq_alpha is supported");
  require(group != PerturbGroup::kUiPerp || spec.d >= 3, "U_i-perp needs d >= 3");

  const auto pts = draw_samples(spec);
  std::vector<std::vector<double>> logs(pts.size());
  std::vector<int> checks(pts.size(), 0), violations(pts.size(), 0);
  parallel_for(pts.size(), [&](std::size_t k) {
    const auto& [x, i] = pts[k];
    const int m = x.dim() - 1;
    const double rad = opts.radius;
    Rng rng = point_rng(spec.seed ^ 0x5bd1e995ULL, k);
    const Integrand f = height_integrand(kind, i, params, &consts);
    const double f0 = f(x);
    const double tie = consts.E101 * std::pow(flows::kappa_i(x, i), 2);
    for (int r = 0; r < opts.per_point; ++r) {
      double f1 = 0;
      switch (group) {
        case PerturbGroup::kHiBall: {
          double a, b, c;
          do {
            a = uniform(rng, -1, 1);
            b = uniform(rng, -1, 1);
            c = uniform(rng, -1, 1);
          } while (2 * a * a + b * b + c * c > 1);
          const Eigen::Matrix2d e = expm_sl2(rad * a, rad * b, rad * c);
          lattice::Matrix g = lattice::Matrix::Identity(m + 1, m + 1);
          const int idx[2] = {i, m};
          for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q) g(idx[p], idx[q]) = e(p, q);
          const auto v = heights::bq_alpha(flows::to_lattice(x).transformed(g), i, params);
          f1 = v.blow_up ? kBlowUp : v.value;
          break;
        }
        case PerturbGroup::kAUBall: {
          std::vector<double> sigma(static_cast<size_t>(m)), s(static_cast<size_t>(m));
          double norm = 0;
          for (double& v : sigma) {
            v = uniform01(rng);
            norm += v * v;
          }
          norm = std::sqrt(norm);
          const double scale = rad * uniform01(rng);
          for (double& v : sigma) v *= norm > 0 ? scale / norm : 0;
          for (double& v : s) v = uniform(rng, -rad, rad);
          f1 = f(flows::act_diag({sigma}, flows::act_horo(s, x)));
          break;
        }
        case PerturbGroup::kAiUiBall: {
          const double sig = rad * uniform01(rng);
          const double s = uniform(rng, -rad, rad);
          f1 = f(flows::act_diag({unit_e(m, i, sig)}, flows::act_horo_i(s, i, x)));
          break;
        }
        case PerturbGroup::kUiPerp: {
          int j = static_cast<int>(rng() % static_cast<std::uint64_t>(m - 1));
          if (j >= i) ++j;
          f1 = f(flows::act_horo_i(uniform(rng, -rad, rad), j, x));
          break;
        }
      }
      if (f0 <= 0 || f1 <= 0 || blown(f0) || blown(f1)) continue;
      const double lr = std::abs(std::log(f1 / f0));
      logs[k].push_back(lr);
      if (group == PerturbGroup::kUiPerp && kind == HeightKind::kAlphaTilde) {
        ++checks[k];
        if (std::exp(lr) > tie) ++violations[k];
      }
    }
  });
  LogLipschitzReport rep;
  rep.kind = kind;
  rep.group = group;
  std::vector<double> all;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    all.insert(all.end(), logs[k].begin(), logs[k].end());
    rep.bound_checks += checks[k];
    rep.bound_violations += violations[k];
  }
  rep.perturbations = static_cast<int>(all.size());
  const ConstantFit fit = fit_constant(all);
  rep.max_log_ratio = fit.max;
  rep.p99_log_ratio = fit.p99;
  return rep;
}

std::string BetaReport::to_json() const {
  Json j;
  j["N"] = options.N;
  j["delta"] = options.delta;
  j["h"] = options.h;
  j["slack"] = slack;
  j["C6"] = C6;
  j["sample"] = sample_spec_json(sample);
  j["nonvacuous"] = nonvacuous;
  j["passed"] = passed;
  j["pass_rate"] = pass_rate;
  j["samples"] = Json::array();
  for (const auto& s : samples) {
    Json e = tau_xi_json(s.tau, s.xi);
    e["i"] = s.i + 1;
    e["alpha_tilde"] = s.alpha_tilde;
    e["integral"] = s.integral;
    e["error"] = s.error;
    e["vacuous"] = s.vacuous;
    e["rate"] = s.rate;
    e["bound"] = s.bound;
    e["pass"] = s.pass;
    j["samples"].push_back(std::move(e));
  }
  return detail::dump_json(j);
}

BetaReport check_beta_contraction(const HeightParams& params, const CalibratedConstants& consts,
                                  const SampleSpec& spec, const BetaOptions& opts) {
  params.validate();
  require(opts.N >= 1, "N must be >= 1");
  require(opts.delta > 0 && opts.delta < 1, "delta must lie in (0, 1)");
  require(opts.h >= consts.E101 * std::exp(params.t), "h must be >= E101 e^t");

  BetaReport rep;
  rep.options = opts;
  rep.sample = spec;
  rep.C6 = consts.C6;
  rep.slack = opts.slack < 0 ? std::log(8 * consts.C5) / params.t : opts.slack;
  const double exponent = -params.lambda * params.lambda + consts.C6 * opts.delta + rep.slack;
  const double Nt = opts.N * params.t;

  const auto pts = draw_samples(spec);
  rep.samples.resize(pts.size());
  parallel_for(pts.size(), [&](std::size_t k) {
    const auto& [x, i] = pts[k];
    BetaSample& b = rep.samples[k];
    b.tau = x.tau();
    b.xi = x.xi_double();
    b.i = i;
    b.bound = exponent;
    b.alpha_tilde = heights::alpha_tilde(x, i, params, consts);
    const QuadResult q = quad_average(
        [&](double s) {
          return heights::beta(flows::act_horo_i(s, i, x), opts.N, opts.delta, i, opts.h, params,
                               consts);
        },
        params.quad_resolution);
    b.integral = q.estimate;
    b.error = q.error;
    b.vacuous = q.estimate == 0 && q.coarse == 0;
    if (b.vacuous) {
      b.pass = true;
      return;
    }
    b.rate = std::log(b.integral / b.alpha_tilde) / Nt;
    b.pass = b.integral <= b.alpha_tilde * std::exp(exponent * Nt) + b.error;
  });
  for (const auto& b : rep.samples) {
    if (b.vacuous) continue;
    ++rep.nonvacuous;
    if (b.pass) ++rep.passed;
  }
  rep.pass_rate = rep.nonvacuous == 0 ? 1.0 : static_cast<double>(rep.passed) / rep.nonvacuous;
  return rep;
}

ConstantFit fit_c6(const BetaReport& report, double lambda) {
  std::vector<double> v;
  for (const auto& b : report.samples) {
    if (b.vacuous) continue;
    v.push_back(std::max(0.0, (b.rate + lambda * lambda - report.slack) / report.options.delta));
  }
  return fit_constant(std::move(v));
}

std::string PsiReport::to_json() const {
  Json j;
  j["N"] = options.N;
  j["delta"] = options.delta;
  j["h"] = options.h;
  j["C7"] = options.C7;
  j["resolution"] = options.resolution;
  j["integral"] = integral;
  j["integral_2N"] = integral_2N;
  j["ratio"] = ratio;
  j["M"] = M;
  j["bound"] = bound;
  j["pass"] = pass;
  j["gate_passed"] = gate_passed;
  j["empty_min_sets"] = empty_min_sets;
  return detail::dump_json(j);
}

namespace {

struct PsiIntegral {
  double mean = 0;
  int gate = 0;
  int empty = 0;
};

PsiIntegral integrate_psi(const HeightParams& params, const CalibratedConstants& consts,
                          const XPrimePoint& x, int N, const PsiOptions& opts) {
  const int m = x.dim() - 1;
  const int res = opts.resolution;
  std::size_t nodes = 1;
  for (int j = 0; j < m; ++j) nodes *= static_cast<std::size_t>(res);
  std::vector<heights::PsiValue> vals(nodes);
  parallel_for(nodes, [&](std::size_t k) {
    std::vector<double> s(static_cast<size_t>(m));
    std::size_t r = k;
    for (int j = 0; j < m; ++j) {
      s[static_cast<size_t>(j)] = -0.5 + (static_cast<double>(r % res) + 0.5) / res;
      r /= static_cast<std::size_t>(res);
    }
    vals[k] = heights::psi(flows::act_horo(s, x), N, opts.delta, opts.h, params, consts, opts.C7);
  });
  PsiIntegral out;
  for (const auto& v : vals) {
    out.mean += v.value;
    if (v.gate_passed) ++out.gate;
    if (v.empty_min_set) ++out.empty;
  }
  out.mean /= static_cast<double>(nodes);
  return out;
}

}  // namespace

PsiReport check_psi_bounds(const HeightParams& params, const CalibratedConstants& consts,
                           const XPrimePoint& x, const PsiOptions& opts) {
  params.validate();
  require(opts.N >= 1, "N must be >= 1");
  require(opts.delta > 0 && opts.delta < 1, "delta must lie in (0, 1)");
  require(opts.resolution >= 1, "resolution must be >= 1");
  PsiReport rep;
  rep.options = opts;
  const PsiIntegral a = integrate_psi(params, consts, x, opts.N, opts);
  rep.integral = a.mean;
  rep.gate_passed = a.gate;
  rep.empty_min_sets = a.empty;
  rep.M = 1;
  for (int i = 0; i + 1 < x.dim(); ++i) rep.M *= heights::alpha_tilde(x, i, params, consts);
  rep.bound = consts.E101 * std::exp(consts.C11 * opts.N * params.t) * rep.M;
  rep.pass = rep.integral <= rep.bound;
  if (opts.inductive && opts.N <= 4) {
    rep.integral_2N = integrate_psi(params, consts, x, 2 * opts.N, opts).mean;
    rep.ratio = rep.integral > 0 ? rep.integral_2N / rep.integral : 0;
  }
  return rep;
}

double fit_c11(const std::vector<PsiReport>& reports, double E101, double t) {
  double c = 0;
  for (const auto& r : reports) {
    if (r.integral <= 0 || r.M <= 0) continue;
    c = std::max(c, std::log(r.integral / (E101 * r.M)) / (r.options.N * t));
  }
  return c;
}

double fit_c7(int d, const std::vector<int>& Ns, const std::vector<double>& deltas) {
  require(d >= 2, "d must be >= 2");
  double c = 1;
  for (int N : Ns) {
    const double D = static_cast<double>(flows::make_D_N(N, 1.0, d).size());
    for (double delta : deltas) {
      for (int i = 0; i + 1 < d; ++i) {
        const double E = static_cast<double>(flows::make_E(N, delta, i, 1.0, d).size());
        if (E == 0) continue;
        const double r = E / (std::pow(delta, d) * D);
        c = std::max({c, r, 1 / r});
      }
    }
  }
  return c;
}

std::string CoveringSeries::to_csv() const {
  std::string out = "N,resolution,M,slope\n";
  for (const auto& r : rows) {
    out += std::to_string(r.N) + ',' + detail::format_csv_double(r.resolution) + ',' +
           std::to_string(r.M) + ',' + detail::format_csv_double(r.slope) + '\n';
  }
  return out;
}

std::vector<CoveringSeries> covering_counts(const std::vector<double>& base_tau,
                                            const std::vector<int>& Ns, double delta,
                                            const std::vector<double>& hs, double t,
                                            const HeightParams& params,
                                            const CalibratedConstants& consts, double C7,
                                            const CoveringOptions& opts) {
  require(!base_tau.empty(), "base tau must be nonempty");
  require(!hs.empty(), "need at least one h");
  require(delta > 0 && delta < 1, "delta must lie in (0, 1)");
  require(t > 0, "t must be > 0");
  require(C7 > 0, "C7 must be > 0");
  const int m = static_cast<int>(base_tau.size());
  const int d = m + 1;
  const double h_min = *std::min_element(hs.begin(), hs.end());

  std::vector<CoveringSeries> out(hs.size());
  for (std::size_t a = 0; a < hs.size(); ++a) {
    out[a].h = hs[a];
    out[a].delta = delta;
    out[a].t = t;
  }
  for (int N : Ns) {
    require(N >= 1, "N must be >= 1");
    const double spacing = 2 * std::exp(-2.0 * d * N * t);
    const auto per_dim = static_cast<std::int64_t>(std::ceil(1.0 / spacing));
    std::int64_t cells = 1;
    for (int j = 0; j < m; ++j) {
      if (cells > opts.max_cells / per_dim) {
        fail(ErrorKind::kGridBudgetExceeded, "covering grid at N=" + std::to_string(N) +
                                                 " exceeds " + std::to_string(opts.max_cells) +
                                                 " cells");
      }
      cells *= per_dim;
    }
    const flows::TauGrid D = flows::make_D_N(N, t, d);
    const auto allowed = static_cast<std::size_t>(
        std::floor(static_cast<double>(D.size()) * std::pow(delta, d) / (4 * C7) + 1e-12));

    // Per cell and h: number of tau in D_N outside Omega_h, i.e. with
    // min_i alpha~_i(a_tau x) < h.
    std::vector<std::vector<std::size_t>> fails(static_cast<size_t>(cells));
    parallel_for(static_cast<size_t>(cells), [&](std::size_t c) {
      std::vector<double> xi(static_cast<size_t>(m));
      std::size_t r = c;
      for (int j = 0; j < m; ++j) {
        xi[static_cast<size_t>(j)] =
            -0.5 + (static_cast<double>(r % per_dim) + 0.5) / static_cast<double>(per_dim);
        r /= static_cast<std::size_t>(per_dim);
      }
      const XPrimePoint x = XPrimePoint::make(base_tau, xi);
      std::vector<std::size_t> f(hs.size(), 0);
      std::size_t below_min = 0;
      for (std::size_t p = 0; p < D.size(); ++p) {
        const XPrimePoint y = flows::act_diag({D.tau(p)}, x);
        double v = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m && v >= h_min; ++i) {
          v = std::min(v, heights::alpha_tilde(y, i, params, consts));
        }
        for (std::size_t a = 0; a < hs.size(); ++a) {
          if (v < hs[a]) ++f[a];
        }
        if (v < h_min && ++below_min > allowed) break;  // not a member for any h
      }
      fails[c] = std::move(f);
    });
    for (std::size_t a = 0; a < hs.size(); ++a) {
      CoveringRow row;
      row.N = N;
      row.resolution = std::exp(-2.0 * d * N * t);
      row.cells = cells;
      for (const auto& f : fails) {
        if (f[a] <= allowed) ++row.M;
      }
      row.slope = row.M > 0 ? std::log(static_cast<double>(row.M)) / (2.0 * d * N * t) : 0;
      out[a].rows.push_back(row);
    }
  }
  return out;
}

}  // namespace latflow::contraction
