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


// latflow: command-line surface over the latflow library.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "latflow/contraction.hpp"
#include "latflow/detail/csv.hpp"
#include "latflow/detail/json_dump.hpp"
#include "latflow/diophantine.hpp"
#include "latflow/errors.hpp"
#include "latflow/flows.hpp"
#include "latflow/heights.hpp"
#include "latflow/lattice.hpp"
#include "latflow/quadratic.hpp"
#include "run_config.hpp"

namespace latflow::cli {
namespace {

using Json = nlohmann::ordered_json;
namespace ct = latflow::contraction;
namespace dio = latflow::diophantine;
using detail::format_csv_double;

constexpr const char* kGrammar = R"(Number grammar (xi, theta; whitespace ignored):
  expr    := term (('+' | '-') term)*
  term    := factor (('*' | '/') factor)*
  factor  := '-' factor | primary
  primary := INTEGER | DECIMAL | 'sqrt' INTEGER | 'sqrt' '(' expr ')'
           | 'phi' | 'wrap' '(' expr ')' | '(' expr ')'
  Integers, p/q and a+b*sqrtD/c stay exact; a DECIMAL makes the value a
  float. phi = (sqrt5-1)/2, wrap(x) = x - floor(x + 1/2). Vectors are
  comma-separated; commas inside parentheses do not split.

Config file (--config FILE): key=value lines, '#' comments. Keys are long
option names without dashes (lambda=0.9, N=8, xi=sqrt2-1,sqrt3-1). Flags
given on the command line override the file.

Exit codes: 0 success or INFO, 1 FAIL or runtime error, 2 config or
validation error, 3 enumeration or grid budget exceeded.
Environment: LATFLOW_THREADS caps worker threads.)";

Json parse_json(const std::string& text) { return Json::parse(text); }

std::string dump(const Json& j) { return detail::dump_json(j) + "\n"; }

heights::CalibratedConstants load_constants(const RunConfig& cfg) {
  if (cfg.calibration.empty()) throw ConfigError("--calibration FILE is required");
  std::ifstream in(cfg.calibration, std::ios::binary);
  if (!in) throw ConfigError("cannot read calibration file '" + cfg.calibration + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return heights::CalibratedConstants::from_json(ss.str());
  } catch (const Error& e) {
    throw ConfigError(cfg.calibration + ": " + e.what());
  }
}

// Command-line values win, then the calibration file, then the defaults.
heights::HeightParams make_params(const RunConfig& cfg, const heights::CalibratedConstants* c,
                                  double t_default = 4.0) {
  heights::HeightParams p;
  p.lambda = cfg.lambda.value_or(c ? c->lambda : 0.9);
  p.t = cfg.t.value_or(c ? c->t : t_default);
  p.epsilon = cfg.epsilon.value_or(c ? c->epsilon : 0.3);
  if (cfg.resolution) p.quad_resolution = *cfg.resolution;
  try {
    p.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return p;
}

void require_json(const RunConfig& cfg, const std::string& command) {
  if (cfg.csv()) throw ConfigError(command + " writes JSON only");
}

std::vector<dio::Number> parse_numbers(const std::string& text, const std::string& what) {
  if (text.empty()) throw ConfigError("--" + what + " is required");
  try {
    return dio::parse_vector(text);
  } catch (const Error& e) {
    throw ConfigError("--" + what + ": " + e.what());
  }
}

Json numbers_json(const std::vector<dio::Number>& v) {
  Json out = Json::array();
  for (const auto& x : v) {
    Json e;
    e["value"] = x.to_double();
    if (x.is_exact()) e["exact"] = x.str();
    out.push_back(e);
  }
  return out;
}

Json series_json(const dio::DensitySeries& s) {
  Json j;
  j["N"] = s.N;
  j["density"] = s.density;
  j["precision_limited"] = s.precision_limited;
  return j;
}

std::string series_csv(const dio::DensitySeries& s) {
  std::string out = "N,density\n";
  for (std::size_t k = 0; k < s.N.size(); ++k) {
    out += std::to_string(s.N[k]) + ',' + format_csv_double(s.density[k]) + '\n';
  }
  return out;
}

std::string records_csv(const dio::DioReport& r) {
  std::string out = "q,value\n";
  for (const auto& [q, v] : r.records) out += std::to_string(q) + ',' + format_csv_double(v) + '\n';
  return out;
}

Json dio_json(const dio::DioReport& r) {
  Json j;
  j["q0"] = r.q0;
  j["Q"] = r.Q;
  j["min_value"] = r.min_value;
  j["argmin"] = r.argmin;
  j["exact_zero"] = r.exact_zero;
  Json rec = Json::array();
  for (const auto& [q, v] : r.records) rec.push_back(Json::array({q, v}));
  j["records"] = rec;
  return j;
}

// The summary goes to stderr when the report itself is on stdout.
bool g_report_on_stdout = true;

void summary(const std::string& verdict, const std::string& text) {
  (g_report_on_stdout ? std::cerr : std::cout) << verdict << ' ' << text << '\n';
}

// ---------------------------------------------------------------- heights

struct HeightsArgs {
  std::string point;
  std::string tau;
  std::string xi;
  int i = 1;
};

int run_heights(const RunConfig& cfg, const HeightsArgs& a) {
  const auto consts = load_constants(cfg);
  const auto params = make_params(cfg, &consts);
  std::vector<double> tau;
  std::vector<dio::Number> xi;
  if (!a.point.empty()) {
    if (!a.tau.empty() || !a.xi.empty()) throw ConfigError("use --point or --tau/--xi, not both");
    auto all = parse_numbers(a.point, "point");
    if (all.size() < 2 || all.size() % 2 != 0) {
      throw ConfigError("--point needs tau_1..tau_m,xi_1..xi_m");
    }
    const std::size_t m = all.size() / 2;
    for (std::size_t k = 0; k < m; ++k) tau.push_back(all[k].to_double());
    xi.assign(all.begin() + static_cast<std::ptrdiff_t>(m), all.end());
  } else {
    tau = parse_doubles(a.tau, "tau");
    xi = parse_numbers(a.xi, "xi");
  }
  if (tau.size() != xi.size()) throw ConfigError("tau and xi need the same length");
  const int d = static_cast<int>(tau.size()) + 1;
  if (cfg.d && *cfg.d != d) throw ConfigError("--d disagrees with the point dimension");
  if (a.i < 1 || a.i > d - 1) throw ConfigError("--i must lie in 1.." + std::to_string(d - 1));
  const int i = a.i - 1;

  flows::XPrimePoint x = [&] {
    try {
      return dio::exact_point(tau, xi);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }();
  const auto phi = flows::phi_i(x, i);
  const double kappa = flows::kappa_i(x, i);
  const double l1 = static_cast<double>(lattice::lambda1_2d(phi));
  const double ht = heights::ht2(phi, params.lambda);
  const double aprime = heights::alpha_prime(x, i, params.lambda);
  const auto bq = heights::bq_alpha(flows::to_lattice(x), i, params);
  const auto tilde = heights::alpha_tilde_detail(x, i, params, consts);

  std::string text;
  if (cfg.csv()) {
    std::string head, row;
    for (int k = 0; k < d - 1; ++k) {
      head += "tau" + std::to_string(k + 1) + ',';
      row += format_csv_double(tau[k]) + ',';
    }
    for (int k = 0; k < d - 1; ++k) {
      head += "xi" + std::to_string(k + 1) + ',';
      row += format_csv_double(xi[k].to_double()) + ',';
    }
    head += "i,lambda,epsilon,kappa_i,phi_i_lambda1,ht_lambda,alpha_prime,alpha_bq,alpha_tilde";
    row += std::to_string(a.i);
    for (double v : {params.lambda, params.epsilon, kappa, l1, ht, aprime,
                     bq.blow_up ? HUGE_VAL : bq.value, tilde.blow_up ? HUGE_VAL : tilde.value}) {
      row += ',' + format_csv_double(v);
    }
    text = head + '\n' + row + '\n';
  } else {
    Json j;
    j["tau"] = tau;
    j["xi"] = numbers_json(xi);
    j["i"] = a.i;
    j["lambda"] = params.lambda;
    j["epsilon"] = params.epsilon;
    j["kappa_i"] = kappa;
    j["phi_i_lambda1"] = l1;
    j["ht_lambda"] = ht;
    j["alpha_prime"] = aprime;
    j["alpha_bq"] = bq.blow_up ? Json(nullptr) : Json(bq.value);
    j["alpha_bq_blow_up"] = bq.blow_up;
    j["alpha_bq_degree"] = bq.degree;
    j["alpha_tilde"] = tilde.blow_up ? Json(nullptr) : Json(tilde.value);
    j["alpha_tilde_min_branch"] = tilde.min_branch;
    j["E101"] = consts.E101;
    text = dump(j);
  }
  write_report(cfg.outputPath, text);
  if (!g_report_on_stdout) {
    summary("INFO", "heights alpha_prime=" + fmt(aprime) + " alpha_tilde=" + fmt(tilde.value));
  }
  return 0;
}

// -------------------------------------------------------------- calibrate

struct SampleArgs {
  int count = 0;  // 0: command default
  double tau_min = -1;
  double tau_max = -1;
  std::string law;
};

ct::SampleSpec make_sample(const RunConfig& cfg, const SampleArgs& a, int default_count,
                           ct::SampleLaw default_law, std::uint64_t seed) {
  ct::SampleSpec s;
  s.d = cfg.d.value_or(3);
  if (s.d < 2) throw ConfigError("--d must be >= 2");
  s.count = static_cast<std::size_t>(a.count > 0 ? a.count : default_count);
  s.seed = seed;
  s.law = default_law;
  if (a.law == "uniform") s.law = ct::SampleLaw::kUniform;
  else if (a.law == "cusp") s.law = ct::SampleLaw::kCusp;
  else if (a.law == "diagonal") s.law = ct::SampleLaw::kDiagonal;
  else if (!a.law.empty()) throw ConfigError("--law must be uniform, cusp or diagonal");
  if (a.tau_min >= 0) s.tau.tau_min = a.tau_min;
  if (a.tau_max >= 0) s.tau.tau_max = a.tau_max;
  if (!(s.tau.tau_min > 0 && s.tau.tau_max >= s.tau.tau_min)) {
    throw ConfigError("need 0 < tau-min <= tau-max");
  }
  return s;
}

struct CalibrateArgs {
  SampleArgs sample;
  int fit_c6 = 0;
  int fit_c11 = 0;
  double slack = -1;
};

// Diagonal-law points deep enough in direction i to stay above h along the
// whole N t push.
ct::SampleSpec beta_sample(const RunConfig& cfg, const SampleArgs& a, int N, double t,
                           std::uint64_t seed, int default_count) {
  SampleArgs b = a;
  if (b.law.empty()) b.law = "diagonal";
  if (b.law == "diagonal") {
    if (b.tau_min < 0) b.tau_min = N * t + 8;
    if (b.tau_max < 0) b.tau_max = N * t + 16;
  }
  return make_sample(cfg, b, default_count, ct::SampleLaw::kDiagonal, seed);
}

int run_calibrate(const RunConfig& cfg, const CalibrateArgs& a) {
  require_json(cfg, "calibrate");
  const auto seed = cfg.require_seed("calibrate");
  const auto params = make_params(cfg, nullptr);
  auto spec = make_sample(cfg, a.sample, 200, ct::SampleLaw::kUniform, seed);
  auto consts = ct::calibrate(params, spec);
  if (a.fit_c6 > 0) {
    ct::BetaOptions o;
    o.N = cfg.N.value_or(8);
    o.delta = cfg.delta.value_or(0.1);
    o.h = cfg.h.value_or(1.01 * consts.E101 * std::exp(params.t));
    o.slack = a.slack;
    const auto bs = beta_sample(cfg, a.sample, o.N, params.t, seed + 1, a.fit_c6);
    consts.C6 = ct::fit_c6(ct::check_beta_contraction(params, consts, bs, o), params.lambda).max;
  }
  if (a.fit_c11 > 0) {
    auto ps = spec;
    ps.seed = seed + 2;
    ps.count = static_cast<std::size_t>(a.fit_c11);
    ct::PsiOptions o;
    o.N = cfg.N.value_or(2);
    o.delta = cfg.delta.value_or(0.3);
    o.h = cfg.h.value_or(1.0);
    o.C7 = consts.C7;
    o.resolution = 8;
    o.inductive = false;
    std::vector<ct::PsiReport> reps;
    for (const auto& p : ct::draw_samples(ps)) reps.push_back(ct::check_psi_bounds(params, consts, p.x, o));
    consts.C11 = ct::fit_c11(reps, consts.E101, params.t);
  }
  write_report(cfg.outputPath, consts.to_json());
  summary(consts.growth_warning ? "INFO" : "PASS",
          "calibrate E101=" + fmt(consts.E101) + " C=" + fmt(consts.C) + " C_ht=" +
              fmt(consts.C_ht) + " C4=" + fmt(consts.C4) + " C5=" + fmt(consts.C5) +
              (consts.growth_warning ? " growth_warning" : ""));
  return 0;
}

// ----------------------------------------------------- verify-contraction

struct VerifyArgs {
  SampleArgs sample;
  std::string check = "subharmonic";
  std::string kind = "ht";
  std::string group = "AiUi";
  double min_pass_rate = -1;
  double slack = -1;
  double radius = 1.0;
  int per_point = 4;
};

int verdict(bool pass, const std::string& text) {
  summary(pass ? "PASS" : "FAIL", text);
  return pass ? 0 : kExitFail;
}

int run_verify(const RunConfig& cfg, const VerifyArgs& a) {
  require_json(cfg, "verify-contraction");
  const auto seed = cfg.require_seed("verify-contraction");
  const auto consts = load_constants(cfg);
  const auto params = make_params(cfg, &consts);
  ct::HeightKind kind;
  try {
    kind = ct::parse_height_kind(a.kind);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  if (a.check == "subharmonic") {
    const auto spec = make_sample(cfg, a.sample, 200, ct::SampleLaw::kUniform, seed);
    const auto rep = ct::check_subharmonic(kind, params, consts, spec);
    write_report(cfg.outputPath, rep.to_json() + "\n");
    const double need = a.min_pass_rate >= 0 ? a.min_pass_rate : 0.99;
    if (rep.applicable == 0) {
      summary("INFO", std::string("subharmonic ") + ct::to_string(kind) +
                          " no sample lies in the regime of the bound");
      return 0;
    }
    return verdict(rep.pass_rate >= need,
                   std::string("subharmonic ") + ct::to_string(kind) + " pass_rate=" +
                       fmt(rep.pass_rate) + " (" + std::to_string(rep.passed) + "/" +
                       std::to_string(rep.applicable) + ", need " + fmt(need) + ")");
  }
  if (a.check == "lipschitz") {
    ct::PerturbGroup group;
    try {
      group = ct::parse_perturb_group(a.group);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    const auto spec = make_sample(cfg, a.sample, 200, ct::SampleLaw::kUniform, seed);
    ct::LipschitzOptions o;
    o.radius = a.radius;
    o.per_point = a.per_point;
    const auto rep = ct::check_log_lipschitz(kind, group, params, consts, spec, o);
    write_report(cfg.outputPath, rep.to_json() + "\n");
    const std::string head = std::string("lipschitz ") + ct::to_string(kind) + " " +
                             ct::to_string(group) + " p99_log_ratio=" + fmt(rep.p99_log_ratio);
    if (rep.bound_checks > 0) {
      return verdict(rep.bound_violations == 0,
                     head + " violations=" + std::to_string(rep.bound_violations) + "/" +
                         std::to_string(rep.bound_checks));
    }
    if (kind == ct::HeightKind::kAlphaPrime && group == ct::PerturbGroup::kUiPerp) {
      return verdict(rep.max_log_ratio <= 1e-9, head + " max=" + fmt(rep.max_log_ratio) +
                                                    " (need <= 1e-9)");
    }
    if (kind == ct::HeightKind::kAlphaPrime && group == ct::PerturbGroup::kAUBall) {
      const double lim = std::log(consts.C4_max);
      return verdict(rep.p99_log_ratio <= lim, head + " (need <= log C4_max = " + fmt(lim) + ")");
    }
    if (kind == ct::HeightKind::kAlphaTilde && group == ct::PerturbGroup::kAiUiBall) {
      const double lim = std::log(consts.C5_max);
      return verdict(rep.p99_log_ratio <= lim, head + " (need <= log C5_max = " + fmt(lim) + ")");
    }
    summary("INFO", head);
    return 0;
  }
  if (a.check == "beta") {
    ct::BetaOptions o;
    o.N = cfg.N.value_or(8);
    o.delta = cfg.delta.value_or(0.1);
    o.h = cfg.h.value_or(1.01 * consts.E101 * std::exp(params.t));
    o.slack = a.slack;
    const auto spec = beta_sample(cfg, a.sample, o.N, params.t, seed, 50);
    const auto rep = ct::check_beta_contraction(params, consts, spec, o);
    write_report(cfg.outputPath, rep.to_json() + "\n");
    const double need = a.min_pass_rate >= 0 ? a.min_pass_rate : 0.9;
    if (rep.nonvacuous == 0) {
      summary("INFO", "beta every sample was vacuous");
      return 0;
    }
    return verdict(rep.pass_rate >= need,
                   "beta pass_rate=" + fmt(rep.pass_rate) + " (" + std::to_string(rep.passed) +
                       "/" + std::to_string(rep.nonvacuous) + " nonvacuous, need " + fmt(need) +
                       ")");
  }
  if (a.check == "psi") {
    ct::PsiOptions o;
    o.N = cfg.N.value_or(2);
    o.delta = cfg.delta.value_or(0.3);
    o.h = cfg.h.value_or(1.0);
    o.C7 = consts.C7;
    o.resolution = 8;
    const auto spec = make_sample(cfg, a.sample, 10, ct::SampleLaw::kUniform, seed);
    Json reports = Json::array();
    int passed = 0;
    const auto pts = ct::draw_samples(spec);
    for (const auto& p : pts) {
      const auto r = ct::check_psi_bounds(params, consts, p.x, o);
      passed += r.pass ? 1 : 0;
      reports.push_back(parse_json(r.to_json()));
    }
    Json j;
    j["C11"] = consts.C11;
    j["passed"] = passed;
    j["count"] = pts.size();
    j["reports"] = reports;
    write_report(cfg.outputPath, dump(j));
    return verdict(passed == static_cast<int>(pts.size()),
                   "psi passed=" + std::to_string(passed) + "/" + std::to_string(pts.size()));
  }
  throw ConfigError("--check must be subharmonic, lipschitz, beta or psi");
}

// ------------------------------------------------------------ littlewood

struct LittlewoodArgs {
  std::string xi;
  std::string theta;
  std::int64_t Q = 0;
  std::int64_t q0 = 1;
  bool scan = false;
};

int run_littlewood(const RunConfig& cfg, const LittlewoodArgs& a) {
  const auto xi = parse_numbers(a.xi, "xi");
  if (a.Q < 1) throw ConfigError("--Q must be >= 1");
  const auto rep = dio::littlewood_min(xi, a.Q);
  if (cfg.csv()) {
    write_report(cfg.outputPath, records_csv(rep));
  } else {
    Json j;
    j["xi"] = numbers_json(xi);
    j["report"] = dio_json(rep);
    write_report(cfg.outputPath, dump(j));
  }
  summary("INFO", "littlewood min=" + fmt(rep.min_value) + " at q=" + std::to_string(rep.argmin) +
                      " (Q=" + std::to_string(a.Q) + ")");
  return 0;
}

int run_inhom(const RunConfig& cfg, const LittlewoodArgs& a) {
  const auto xi = parse_numbers(a.xi, "xi");
  if (a.Q < a.q0 || a.q0 < 1) throw ConfigError("need 1 <= q0 <= Q");
  if (a.theta.empty() && !a.scan) throw ConfigError("give --theta, --scan or both");
  if (cfg.csv() && a.theta.empty()) throw ConfigError("CSV output needs --theta");
  Json j;
  j["xi"] = numbers_json(xi);
  std::string line;
  dio::DioReport rep;
  if (!a.theta.empty()) {
    const auto theta = parse_numbers(a.theta, "theta");
    if (theta.size() != xi.size()) throw ConfigError("theta and xi need the same length");
    rep = dio::inhom_littlewood_min(xi, theta, a.Q, a.q0);
    j["theta"] = numbers_json(theta);
    j["report"] = dio_json(rep);
    line = "inhom-littlewood min=" + fmt(rep.min_value) + " at q=" + std::to_string(rep.argmin);
  }
  if (a.scan) {
    if (cfg.thetaGridRes < 1) throw ConfigError("--thetaGridRes must be >= 1");
    const auto s = dio::inhom_theta_scan(xi, a.q0, a.Q, cfg.thetaGridRes);
    Json sj;
    sj["q0"] = a.q0;
    sj["Q"] = a.Q;
    sj["resolution"] = s.resolution;
    sj["max_value"] = s.max_value;
    sj["argmax_theta"] = s.argmax_theta;
    sj["window_min"] = s.window_min;
    j["theta_scan"] = sj;
    if (!line.empty()) line += ' ';
    line += "theta-scan max=" + fmt(s.max_value);
  }
  write_report(cfg.outputPath, cfg.csv() ? records_csv(rep) : dump(j));
  summary("INFO", line);
  return 0;
}

// ------------------------------------------------------- dani, divergence

struct DensityArgs {
  std::string xi;
  std::string theta;
  double T = -1;
  std::string series;
};

double last_density(const dio::DensitySeries& s) {
  return s.density.empty() ? 0.0 : s.density.back();
}

int run_dani(const RunConfig& cfg, const DensityArgs& a) {
  const auto xi = parse_numbers(a.xi, "xi");
  const double eps = cfg.epsilon.value_or(0.1);
  const int N = cfg.N.value_or(12);
  const double t = cfg.t.value_or(1.0);
  if (N < 1 || !(eps > 0) || !(t > 0)) throw ConfigError("need N >= 1, eps > 0, t > 0");
  const auto rep = dio::dani_check(xi, eps, N, t);
  Json j;
  j["xi"] = numbers_json(xi);
  j["epsilon"] = rep.epsilon;
  j["t"] = rep.t;
  j["singular"] = series_json(rep.singular);
  j["escape"] = series_json(rep.escape);
  j["caveat"] = rep.caveat;
  if (!a.theta.empty()) {
    const auto theta = parse_numbers(a.theta, "theta");
    const auto s = dio::inhom_dani_scan(xi, theta, eps, a.T >= 0 ? a.T : t, N, t);
    Json sj;
    sj["theta"] = numbers_json(theta);
    sj["pair"] = dio::to_string(s.pair);
    sj["cells"] = s.cells;
    sj["first_violation"] = s.first_violation ? Json(*s.first_violation) : Json(nullptr);
    sj["violation_norm"] = s.violation_norm;
    j["inhomogeneous"] = sj;
  }
  if (cfg.csv()) {
    if (a.series == "escape") write_report(cfg.outputPath, series_csv(rep.escape));
    else if (a.series.empty() || a.series == "singular") write_report(cfg.outputPath, series_csv(rep.singular));
    else throw ConfigError("--series must be singular or escape");
  } else {
    write_report(cfg.outputPath, dump(j));
  }
  summary("INFO", "dani N=" + std::to_string(N) + " singular=" + fmt(last_density(rep.singular)) +
                      " escape=" + fmt(last_density(rep.escape)));
  return 0;
}

int run_divergence(const RunConfig& cfg, const DensityArgs& a) {
  const auto xi = parse_numbers(a.xi, "xi");
  const double eps = cfg.epsilon.value_or(0.05);
  const int N = cfg.N.value_or(40);
  const double t = cfg.t.value_or(1.0);
  if (N < 1 || !(eps > 0) || !(t > 0)) throw ConfigError("need N >= 1, eps > 0, t > 0");
  const auto escape = dio::escape_of_mass(xi, N, t, dio::Gate{dio::GateKind::kShortVector, eps});
  const auto mult = dio::mult_singular_density(xi, eps, N);
  if (cfg.csv()) {
    if (a.series.empty() || a.series == "escape") write_report(cfg.outputPath, series_csv(escape));
    else if (a.series == "singular") write_report(cfg.outputPath, series_csv(mult.series));
    else throw ConfigError("--series must be escape or singular");
  } else {
    Json j;
    j["xi"] = numbers_json(xi);
    j["epsilon"] = eps;
    j["t"] = t;
    j["escape"] = series_json(escape);
    j["singular"] = series_json(mult.series);
    j["q_scan_cells"] = mult.q_scan_cells;
    Json w = Json::array();
    for (const auto& m : mult.witnesses) {
      Json e;
      e["n"] = m.n;
      e["q"] = latflow::to_string(m.q);
      w.push_back(e);
    }
    j["witnesses"] = w;
    write_report(cfg.outputPath, dump(j));
  }
  summary("INFO", "divergence N=" + std::to_string(N) + " escape=" + fmt(last_density(escape)) +
                      " singular=" + fmt(last_density(mult.series)));
  return 0;
}

// -------------------------------------------------------------- dimension

struct DimensionArgs {
  std::string base_tau;
  std::string Ns = "2,3";
  std::string hs;
  std::string h_factors;
  std::int64_t max_cells = 10'000'000;
};

int run_dimension(const RunConfig& cfg, const DimensionArgs& a) {
  const auto consts = load_constants(cfg);
  auto params = make_params(cfg, &consts);
  const double t = cfg.t.value_or(0.35);
  const int d = cfg.d.value_or(consts.d);
  if (d < 2) throw ConfigError("--d must be >= 2");
  std::vector<double> base = a.base_tau.empty() ? std::vector<double>(d - 1, 0.5)
                                                : parse_doubles(a.base_tau, "base-tau");
  if (static_cast<int>(base.size()) != d - 1) throw ConfigError("--base-tau needs d-1 entries");
  const auto Ns = parse_ints(a.Ns, "Ns");
  const double delta = cfg.delta.value_or(0.3);
  const double unit = consts.E101 * std::exp(t);
  std::vector<double> hs;
  if (!a.hs.empty()) {
    hs = parse_doubles(a.hs, "hs");
  } else if (!a.h_factors.empty()) {
    for (double f : parse_doubles(a.h_factors, "h-factors")) hs.push_back(f * unit);
  } else {
    hs.push_back(cfg.h.value_or(2 * unit));
  }
  if (cfg.csv() && hs.size() != 1) throw ConfigError("CSV output takes a single h");
  ct::CoveringOptions o;
  o.max_cells = a.max_cells;
  const auto series = ct::covering_counts(base, Ns, delta, hs, t, params, consts, consts.C7, o);
  if (cfg.csv()) {
    write_report(cfg.outputPath, series.front().to_csv());
  } else {
    Json j;
    j["base_tau"] = base;
    j["delta"] = delta;
    j["t"] = t;
    j["C7"] = consts.C7;
    j["E101"] = consts.E101;
    Json arr = Json::array();
    for (const auto& s : series) {
      Json sj;
      sj["h"] = s.h;
      Json rows = Json::array();
      for (const auto& r : s.rows) {
        Json rj;
        rj["N"] = r.N;
        rj["resolution"] = r.resolution;
        rj["cells"] = r.cells;
        rj["M"] = r.M;
        rj["slope"] = r.slope;
        rows.push_back(rj);
      }
      sj["rows"] = rows;
      arr.push_back(sj);
    }
    j["series"] = arr;
    write_report(cfg.outputPath, dump(j));
  }
  const auto& last = series.front().rows.back();
  summary("INFO", "dimension h=" + fmt(series.front().h) + " N=" + std::to_string(last.N) +
                      " M=" + std::to_string(last.M) + " slope=" + fmt(last.slope));
  return 0;
}

// ------------------------------------------------------------------ main

void add_output(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("-o,--outputPath,--output", cfg.outputPath, "Report path; '-' for stdout");
  sub->add_option("--format", cfg.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
}

void add_params(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--lambda", cfg.lambda, "Height exponent in (0, 1)")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--t", cfg.t, "Time step")->check(CLI::PositiveNumber);
  sub->add_option("--epsilon,--eps", cfg.epsilon, "Gate epsilon in (0, 1)")
      ->check(CLI::Range(0.0, 1.0));
}

void add_sample(CLI::App* sub, SampleArgs& s) {
  sub->add_option("--count", s.count, "Sample size")->check(CLI::PositiveNumber);
  sub->add_option("--tau-min", s.tau_min, "Lower end of the tau law");
  sub->add_option("--tau-max", s.tau_max, "Upper end of the tau law");
  sub->add_option("--law", s.law, "uniform, cusp or diagonal");
}

int run(int argc, char** argv) {
  const std::vector<std::string> names = {"heights",  "calibrate", "verify-contraction",
                                          "littlewood", "inhom-littlewood", "dani",
                                          "divergence", "dimension"};
  CLI::App app{"latflow: diagonal and horospherical flows on the space of lattices"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.footer(kGrammar);
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_version_flag("--version", "latflow 0.1.0");
  app.add_option("--config", "key=value config file (flags override it)");

  RunConfig cfg;
  auto* heights_cmd = app.add_subcommand("heights", "Heights of one slice point");
  HeightsArgs ha;
  heights_cmd->add_option("--point", ha.point, "tau_1..tau_m,xi_1..xi_m");
  heights_cmd->add_option("--tau", ha.tau, "tau (comma-separated)");
  heights_cmd->add_option("--xi", ha.xi, "xi (comma-separated, exact grammar)");
  heights_cmd->add_option("--i", ha.i, "Direction, 1-based")->capture_default_str();
  heights_cmd->add_option("--calibration", cfg.calibration, "Calibration JSON")->required();
  heights_cmd->add_option("--d", cfg.d, "Dimension (checked against the point)");
  add_params(heights_cmd, cfg);
  add_output(heights_cmd, cfg);

  auto* cal_cmd = app.add_subcommand("calibrate", "Fit the calibrated constants");
  CalibrateArgs ca;
  cal_cmd->add_option("--seed", cfg.seed, "Sample seed (required)");
  cal_cmd->add_option("--d", cfg.d, "Dimension")->check(CLI::Range(2, 8));
  add_sample(cal_cmd, ca.sample);
  cal_cmd->add_option("--fit-c6", ca.fit_c6, "Diagonal-law samples for C6 (0 skips)");
  cal_cmd->add_option("--fit-c11", ca.fit_c11, "Points for C11 (0 skips)");
  cal_cmd->add_option("--slack", ca.slack, "Beta slack for the C6 fit; log(8 C5)/t when < 0");
  cal_cmd->add_option("--N", cfg.N, "Beta / psi N")->check(CLI::PositiveNumber);
  cal_cmd->add_option("--delta", cfg.delta, "Beta / psi delta")->check(CLI::Range(0.0, 1.0));
  cal_cmd->add_option("--h", cfg.h, "Beta / psi h");
  cal_cmd->add_option("--resolution", cfg.resolution, "Quadrature nodes (>= 64)");
  add_params(cal_cmd, cfg);
  add_output(cal_cmd, cfg);

  auto* ver_cmd = app.add_subcommand("verify-contraction", "Check a contraction inequality");
  VerifyArgs va;
  ver_cmd->add_option("--check", va.check, "subharmonic, lipschitz, beta or psi")
      ->capture_default_str();
  ver_cmd->add_option("--kind", va.kind, "ht, bq_alpha, alpha_prime or alpha_tilde")
      ->capture_default_str();
  ver_cmd->add_option("--group", va.group, "Hi, AU, AiUi or Uiperp (lipschitz)")
      ->capture_default_str();
  ver_cmd->add_option("--calibration", cfg.calibration, "Calibration JSON")->required();
  ver_cmd->add_option("--seed", cfg.seed, "Sample seed (required)");
  ver_cmd->add_option("--d", cfg.d, "Dimension")->check(CLI::Range(2, 8));
  add_sample(ver_cmd, va.sample);
  ver_cmd->add_option("--min-pass-rate", va.min_pass_rate, "0.99 (subharmonic), 0.9 (beta)");
  ver_cmd->add_option("--slack", va.slack, "Beta slack; log(8 C5)/t when < 0");
  ver_cmd->add_option("--radius", va.radius, "Perturbation radius")->capture_default_str();
  ver_cmd->add_option("--per-point", va.per_point, "Perturbations per point")
      ->capture_default_str();
  ver_cmd->add_option("--N", cfg.N, "Beta / psi N")->check(CLI::PositiveNumber);
  ver_cmd->add_option("--delta", cfg.delta, "Beta / psi delta")->check(CLI::Range(0.0, 1.0));
  ver_cmd->add_option("--h", cfg.h, "Beta / psi h");
  ver_cmd->add_option("--resolution", cfg.resolution, "Quadrature nodes (>= 64)");
  add_params(ver_cmd, cfg);
  add_output(ver_cmd, cfg);

  LittlewoodArgs la;
  auto* lw_cmd = app.add_subcommand("littlewood", "min over q <= Q of q prod ||q xi_i||");
  lw_cmd->add_option("--xi", la.xi, "xi (exact grammar)")->required();
  lw_cmd->add_option("--Q", la.Q, "Window end")->required();
  add_output(lw_cmd, cfg);

  auto* ih_cmd = app.add_subcommand("inhom-littlewood",
                                    "min over q0 <= q <= Q of q prod ||q xi_i - theta_i||");
  ih_cmd->add_option("--xi", la.xi, "xi (exact grammar)")->required();
  ih_cmd->add_option("--theta", la.theta, "theta (exact grammar)");
  ih_cmd->add_option("--Q", la.Q, "Window end")->required();
  ih_cmd->add_option("--q0", la.q0, "Window start")->capture_default_str();
  ih_cmd->add_flag("--scan", la.scan, "Scan theta over a grid of step 1/thetaGridRes");
  ih_cmd->add_option("--thetaGridRes", cfg.thetaGridRes, "Theta grid resolution")
      ->capture_default_str();
  add_output(ih_cmd, cfg);

  DensityArgs da;
  auto* dani_cmd = app.add_subcommand("dani", "Singular and escape densities side by side");
  dani_cmd->add_option("--xi", da.xi, "xi (exact grammar)")->required();
  dani_cmd->add_option("--theta", da.theta, "theta: also scan the affine lattice");
  dani_cmd->add_option("--T", da.T, "Smallest tau of the affine scan (default t)");
  dani_cmd->add_option("--epsilon,--eps", cfg.epsilon, "Ball radius (default 0.1)");
  dani_cmd->add_option("--N", cfg.N, "Largest grid index (default 12)");
  dani_cmd->add_option("--t", cfg.t, "Grid step (default 1)");
  dani_cmd->add_option("--series", da.series, "CSV series: singular or escape");
  add_output(dani_cmd, cfg);

  auto* div_cmd = app.add_subcommand("divergence", "Escape of mass and singular density");
  div_cmd->add_option("--xi", da.xi, "xi (exact grammar)")->required();
  div_cmd->add_option("--epsilon,--eps", cfg.epsilon, "Short-vector gate (default 0.05)");
  div_cmd->add_option("--N", cfg.N, "Largest grid index (default 40)");
  div_cmd->add_option("--t", cfg.t, "Grid step (default 1)");
  div_cmd->add_option("--series", da.series, "CSV series: escape or singular");
  add_output(div_cmd, cfg);

  DimensionArgs ma;
  auto* dim_cmd = app.add_subcommand("dimension", "Covering counts and slopes");
  dim_cmd->add_option("--calibration", cfg.calibration, "Calibration JSON")->required();
  dim_cmd->add_option("--base-tau", ma.base_tau, "Base tau (default 0.5 each)");
  dim_cmd->add_option("--Ns", ma.Ns, "Values of N")->capture_default_str();
  dim_cmd->add_option("--hs", ma.hs, "Absolute h values");
  dim_cmd->add_option("--h-factors", ma.h_factors, "h as multiples of E101 e^t");
  dim_cmd->add_option("--h", cfg.h, "Single h (default 2 E101 e^t)");
  dim_cmd->add_option("--delta", cfg.delta, "delta (default 0.3)")->check(CLI::Range(0.0, 1.0));
  dim_cmd->add_option("--t", cfg.t, "Time step (default 0.35)")->check(CLI::PositiveNumber);
  dim_cmd->add_option("--d", cfg.d, "Dimension (default from calibration)");
  dim_cmd->add_option("--max-cells", ma.max_cells, "Grid budget")->capture_default_str();
  dim_cmd->add_option("--lambda", cfg.lambda, "Height exponent")->check(CLI::Range(0.0, 1.0));
  dim_cmd->add_option("--epsilon,--eps", cfg.epsilon, "Gate epsilon")->check(CLI::Range(0.0, 1.0));
  add_output(dim_cmd, cfg);

  const auto classify = [&](const std::string& sub, const std::string& key) {
    const std::string flag = "--" + key;
    if (!sub.empty() && app.get_subcommand(sub)->get_option_no_throw(flag)) return KeyUse::kUse;
    for (const auto* s : app.get_subcommands({})) {
      if (s->get_option_no_throw(flag)) return KeyUse::kSkip;
    }
    return KeyUse::kUnknown;
  };
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = expand_config(std::move(args), names, classify);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  std::reverse(args.begin(), args.end());

  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  g_report_on_stdout = cfg.outputPath.empty() || cfg.outputPath == "-";
  try {
    if (*heights_cmd) return run_heights(cfg, ha);
    if (*cal_cmd) return run_calibrate(cfg, ca);
    if (*ver_cmd) return run_verify(cfg, va);
    if (*lw_cmd) return run_littlewood(cfg, la);
    if (*ih_cmd) return run_inhom(cfg, la);
    if (*dani_cmd) return run_dani(cfg, da);
    if (*div_cmd) return run_divergence(cfg, da);
    if (*dim_cmd) return run_dimension(cfg, ma);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::kEnumerationBudgetExceeded:
      case ErrorKind::kGridBudgetExceeded:
        return kExitBudget;
      case ErrorKind::kInvalidArgument:
      case ErrorKind::kParse:
      case ErrorKind::kLeavesSlice:
        return kExitConfig;
      default:
        return kExitFail;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
  return kExitConfig;
}

}  // namespace
}  // namespace latflow::cli

int main(int argc, char** argv) { return latflow::cli::run(argc, argv); }
