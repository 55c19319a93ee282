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

#include "latflow/diophantine.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "latflow/detail/reduction.hpp"
#include "latflow/errors.hpp"
#include "latflow/parallel.hpp"
#include "gmp_util.hpp"

namespace latflow::diophantine {

namespace {

// --- Exact evaluation in Q(sqrt D) -------------------------------------------

using detail::to_high;
using detail::to_mpz;

// (U + V sqrt D) / L without cancellation.
HighReal eval_conjugate(const mpz_class& U, const mpz_class& V, std::int64_t D,
                        const mpz_class& L) {
  HighReal root = hsqrt(static_cast<HighReal>(D));
  HighReal num;
  if (sgn(V) == 0) {
    num = to_high(U);
  } else if (sgn(U) == 0 || sgn(U) == sgn(V)) {
    num = to_high(U) + to_high(V) * root;
  } else {
    mpz_class norm = U * U - V * V * D;
    num = to_high(norm) / (to_high(U) - to_high(V) * root);
  }
  return num / to_high(L);
}

// x = (A + B sqrt D) / L with integers, L > 0.
struct Scaled {
  mpz_class A, B, L;
  std::int64_t D = 1;
};

Scaled scaled_form(const Quadratic& x) {
  Scaled s;
  mpz_class ad = to_mpz(x.a().den()), bd = to_mpz(x.b().den());
  mpz_lcm(s.L.get_mpz_t(), ad.get_mpz_t(), bd.get_mpz_t());
  s.A = to_mpz(x.a().num()) * (s.L / ad);
  s.B = to_mpz(x.b().num()) * (s.L / bd);
  s.D = x.is_rational() ? 1 : x.D();
  return s;
}

// q x - p evaluated accurately.
HighReal eval_linear(const Quadratic& x, Int128 q, Int128 p) {
  Scaled s = scaled_form(x);
  mpz_class mq = to_mpz(q);
  return eval_conjugate(s.A * mq - s.L * to_mpz(p), s.B * mq, s.D, s.L);
}

// Core u(xi) with exact xi: row i < d-1 is m_i + xi_i m_{d-1}.
class SliceEvaluator final : public lattice::CoreEvaluator {
 public:
  explicit SliceEvaluator(std::vector<Quadratic> xi) : xi_(std::move(xi)) {
    for (const auto& x : xi_) rows_.push_back(scaled_form(x));
  }

  void apply(const Int128* c, HighReal* out) const override {
    const int k = static_cast<int>(rows_.size());
    mpz_class last = to_mpz(c[k]);
    for (int i = 0; i < k; ++i) {
      const Scaled& s = rows_[i];
      out[i] = eval_conjugate(s.L * to_mpz(c[i]) + s.A * last, s.B * last, s.D, s.L);
    }
    out[k] = static_cast<HighReal>(c[k]);
  }

  std::shared_ptr<const lattice::CoreEvaluator> dual() const override;

 private:
  std::vector<Quadratic> xi_;
  std::vector<Scaled> rows_;
};

// Inverse transpose of u(xi): rows m_i for i < d-1, last row
// m_{d-1} - sum xi_i m_i. Needs a single quadratic field.
class DualSliceEvaluator final : public lattice::CoreEvaluator {
 public:
  explicit DualSliceEvaluator(const std::vector<Quadratic>& xi) {
    L_ = 1;
    for (const auto& x : xi) {
      Scaled s = scaled_form(x);
      if (s.D != 1) D_ = s.D;
      mpz_lcm(L_.get_mpz_t(), L_.get_mpz_t(), s.L.get_mpz_t());
      rows_.push_back(std::move(s));
    }
  }

  void apply(const Int128* c, HighReal* out) const override {
    const int k = static_cast<int>(rows_.size());
    mpz_class U = L_ * to_mpz(c[k]);
    mpz_class V = 0;
    for (int i = 0; i < k; ++i) {
      out[i] = static_cast<HighReal>(c[i]);
      mpz_class f = (L_ / rows_[i].L) * to_mpz(c[i]);
      U -= rows_[i].A * f;
      V -= rows_[i].B * f;
    }
    out[k] = eval_conjugate(U, V, D_, L_);
  }

 private:
  std::vector<Scaled> rows_;
  mpz_class L_;
  std::int64_t D_ = 1;
};

std::shared_ptr<const lattice::CoreEvaluator> SliceEvaluator::dual() const {
  std::int64_t D = 1;
  for (const auto& x : xi_) {
    if (x.is_rational()) continue;
    if (D != 1 && x.D() != D) return nullptr;
    D = x.D();
  }
  return std::make_shared<DualSliceEvaluator>(xi_);
}

bool all_exact(const std::vector<Number>& v) {
  for (const auto& n : v)
    if (!n.exact) return false;
  return true;
}

// ||q x|| for integer q.
HighReal frac_dist(const Number& x, Int128 q) {
  if (x.exact && x.exact->is_rational()) {
    Rational r = x.exact->a() * Rational(q);
    Rational f = r - Rational(r.floor());
    HighReal a = f.value(), b = (Rational(1) - f).value();
    return a < b ? a : b;
  }
  if (x.exact) {
    // q x - p with p near q x; the exact evaluation has no cancellation.
    Int128 p = round_to_int(static_cast<HighReal>(q) * x.value);
    return habs(wrap_unit(eval_linear(*x.exact, q, p)));
  }
  return habs(wrap_unit(static_cast<HighReal>(q) * x.value));
}

// --- Exact solution sets of q x - theta in Z ----------------------------------

Int128 floor_mod(Int128 a, Int128 m) {
  Int128 r = a % m;
  return r < 0 ? r + m : r;
}

// Inverse of a modulo m (gcd(a, m) = 1).
Int128 mod_inverse(Int128 a, Int128 m) {
  Int128 g = m, x = 0, x1 = 1, r = floor_mod(a, m);
  while (r != 0) {
    Int128 q = g / r;
    Int128 t = g - q * r;
    g = r;
    r = t;
    t = x - q * x1;
    x = x1;
    x1 = t;
  }
  return floor_mod(x, m);
}

struct ZeroSet {
  enum Kind { kNone, kOne, kProgression } kind = kProgression;
  Int128 a = 0;  // the single q, or the residue
  Int128 m = 1;  // modulus for progressions

  bool contains(Int128 q) const {
    switch (kind) {
      case kNone: return false;
      case kOne: return q == a;
      case kProgression: return m == 1 || floor_mod(q - a, m) == 0;
    }
    return false;
  }
};

// {q in Z : q x - theta in Z}.
ZeroSet zero_set(const Quadratic& x, const Quadratic& th) {
  ZeroSet z;
  if (!x.is_rational()) {
    if (!th.is_rational() && th.D() != x.D()) return {ZeroSet::kNone};
    Rational r = th.b() / x.b();
    if (!r.is_integer()) return {ZeroSet::kNone};
    if (!(Rational(r.num()) * x.a() - th.a()).is_integer()) return {ZeroSet::kNone};
    z.kind = ZeroSet::kOne;
    z.a = r.num();
    return z;
  }
  if (!th.is_rational()) return {ZeroSet::kNone};
  // q p / n - r / s in Z iff s | n and q = r (n / s) p^{-1} mod n.
  Int128 p = x.a().num(), n = x.a().den();
  Int128 r = th.a().num(), s = th.a().den();
  if (n % s != 0) return {ZeroSet::kNone};
  z.m = n;
  z.a = n == 1 ? 0 : floor_mod(checked_mul(floor_mod(checked_mul(r, n / s), n), mod_inverse(p, n)), n);
  return z;
}

ZeroSet intersect(const ZeroSet& x, const ZeroSet& y) {
  if (x.kind == ZeroSet::kNone || y.kind == ZeroSet::kNone) return {ZeroSet::kNone};
  if (x.kind == ZeroSet::kOne) return y.contains(x.a) ? x : ZeroSet{ZeroSet::kNone};
  if (y.kind == ZeroSet::kOne) return x.contains(y.a) ? y : ZeroSet{ZeroSet::kNone};
  Int128 g = gcd(x.m, y.m);
  Int128 diff = y.a - x.a;
  if (floor_mod(diff, g) != 0) return {ZeroSet::kNone};
  Int128 m2 = y.m / g;
  Int128 k = m2 == 1 ? 0
                     : floor_mod(checked_mul(floor_mod(diff / g, m2), mod_inverse(x.m / g, m2)), m2);
  ZeroSet z;
  z.m = checked_mul(x.m / g, y.m);
  z.a = floor_mod(checked_add(x.a, checked_mul(x.m, k)), z.m);
  return z;
}

// --- Littlewood products -----------------------------------------------------

constexpr std::int64_t kResync = 1024;

struct Axis {
  HighReal xi = 0;
  HighReal theta = 0;
  long double step = 0;
  bool exact = false;
  ZeroSet zeros{ZeroSet::kNone};
};

std::vector<Axis> make_axes(const std::vector<Number>& xi, const std::vector<Number>* theta) {
  std::vector<Axis> axes;
  for (std::size_t i = 0; i < xi.size(); ++i) {
    Axis a;
    a.xi = xi[i].value;
    a.theta = theta ? (*theta)[i].value : 0;
    a.step = static_cast<long double>(wrap_unit(a.xi));
    const bool th_exact = theta == nullptr || (*theta)[i].exact.has_value();
    if (xi[i].exact && th_exact) {
      a.exact = true;
      a.zeros = zero_set(*xi[i].exact, theta ? *(*theta)[i].exact : Quadratic());
    }
    axes.push_back(a);
  }
  return axes;
}

DioReport scan_window(const std::vector<Axis>& axes, std::int64_t q0, std::int64_t Q) {
  DioReport rep;
  rep.q0 = q0;
  rep.Q = Q;
  const std::size_t k = axes.size();
  std::vector<long double> r(k);
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t q = q0; q <= Q; ++q) {
    if ((q - q0) % kResync == 0) {
      for (std::size_t i = 0; i < k; ++i) {
        r[i] = static_cast<long double>(
            wrap_unit(static_cast<HighReal>(q) * axes[i].xi - axes[i].theta));
      }
    } else {
      for (std::size_t i = 0; i < k; ++i) {
        r[i] += axes[i].step;
        if (r[i] >= 0.5L) r[i] -= 1;
        else if (r[i] < -0.5L) r[i] += 1;
      }
    }
    long double prod = static_cast<long double>(q);
    bool exact_zero = false;
    for (std::size_t i = 0; i < k; ++i) {
      if (axes[i].exact && axes[i].zeros.kind != ZeroSet::kNone && axes[i].zeros.contains(q)) {
        exact_zero = true;
        prod = 0;
        break;
      }
      prod *= std::fabs(r[i]);
    }
    const double v = static_cast<double>(prod);
    if (v < best) {
      best = v;
      rep.records.emplace_back(q, v);
      rep.argmin = q;
    }
    if (v == 0) {
      rep.exact_zero = exact_zero;
      break;
    }
  }
  rep.min_value = best;
  return rep;
}

void check_lengths(const std::vector<Number>& xi, const std::vector<Number>* theta) {
  if (xi.empty() || xi.size() > 5) fail(ErrorKind::kInvalidArgument, "xi needs 1 to 5 entries");
  if (theta && theta->size() != xi.size()) {
    fail(ErrorKind::kInvalidArgument, "theta and xi lengths differ");
  }
}

// Lexicographic cells {lo..hi}^k.
std::vector<std::vector<int>> box_cells(int k, int lo, int hi) {
  std::vector<std::vector<int>> cells;
  if (hi < lo) return cells;
  std::vector<int> c(k, lo);
  while (true) {
    cells.push_back(c);
    int j = k - 1;
    while (j >= 0 && c[j] == hi) c[j--] = lo;
    if (j < 0) break;
    ++c[j];
  }
  return cells;
}

// density[N-1] = fraction of cells in {1..N}^k flagged, for flags over
// {1..Nmax}^k in box_cells order.
DensitySeries densities(const std::vector<std::vector<int>>& cells,
                        const std::vector<char>& flag, int Nmax, int k) {
  std::vector<double> count(Nmax + 1, 0);
  for (std::size_t j = 0; j < cells.size(); ++j) {
    if (!flag[j]) continue;
    int m = *std::max_element(cells[j].begin(), cells[j].end());
    count[m] += 1;
  }
  DensitySeries s;
  double acc = 0;
  for (int N = 1; N <= Nmax; ++N) {
    acc += count[N];
    s.N.push_back(N);
    s.density.push_back(acc / std::pow(static_cast<double>(N), k));
  }
  return s;
}

// Depth beyond which float128 coordinates of a_tau u(xi) lose the lattice.
constexpr double kFloatDepth = 70.0;

bool too_deep(const std::vector<double>& tau) {
  double sum = 0, mx = 0;
  for (double v : tau) {
    sum += v;
    mx = std::max(mx, v);
  }
  return sum + mx > kFloatDepth;
}

}  // namespace

// --- Public operations ---------------------------------------------------------

DioReport littlewood_min(const std::vector<Number>& xi, std::int64_t Q) {
  check_lengths(xi, nullptr);
  require(Q >= 1, "Q must be >= 1");
  return scan_window(make_axes(xi, nullptr), 1, Q);
}

DioReport inhom_littlewood_min(const std::vector<Number>& xi, const std::vector<Number>& theta,
                               std::int64_t Q, std::int64_t q0) {
  check_lengths(xi, &theta);
  require(q0 >= 1 && q0 <= Q, "need 1 <= q0 <= Q");
  return scan_window(make_axes(xi, &theta), q0, Q);
}

ThetaScan inhom_theta_scan(const std::vector<Number>& xi, std::int64_t q0, std::int64_t Q,
                           int resolution) {
  check_lengths(xi, nullptr);
  require(q0 >= 1 && q0 <= Q, "need 1 <= q0 <= Q");
  require(resolution >= 1 && resolution <= 4096, "resolution must be in [1, 4096]");
  const int k = static_cast<int>(xi.size());
  std::vector<std::vector<int>> cells = box_cells(k, 0, resolution - 1);
  ThetaScan out;
  out.resolution = resolution;
  out.window_min.assign(cells.size(), 0);
  parallel_for(cells.size(), [&](std::size_t j) {
    std::vector<Number> theta;
    for (int c : cells[j]) {
      theta.push_back(Number::from_exact(Quadratic(Rational::make(c, resolution))));
    }
    out.window_min[j] = scan_window(make_axes(xi, &theta), q0, Q).min_value;
  });
  std::size_t arg = 0;
  for (std::size_t j = 1; j < cells.size(); ++j) {
    if (out.window_min[j] > out.window_min[arg]) arg = j;
  }
  out.max_value = out.window_min[arg];
  for (int c : cells[arg]) out.argmax_theta.push_back(static_cast<double>(c) / resolution);
  return out;
}

RdMembership r_d_membership(const TargetSpec& spec, const RdOptions& opts) {
  check_lengths(spec.xi, nullptr);
  if (!all_exact(spec.xi)) return r_d_membership_heuristic(spec.xi_values(), opts);
  // Coordinates of each xi in the basis {1, sqrt D_1, sqrt D_2, ...}; the
  // square roots of distinct square-free D are linearly independent over Q.
  std::vector<std::int64_t> roots;
  for (const auto& n : spec.xi) {
    if (!n.exact->is_rational() &&
        std::find(roots.begin(), roots.end(), n.exact->D()) == roots.end()) {
      roots.push_back(n.exact->D());
    }
  }
  std::vector<std::vector<Rational>> rows;
  for (const auto& n : spec.xi) {
    std::vector<Rational> row(roots.size());
    for (std::size_t c = 0; c < roots.size(); ++c) {
      if (!n.exact->is_rational() && n.exact->D() == roots[c]) row[c] = n.exact->b();
    }
    rows.push_back(row);
  }
  // Rank by elimination over Q.
  int rank = 0;
  const std::size_t cols = roots.size();
  for (std::size_t c = 0; c < cols && rank < static_cast<int>(rows.size()); ++c) {
    std::size_t piv = rank;
    while (piv < rows.size() && rows[piv][c].is_zero()) ++piv;
    if (piv == rows.size()) continue;
    std::swap(rows[piv], rows[rank]);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (static_cast<int>(r) == rank || rows[r][c].is_zero()) continue;
      Rational f = rows[r][c] / rows[rank][c];
      for (std::size_t cc = c; cc < cols; ++cc) rows[r][cc] = rows[r][cc] - f * rows[rank][cc];
    }
    ++rank;
  }
  RdMembership m;
  m.exact = true;
  m.span_dim = 1 + rank;
  m.member = m.span_dim <= 2;
  return m;
}

RdMembership r_d_membership_heuristic(const std::vector<HighReal>& xi, const RdOptions& opts) {
  require(!xi.empty() && xi.size() <= 5, "xi needs 1 to 5 entries");
  // Residuals carry float128 rounding ~2^-113 |c|; Gram-Schmidt against the
  // weighted residual column amplifies it by ~M^2, which caps M near 2^66.
  require(opts.input_precision >= 0x1p-60 && opts.input_precision < 1e-6,
          "input precision must be in [2^-60, 1e-6)");
  const int n = static_cast<int>(xi.size()) + 1;
  HighReal scale = 1;
  for (HighReal v : xi) scale = std::max(scale, habs(v));
  // Relations among inputs known to relative precision p leave residuals
  // ~ p |c|; generic vectors with |c| <= C have residuals ~ C^{-(n-1)}, so
  // only |c| well below (1 / tol)^{1 / (n + 1)} separate the two.
  const HighReal tol = HighReal(64 * opts.input_precision) * scale;
  const HighReal M = 1 / tol;
  const double cmax = 0.25 * std::pow(to_double(M), 1.0 / (n + 1));

  auto residual = [&](const Int128* c) {
    HighReal r = static_cast<HighReal>(c[0]);
    for (int j = 1; j < n; ++j) r += static_cast<HighReal>(c[j]) * xi[j - 1];
    return r;
  };
  // The weight on the residual grows in steps of e^12, each LLL call
  // starting from the previous basis, so Gram-Schmidt never sees the full
  // skew at once.
  const HighReal logM = hlog(M);
  const int steps = std::max(1, static_cast<int>(std::ceil(to_double(logM) / 12.0)));
  detail::Reduction red;
  for (int step = 1; step <= steps; ++step) {
    const HighReal w = hexp(logM * step / steps);
    detail::CoordFn fn = [&](const Int128* c, HighReal* out) {
      for (int j = 0; j < n; ++j) out[j] = static_cast<HighReal>(c[j]);
      out[n] = w * residual(c);
    };
    red = detail::lll_reduce(n, n + 1, fn, step == 1 ? nullptr : &red.basis);
  }

  RdMembership m;
  double worst = 0;
  for (int j = 0; j < n; ++j) {
    const Int128* c = red.row(j);
    double l2 = 0, l1 = 0;
    for (int k = 0; k < n; ++k) {
      double v = static_cast<double>(c[k]);
      l2 += v * v;
      l1 += std::fabs(v);
    }
    l2 = std::sqrt(l2);
    double res = to_double(habs(residual(c)));
    double score = std::max(l2 / cmax, res / (to_double(tol) * l1));
    if (score <= 1) {
      std::vector<std::int64_t> rel;
      for (int k = 0; k < n; ++k) rel.push_back(narrow_int64(c[k]));
      m.relations.push_back(std::move(rel));
    }
    worst = std::max(worst, score <= 1 ? score : 1 / score);
  }
  m.exact = false;
  m.span_dim = n - static_cast<int>(m.relations.size());
  m.member = m.span_dim <= 2;
  m.confidence = 1 - worst;
  return m;
}

flows::XPrimePoint exact_point(std::vector<double> tau, const std::vector<Number>& xi) {
  std::vector<HighReal> values;
  std::vector<Quadratic> wrapped;
  for (const auto& n : xi) {
    Number w = wrap(n);
    values.push_back(w.value);
    if (w.exact) wrapped.push_back(*w.exact);
  }
  flows::XPrimePoint x = flows::XPrimePoint::make(std::move(tau), values);
  if (wrapped.size() == xi.size()) x = x.with_core(std::make_shared<SliceEvaluator>(wrapped));
  return x;
}

MultSingularReport mult_singular_density(const std::vector<Number>& xi, double eps, int Nmax,
                                         const MultOptions& opts) {
  check_lengths(xi, nullptr);
  require(eps > 0 && eps < 1, "epsilon must be in (0, 1)");
  require(Nmax >= 1, "Nmax must be >= 1");
  const int k = static_cast<int>(xi.size());
  const int d = k + 1;
  const bool exact = all_exact(xi);
  std::vector<std::vector<int>> cells = box_cells(k, 1, Nmax);
  std::vector<Int128> witness(cells.size(), 0);
  std::vector<char> scanned(cells.size(), 0);
  const HighReal heps = eps;

  parallel_for(cells.size(), [&](std::size_t j) {
    std::vector<double> n(cells[j].begin(), cells[j].end());
    double sum = 0;
    for (double v : n) sum += v;
    flows::XPrimePoint x = exact_point(n, xi);
    lattice::ReducedLattice RL(flows::to_lattice(x));
    try {
      RL.search_within(eps * std::sqrt(static_cast<double>(d)) * (1 + 1e-9), opts.limits,
                       [&](const std::vector<Int128>& c, const std::vector<HighReal>& v,
                           HighReal) {
                         for (int i = 0; i < k; ++i)
                           if (habs(v[i]) > heps) return true;
                         if (c[k] == 0 || !(habs(v[k]) < heps)) return true;
                         witness[j] = c[k] < 0 ? -c[k] : c[k];
                         return false;
                       });
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kEnumerationBudgetExceeded) throw;
      const double bound = eps * std::exp(sum);
      if (bound > opts.q_scan_limit) throw;
      scanned[j] = 1;
      MultWitness w;
      w.n = cells[j];
      for (Int128 q = 1; static_cast<double>(q) < bound; ++q) {
        w.q = q;
        if (verify_mult_witness(xi, eps, w)) {
          witness[j] = q;
          break;
        }
      }
    }
  });

  MultSingularReport rep;
  rep.epsilon = eps;
  std::vector<char> flag(cells.size(), 0);
  for (std::size_t j = 0; j < cells.size(); ++j) {
    rep.q_scan_cells += scanned[j];
    if (witness[j] == 0) continue;
    flag[j] = 1;
    rep.witnesses.push_back({cells[j], witness[j]});
  }
  rep.series = densities(cells, flag, Nmax, k);
  if (!exact) {
    std::vector<double> deepest(k, static_cast<double>(Nmax));
    rep.series.precision_limited = too_deep(deepest);
  }
  return rep;
}

bool verify_mult_witness(const std::vector<Number>& xi, double eps, const MultWitness& w) {
  if (w.q < 1 || w.n.size() != xi.size()) return false;
  HighReal sum = 0;
  for (int v : w.n) sum += v;
  if (!(static_cast<HighReal>(w.q) < HighReal(eps) * hexp(sum))) return false;
  for (std::size_t i = 0; i < xi.size(); ++i) {
    if (frac_dist(xi[i], w.q) > HighReal(eps) * hexp(-HighReal(w.n[i]))) return false;
  }
  return true;
}

namespace {

DensitySeries escape_impl(const std::vector<double>& base_tau, const flows::XPrimePoint* base,
                          const std::vector<Number>* xi, int Nmax, double t, const Gate& gate,
                          const heights::HeightParams& params,
                          const heights::CalibratedConstants* consts) {
  require(Nmax >= 1, "Nmax must be >= 1");
  require(t > 0, "t must be positive");
  require(gate.value > 0, "gate parameter must be positive");
  if (gate.kind == GateKind::kHeight && consts == nullptr) {
    fail(ErrorKind::kInvalidArgument, "the height gate needs calibrated constants");
  }
  const int k = static_cast<int>(base_tau.size());
  std::vector<std::vector<int>> cells = box_cells(k, 1, Nmax);
  std::vector<char> inside(cells.size(), 0);
  parallel_for(cells.size(), [&](std::size_t j) {
    std::vector<double> step(k);
    for (int i = 0; i < k; ++i) step[i] = t * cells[j][i];
    flows::XPrimePoint x = base ? flows::act_diag({step}, *base) : exact_point(step, *xi);
    bool in;
    if (gate.kind == GateKind::kShortVector) {
      in = lattice::lambda1(flows::to_lattice(x)) >= gate.value;
    } else {
      double mx = 0;
      for (int i = 0; i < k; ++i) mx = std::max(mx, heights::alpha_tilde(x, i, params, *consts));
      in = mx <= gate.value;
    }
    inside[j] = in ? 1 : 0;
  });
  DensitySeries s = densities(cells, inside, Nmax, k);
  for (double& v : s.density) v = 1 - v;
  bool exact = base ? base->core_evaluator() != nullptr : all_exact(*xi);
  if (!exact) {
    std::vector<double> deepest(k);
    for (int i = 0; i < k; ++i) deepest[i] = base_tau[i] + t * Nmax;
    s.precision_limited = too_deep(deepest);
  }
  return s;
}

}  // namespace

DensitySeries escape_of_mass(const std::vector<Number>& xi, int Nmax, double t, const Gate& gate,
                             const heights::HeightParams& params,
                             const heights::CalibratedConstants* consts) {
  check_lengths(xi, nullptr);
  return escape_impl(std::vector<double>(xi.size(), 0.0), nullptr, &xi, Nmax, t, gate, params,
                     consts);
}

DensitySeries escape_of_mass(const flows::XPrimePoint& x, int Nmax, double t, const Gate& gate,
                             const heights::HeightParams& params,
                             const heights::CalibratedConstants* consts) {
  return escape_impl(x.tau(), &x, nullptr, Nmax, t, gate, params, consts);
}

DaniReport dani_check(const std::vector<Number>& xi, double eps, int N, double t) {
  DaniReport r;
  r.epsilon = eps;
  r.t = t;
  r.singular = mult_singular_density(xi, eps, N).series;
  r.escape = escape_of_mass(xi, N, t, {GateKind::kShortVector, eps});
  r.caveat =
      "the correspondence is asymptotic and its two sides use different epsilon scales; "
      "compare trends, not values";
  return r;
}

DirichletWitness dirichlet_witness(const Number& xi0, Int128 Q) {
  require(Q >= 1, "Q must be >= 1");
  DirichletWitness w;
  Int128 h2 = 0, h1 = 1, k2 = 1, k1 = 0;  // convergent recurrences
  Int128 best_p = 0, best_q = 0;
  auto push = [&](Int128 a) {
    Int128 h = checked_add(checked_mul(a, h1), h2);
    Int128 kq = checked_add(checked_mul(a, k1), k2);
    if (kq > Q) return false;
    w.partial_quotients.push_back(a);
    w.denominators.push_back(kq);
    h2 = h1;
    h1 = h;
    k2 = k1;
    k1 = kq;
    best_p = h;
    best_q = kq;
    return true;
  };

  if (xi0.exact && xi0.exact->is_rational()) {
    w.exact = true;
    Int128 num = xi0.exact->a().num(), den = xi0.exact->a().den();
    while (den != 0) {
      Int128 a = num / den;
      if (num % den != 0 && num < 0) --a;
      if (!push(a)) break;
      Int128 r = num - a * den;
      num = den;
      den = r;
    }
  } else if (xi0.exact) {
    w.exact = true;
    // xi0 = (P + sqrt(Nr)) / R with R | Nr - P^2.
    Scaled s = scaled_form(*xi0.exact);
    mpz_class P = s.A, Nr = s.B * s.B * s.D, R = s.L;
    if (sgn(s.B) < 0) {
      P = -P;
      R = -R;
    }
    mpz_class rem = Nr - P * P;
    if (rem % R != 0) {
      mpz_class absR = abs(R);
      P *= absR;
      Nr *= R * R;
      R *= absR;
    }
    mpz_class root;
    mpz_sqrt(root.get_mpz_t(), Nr.get_mpz_t());
    for (int guard = 0; guard < 400; ++guard) {
      mpz_class num = P + root;
      if (sgn(R) < 0) num += 1;
      mpz_class a;
      mpz_fdiv_q(a.get_mpz_t(), num.get_mpz_t(), R.get_mpz_t());
      if (!mpz_fits_slong_p(a.get_mpz_t())) break;
      if (!push(static_cast<Int128>(a.get_si()))) break;
      P = a * R - P;
      R = (Nr - P * P) / R;
    }
  } else {
    HighReal x = xi0.value;
    for (int guard = 0; guard < 200; ++guard) {
      HighReal a = hfloor(x);
      if (!push(round_to_int(a))) break;
      HighReal f = x - a;
      if (f < HighReal(1e-30)) break;
      x = 1 / f;
    }
  }
  w.q = best_q;
  w.p = best_p;
  w.distance = to_double(frac_dist(xi0, w.q));
  return w;
}

lattice::Grid make_grid_point(const std::vector<Number>& xi, const std::vector<Number>& theta) {
  check_lengths(xi, &theta);
  const int d = static_cast<int>(xi.size()) + 1;
  std::vector<HighReal> core(static_cast<size_t>(d) * d, 0);
  std::vector<Quadratic> exact;
  for (int r = 0; r < d; ++r) core[r * d + r] = 1;
  for (int r = 0; r < d - 1; ++r) {
    Number w = wrap(xi[r]);
    core[r * d + d - 1] = w.value;
    if (w.exact) exact.push_back(*w.exact);
  }
  auto L = lattice::UnimodularLattice::row_scaled(std::vector<HighReal>(d, 0), std::move(core));
  if (static_cast<int>(exact.size()) == d - 1) L = L.with_evaluator(std::make_shared<SliceEvaluator>(exact));
  std::vector<HighReal> frac(d, 0);
  for (int r = 0; r < d - 1; ++r) frac[r] = -theta[r].value;
  return lattice::Grid::from_lattice_coordinates(std::move(L), std::move(frac));
}

const char* to_string(PairClass c) {
  switch (c) {
    case PairClass::kRational: return "rational";
    case PairClass::kIrrational: return "irrational";
    case PairClass::kUnknown: return "unknown";
  }
  return "unknown";
}

PairClass classify_pair(const std::vector<Number>& xi, const std::vector<Number>& theta) {
  check_lengths(xi, &theta);
  if (!all_exact(xi) || !all_exact(theta)) return PairClass::kUnknown;
  ZeroSet z;
  for (std::size_t i = 0; i < xi.size(); ++i) z = intersect(z, zero_set(*xi[i].exact, *theta[i].exact));
  return z.kind == ZeroSet::kNone ? PairClass::kIrrational : PairClass::kRational;
}

InhomScanReport inhom_dani_scan(const std::vector<Number>& xi, const std::vector<Number>& theta,
                                double eps, double T, int Nmax, double t,
                                const lattice::EnumerationLimits& limits) {
  require(eps > 0 && T > 0 && t > 0, "eps, T and t must be positive");
  lattice::Grid G = make_grid_point(xi, theta);
  InhomScanReport rep;
  rep.pair = classify_pair(xi, theta);
  const int k = static_cast<int>(xi.size());
  const int lo = static_cast<int>(std::ceil(T / t - 1e-12));
  for (const auto& cell : box_cells(k, std::max(lo, 1), Nmax)) {
    ++rep.cells;
    std::vector<HighReal> s(k + 1, 0);
    std::vector<double> tau(k);
    for (int i = 0; i < k; ++i) {
      tau[i] = t * cell[i];
      s[i] = tau[i];
      s[k] -= s[i];
    }
    auto m = lattice::grid_min_norm(G.scaled(s), eps, lattice::NormKind::kEuclidean, limits);
    if (m && *m < eps) {
      rep.first_violation = tau;
      rep.violation_norm = *m;
      return rep;
    }
  }
  return rep;
}

}  // namespace latflow::diophantine
