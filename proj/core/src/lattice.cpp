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

#include "latflow/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "gmp_util.hpp"
#include "latflow/detail/integer.hpp"
#include "latflow/errors.hpp"

namespace latflow::detail {

struct BasisTransform {
  int d = 0;
  std::vector<mpz_class> m;
};

}  // namespace latflow::detail

namespace latflow::lattice {

namespace {

// Spread of log-scales handled by one LLL call. The reduced basis from the
// previous step has bounded orthogonality defect, so each call starts from a
// basis whose condition number grows by at most ~exp(2 * kScaleStep).
constexpr double kScaleStep = 12.0;
constexpr long double kRadiusSlack = 1e-9L;
// Between scale steps the working basis is replaced by the reduced one once
// coefficients reach this size, so each LLL call sees small integers even
// when the reduced basis needs more than 128 bits in the original basis.
constexpr Int128 kRebaseLimit = Int128(1) << 40;

HighReal det_gauss(std::vector<HighReal> a, int n) {
  HighReal det = 1;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int r = k + 1; r < n; ++r) {
      if (habs(a[r * n + k]) > habs(a[piv * n + k])) piv = r;
    }
    if (a[piv * n + k] == 0) return 0;
    if (piv != k) {
      for (int c = 0; c < n; ++c) std::swap(a[k * n + c], a[piv * n + c]);
      det = -det;
    }
    det *= a[k * n + k];
    for (int r = k + 1; r < n; ++r) {
      HighReal f = a[r * n + k] / a[k * n + k];
      if (f == 0) continue;
      for (int c = k; c < n; ++c) a[r * n + c] -= f * a[k * n + c];
    }
  }
  return det;
}

std::vector<HighReal> invert_gauss(std::vector<HighReal> a, int n) {
  std::vector<HighReal> inv(static_cast<size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i) inv[i * n + i] = 1;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int r = k + 1; r < n; ++r) {
      if (habs(a[r * n + k]) > habs(a[piv * n + k])) piv = r;
    }
    if (a[piv * n + k] == 0) fail(ErrorKind::kDegenerateBasis, "singular basis");
    for (int c = 0; c < n; ++c) {
      std::swap(a[k * n + c], a[piv * n + c]);
      std::swap(inv[k * n + c], inv[piv * n + c]);
    }
    HighReal p = a[k * n + k];
    for (int c = 0; c < n; ++c) {
      a[k * n + c] /= p;
      inv[k * n + c] /= p;
    }
    for (int r = 0; r < n; ++r) {
      if (r == k) continue;
      HighReal f = a[r * n + k];
      if (f == 0) continue;
      for (int c = 0; c < n; ++c) {
        a[r * n + c] -= f * a[k * n + c];
        inv[r * n + c] -= f * inv[k * n + c];
      }
    }
  }
  return inv;
}

// Solves M x = b.
std::vector<HighReal> solve_gauss(const std::vector<HighReal>& M,
                                  const std::vector<HighReal>& b, int n) {
  std::vector<HighReal> inv = invert_gauss(M, n);
  std::vector<HighReal> x(n, 0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) x[r] += inv[r * n + c] * b[c];
  return x;
}

// Laplace expansion; exact for the sparse cores of slice points.
HighReal det_laplace(const std::vector<HighReal>& m, int n) {
  if (n == 1) return m[0];
  if (n == 2) return m[0] * m[3] - m[1] * m[2];
  HighReal det = 0;
  std::vector<HighReal> minor(static_cast<size_t>(n - 1) * (n - 1));
  for (int c = 0; c < n; ++c) {
    if (m[c] == 0) continue;
    for (int r = 1; r < n; ++r) {
      int cc = 0;
      for (int j = 0; j < n; ++j) {
        if (j == c) continue;
        minor[(r - 1) * (n - 1) + cc++] = m[r * n + j];
      }
    }
    HighReal term = m[c] * det_laplace(minor, n - 1);
    det += (c % 2 == 0) ? term : -term;
  }
  return det;
}

Int128 max_abs(const std::vector<Int128>& v) {
  Int128 m = 0;
  for (Int128 x : v) m = std::max(m, x < 0 ? -x : x);
  return m;
}

// Fraction-free elimination; exact for the small matrices used here.
int det_sign(std::vector<mpz_class> a, int n) {
  int sign = 1;
  mpz_class prev = 1;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    while (piv < n && a[piv * n + k] == 0) ++piv;
    if (piv == n) return 0;
    if (piv != k) {
      for (int c = 0; c < n; ++c) std::swap(a[k * n + c], a[piv * n + c]);
      sign = -sign;
    }
    for (int r = k + 1; r < n; ++r) {
      for (int c = k + 1; c < n; ++c) {
        a[r * n + c] = (a[r * n + c] * a[k * n + k] - a[r * n + k] * a[k * n + c]) / prev;
      }
      a[r * n + k] = 0;
    }
    prev = a[k * n + k];
  }
  return sign * sgn(a[(n - 1) * n + (n - 1)]);
}

HighReal norm2_of(const std::vector<HighReal>& v) {
  HighReal s = 0;
  for (HighReal x : v) s += x * x;
  return s;
}

IntVector canonical_sign(const std::vector<Int128>& c) {
  IntVector out(c.size());
  int sign = 0;
  for (Int128 v : c) {
    if (v != 0) {
      sign = v > 0 ? 1 : -1;
      break;
    }
  }
  for (size_t i = 0; i < c.size(); ++i) out[i] = narrow_int64(sign * c[i]);
  return out;
}

detail::IntMat to_intmat(const IntMatrix& G) {
  detail::IntMat m(static_cast<int>(G.rows()), static_cast<int>(G.cols()));
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) m(r, c) = G(r, c);
  return m;
}

IntMatrix from_intmat(const detail::IntMat& m) {
  IntMatrix G(m.rows, m.cols);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) G(r, c) = narrow_int64(m(r, c));
  return G;
}

// Cauchy-Binet: minor_S(diag(f) M G) = prod_{r in S} f_r *
// sum_T det(M[S,T]) det(G[T,:]).
std::vector<HighReal> wedge_high(const UnimodularLattice& L, const detail::IntMat& G) {
  const int d = L.dim();
  const int k = G.cols;
  const auto subsets = detail::k_subsets(d, k);
  const std::vector<Int128> P = detail::maximal_minors(G);
  const auto& core = L.core();
  const auto& s = L.log_scale();
  std::vector<HighReal> out(subsets.size(), 0);
  std::vector<HighReal> sub(static_cast<size_t>(k) * k);
  for (size_t si = 0; si < subsets.size(); ++si) {
    const auto& S = subsets[si];
    HighReal acc = 0;
    for (size_t ti = 0; ti < subsets.size(); ++ti) {
      if (P[ti] == 0) continue;
      const auto& T = subsets[ti];
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) sub[a * k + b] = core[S[a] * d + T[b]];
      HighReal m = det_laplace(sub, k);
      if (m != 0) acc += m * static_cast<HighReal>(P[ti]);
    }
    HighReal scale = 0;
    for (int r : S) scale += s[r];
    out[si] = acc * hexp(scale);
  }
  return out;
}

WedgeElement make_wedge(const UnimodularLattice& L, const detail::IntMat& G,
                        bool saturation_applied) {
  WedgeElement w;
  w.dim = L.dim();
  w.degree = G.cols;
  for (HighReal v : wedge_high(L, G)) w.coords.push_back(to_double(v));
  w.generators = from_intmat(G);
  w.saturation_applied = saturation_applied;
  return w;
}

void sort_wedges(std::vector<WedgeElement>& ws) {
  std::stable_sort(ws.begin(), ws.end(), [](const WedgeElement& a, const WedgeElement& b) {
    return a.norm() < b.norm();
  });
}

}  // namespace

// --- UnimodularLattice -----------------------------------------------------

UnimodularLattice::UnimodularLattice(const Matrix& basis) {
  if (basis.rows() != basis.cols() || basis.rows() < 2 || basis.rows() > kMaxDim) {
    fail(ErrorKind::kInvalidArgument, "basis must be square of size 2..6");
  }
  d_ = static_cast<int>(basis.rows());
  log_scale_.assign(d_, 0);
  core_.resize(static_cast<size_t>(d_) * d_);
  for (int r = 0; r < d_; ++r)
    for (int c = 0; c < d_; ++c) {
      if (!std::isfinite(basis(r, c))) fail(ErrorKind::kInvalidArgument, "non-finite basis entry");
      core_[r * d_ + c] = basis(r, c);
    }
  factor_.assign(d_, 1);
  HighReal det = determinant();
  if (habs(det) < HighReal(1e-300)) fail(ErrorKind::kDegenerateBasis, "singular basis");
  if (habs(det - 1) > HighReal(kUnimodularTolerance)) {
    fail(ErrorKind::kInvalidArgument, "basis determinant " + to_string(det, 12) + " is not 1");
  }
}

UnimodularLattice::UnimodularLattice(std::vector<HighReal> log_scale,
                                     std::vector<HighReal> core, bool check)
    : d_(static_cast<int>(log_scale.size())),
      log_scale_(std::move(log_scale)),
      core_(std::move(core)) {
  if (d_ < 2 || d_ > kMaxDim || core_.size() != static_cast<size_t>(d_) * d_) {
    fail(ErrorKind::kInvalidArgument, "row-scaled lattice needs d in 2..6 and a d x d core");
  }
  factor_.resize(d_);
  for (int r = 0; r < d_; ++r) factor_[r] = hexp(log_scale_[r]);
  if (check) {
    HighReal det = determinant();
    if (habs(det) < HighReal(1e-300)) fail(ErrorKind::kDegenerateBasis, "singular basis");
    if (habs(det - 1) > HighReal(kUnimodularTolerance)) {
      fail(ErrorKind::kInvalidArgument, "basis determinant " + to_string(det, 12) + " is not 1");
    }
  }
}

UnimodularLattice UnimodularLattice::row_scaled(std::vector<HighReal> log_scale,
                                                std::vector<HighReal> core) {
  return UnimodularLattice(std::move(log_scale), std::move(core), true);
}

Matrix UnimodularLattice::basis() const {
  Matrix B(d_, d_);
  for (int r = 0; r < d_; ++r)
    for (int c = 0; c < d_; ++c) B(r, c) = to_double(entry(r, c));
  return B;
}

HighReal UnimodularLattice::entry(int r, int c) const {
  return factor_[r] * core_[r * d_ + c];
}

HighReal UnimodularLattice::determinant() const {
  HighReal scale = 0;
  for (HighReal s : log_scale_) scale += s;
  return det_gauss(core_, d_) * hexp(scale);
}

namespace {

constexpr HighReal kCancelTol = 0x1p-20Q;

// Ogita-Rump-Oishi cascaded summation with error-free products. The Int128
// factor is split at 2^64 so both halves are exact in float128.
HighReal exact_dot(const HighReal* e, const Int128* c, int n) {
  HighReal s = 0, comp = 0;
  auto add = [&](HighReal x) {
    const HighReal t = s + x;
    const HighReal z = t - s;
    comp += (s - (t - z)) + (x - z);
    s = t;
  };
  for (int k = 0; k < n; ++k) {
    if (e[k] == 0 || c[k] == 0) continue;
    const Int128 hi = c[k] >> 64;
    const Int128 lo = c[k] - (hi << 64);
    for (const HighReal part : {ldexpq(static_cast<HighReal>(hi), 64), static_cast<HighReal>(lo)}) {
      if (part == 0) continue;
      const HighReal p = e[k] * part;
      add(p);
      add(fmaq(e[k], part, -p));
    }
  }
  return s + comp;
}

}  // namespace

void UnimodularLattice::apply_core(const Int128* coeffs, HighReal* out) const {
  if (eval_) {
    eval_->apply(coeffs, out);
    return;
  }
  for (int r = 0; r < d_; ++r) {
    HighReal acc = 0, mag = 0;
    for (int c = 0; c < d_; ++c) {
      HighReal e = core_[r * d_ + c];
      if (e != 0 && coeffs[c] != 0) {
        const HighReal p = e * static_cast<HighReal>(coeffs[c]);
        acc += p;
        mag += habs(p);
      }
    }
    // Heavy cancellation (lattices deep in the cusp): redo error-free.
    out[r] = habs(acc) > mag * kCancelTol ? acc : exact_dot(core_.data() + r * d_, coeffs, d_);
  }
}

void UnimodularLattice::coordinates(const Int128* coeffs, HighReal* out) const {
  apply_core(coeffs, out);
  for (int r = 0; r < d_; ++r) out[r] *= factor_[r];
}

UnimodularLattice UnimodularLattice::with_evaluator(std::shared_ptr<const CoreEvaluator> ev) const {
  UnimodularLattice L = *this;
  L.eval_ = std::move(ev);
  return L;
}

void UnimodularLattice::coordinates(const HighReal* coeffs, HighReal* out) const {
  for (int r = 0; r < d_; ++r) {
    HighReal acc = 0;
    for (int c = 0; c < d_; ++c) acc += core_[r * d_ + c] * coeffs[c];
    out[r] = factor_[r] * acc;
  }
}

std::vector<HighReal> UnimodularLattice::vector(const IntVector& coeffs) const {
  if (static_cast<int>(coeffs.size()) != d_) fail(ErrorKind::kInvalidArgument, "coefficient length");
  std::vector<Int128> c(coeffs.begin(), coeffs.end());
  std::vector<HighReal> out(d_);
  coordinates(c.data(), out.data());
  return out;
}

double UnimodularLattice::norm(const IntVector& coeffs) const {
  return to_double(hsqrt(norm2_of(vector(coeffs))));
}

UnimodularLattice UnimodularLattice::dual() const {
  std::vector<HighReal> inv = invert_gauss(core_, d_);
  std::vector<HighReal> core_t(static_cast<size_t>(d_) * d_);
  for (int r = 0; r < d_; ++r)
    for (int c = 0; c < d_; ++c) core_t[r * d_ + c] = inv[c * d_ + r];
  std::vector<HighReal> s(d_);
  for (int r = 0; r < d_; ++r) s[r] = -log_scale_[r];
  UnimodularLattice D(std::move(s), std::move(core_t), false);
  if (eval_) D.eval_ = eval_->dual();
  return D;
}

UnimodularLattice UnimodularLattice::scaled(const std::vector<HighReal>& extra) const {
  if (static_cast<int>(extra.size()) != d_) fail(ErrorKind::kInvalidArgument, "scale length");
  std::vector<HighReal> s = log_scale_;
  HighReal total = 0;
  for (int r = 0; r < d_; ++r) {
    s[r] += extra[r];
    total += extra[r];
  }
  if (habs(total) > HighReal(1e-12)) fail(ErrorKind::kInvalidArgument, "diagonal scaling must have det 1");
  UnimodularLattice L(std::move(s), core_, false);
  L.eval_ = eval_;
  return L;
}

UnimodularLattice UnimodularLattice::transformed(const Matrix& g) const {
  if (g.rows() != d_ || g.cols() != d_) fail(ErrorKind::kInvalidArgument, "transform size");
  std::vector<HighReal> core(static_cast<size_t>(d_) * d_, 0);
  for (int r = 0; r < d_; ++r)
    for (int c = 0; c < d_; ++c) {
      HighReal acc = 0;
      for (int j = 0; j < d_; ++j) acc += HighReal(g(r, j)) * entry(j, c);
      core[r * d_ + c] = acc;
    }
  return UnimodularLattice(std::vector<HighReal>(d_, 0), std::move(core), true);
}

// --- ReducedLattice ----------------------------------------------------------

ReducedLattice::ReducedLattice(UnimodularLattice lattice)
    : lattice_(std::move(lattice)), work_(lattice_) {
  reduce();
}

void ReducedLattice::reduce() {
  const int d = lattice_.dim();
  const auto& s = lattice_.log_scale();
  HighReal lo = s[0], hi = s[0];
  for (HighReal v : s) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const int steps = std::max(1, static_cast<int>(std::ceil(to_double(hi - lo) / kScaleStep)));
  std::vector<Int128> start;
  std::vector<HighReal> factor(d);
  for (int step = 1; step <= steps; ++step) {
    HighReal frac = HighReal(step) / HighReal(steps);
    for (int r = 0; r < d; ++r) factor[r] = hexp(s[r] * frac);
    detail::CoordFn fn = [&](const Int128* c, HighReal* out) {
      work_.apply_core(c, out);
      for (int r = 0; r < d; ++r) out[r] *= factor[r];
    };
    red_ = detail::lll_reduce(d, d, fn, start.empty() ? nullptr : &start);
    if (step == steps) break;
    if (max_abs(red_.basis) >= kRebaseLimit) {
      rebase();
      start.clear();
    } else {
      start = red_.basis;
    }
  }
}

void ReducedLattice::rebase() {
  const int d = lattice_.dim();
  // Column j of B is reduced vector j in working coefficients.
  std::vector<Int128> B(static_cast<size_t>(d) * d);
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) B[k * d + j] = red_.row(j)[k];
  auto T = std::make_shared<detail::BasisTransform>();
  T->d = d;
  T->m.assign(static_cast<size_t>(d) * d, 0);
  for (int r = 0; r < d; ++r)
    for (int j = 0; j < d; ++j) {
      mpz_class acc = 0;
      for (int k = 0; k < d; ++k) {
        if (B[k * d + j] == 0) continue;
        mpz_class t = transform_ ? transform_->m[r * d + k] : mpz_class(r == k ? 1 : 0);
        acc += t * detail::to_mpz(B[k * d + j]);
      }
      T->m[r * d + j] = acc;
    }
  if (det_sign(T->m, d) < 0) {
    for (int k = 0; k < d; ++k) {
      B[k * d] = -B[k * d];
      T->m[k * d] = -T->m[k * d];
    }
  }
  std::vector<HighReal> core(static_cast<size_t>(d) * d);
  std::vector<Int128> col(d), orig(d);
  std::vector<HighReal> out(d);
  for (int j = 0; j < d; ++j) {
    bool exact = lattice_.evaluator() != nullptr;
    for (int k = 0; k < d && exact; ++k) {
      auto v = detail::to_int128(T->m[k * d + j]);
      if (v) {
        orig[k] = *v;
      } else {
        exact = false;
      }
    }
    if (exact) {
      lattice_.apply_core(orig.data(), out.data());
    } else {
      for (int k = 0; k < d; ++k) col[k] = B[k * d + j];
      work_.apply_core(col.data(), out.data());
    }
    for (int r = 0; r < d; ++r) core[r * d + j] = out[r];
  }
  work_ = UnimodularLattice(lattice_.log_scale(), std::move(core), false);
  transform_ = std::move(T);
}

std::optional<std::vector<Int128>> ReducedLattice::to_original(
    const std::vector<Int128>& work) const {
  if (!transform_) return work;
  const int d = lattice_.dim();
  std::vector<Int128> out(d);
  for (int r = 0; r < d; ++r) {
    mpz_class acc = 0;
    for (int k = 0; k < d; ++k) {
      if (work[k] != 0) acc += transform_->m[r * d + k] * detail::to_mpz(work[k]);
    }
    auto v = detail::to_int128(acc);
    if (!v) return std::nullopt;
    out[r] = *v;
  }
  return out;
}

void ReducedLattice::coordinates(const std::vector<Int128>& work,
                                 std::vector<HighReal>& out) const {
  out.resize(lattice_.dim());
  if (!transform_) {
    lattice_.coordinates(work.data(), out.data());
    return;
  }
  if (lattice_.evaluator()) {
    if (auto c = to_original(work)) {
      lattice_.coordinates(c->data(), out.data());
      return;
    }
  }
  work_.coordinates(work.data(), out.data());
}

namespace {

std::vector<Int128> original_or_fail(const ReducedLattice& RL, const std::vector<Int128>& work) {
  auto c = RL.to_original(work);
  if (!c) fail(ErrorKind::kNumericRange, "lattice coefficient exceeds 128 bits");
  return *c;
}

}  // namespace

std::pair<HighReal, std::vector<Int128>> ReducedLattice::shortest_exact() const {
  long double r2 = red_.bstar2[0] * (1 + kRadiusSlack);
  HighReal best = -1;
  std::vector<Int128> best_c;
  std::vector<HighReal> coords;
  detail::EnumerationOptions opts;
  detail::enumerate(red_, r2, opts, [&](const std::vector<Int128>& y, long double) {
    std::vector<Int128> c = detail::combine(red_, y);
    coordinates(c, coords);
    HighReal n2 = norm2_of(coords);
    if (best < 0 || n2 < best) {
      best = n2;
      best_c = c;
      r2 = static_cast<long double>(n2) * (1 + kRadiusSlack);
    }
    return true;
  });
  if (best < 0) fail(ErrorKind::kDegenerateBasis, "enumeration found no vector");
  return {hsqrt(best), original_or_fail(*this, best_c)};
}

ShortestVector ReducedLattice::shortest() const {
  auto [norm, c] = shortest_exact();
  return {to_double(norm), canonical_sign(c)};
}

HighReal ReducedLattice::lambda1() const {
  long double r2 = red_.bstar2[0] * (1 + kRadiusSlack);
  HighReal best = -1;
  std::vector<HighReal> coords;
  detail::EnumerationOptions opts;
  detail::enumerate(red_, r2, opts, [&](const std::vector<Int128>& y, long double) {
    coordinates(detail::combine(red_, y), coords);
    HighReal n2 = norm2_of(coords);
    if (best < 0 || n2 < best) {
      best = n2;
      r2 = static_cast<long double>(n2) * (1 + kRadiusSlack);
    }
    return true;
  });
  if (best < 0) fail(ErrorKind::kDegenerateBasis, "enumeration found no vector");
  return hsqrt(best);
}

bool ReducedLattice::search_within(
    double radius, const EnumerationLimits& limits,
    const std::function<bool(const std::vector<Int128>&, const std::vector<HighReal>&,
                             HighReal)>& visit) const {
  if (!(radius > 0)) fail(ErrorKind::kInvalidArgument, "radius must be positive");
  const HighReal rad2 = HighReal(radius) * HighReal(radius);
  long double r2 = static_cast<long double>(radius) * radius * (1 + kRadiusSlack);
  std::size_t count = 0;
  std::vector<HighReal> coords;
  detail::EnumerationOptions opts;
  opts.max_nodes = 64 * limits.max_points + 100000;
  auto status = detail::enumerate(red_, r2, opts, [&](const std::vector<Int128>& y, long double) {
    std::vector<Int128> c = detail::combine(red_, y);
    coordinates(c, coords);
    HighReal n2 = norm2_of(coords);
    if (n2 > rad2) return true;
    if (++count > limits.max_points) {
      fail(ErrorKind::kEnumerationBudgetExceeded,
           "more than " + std::to_string(limits.max_points) + " vectors within radius");
    }
    return visit(original_or_fail(*this, c), coords, n2);
  });
  if (status == detail::EnumStatus::kNodeBudget) {
    fail(ErrorKind::kEnumerationBudgetExceeded, "enumeration tree exceeded its node budget");
  }
  return status == detail::EnumStatus::kComplete;
}

void ReducedLattice::for_each_within(
    double radius, const EnumerationLimits& limits,
    const std::function<void(const std::vector<Int128>&, const std::vector<HighReal>&,
                             HighReal)>& visit) const {
  search_within(radius, limits,
                [&](const std::vector<Int128>& c, const std::vector<HighReal>& x, HighReal n2) {
                  visit(c, x, n2);
                  return true;
                });
}

std::vector<LatticeVector> ReducedLattice::within(double radius,
                                                  const EnumerationLimits& limits) const {
  std::vector<LatticeVector> out;
  for_each_within(radius, limits,
                  [&](const std::vector<Int128>& c, const std::vector<HighReal>&, HighReal n2) {
                    out.push_back({canonical_sign(c), to_double(hsqrt(n2))});
                  });
  std::sort(out.begin(), out.end(), [](const LatticeVector& a, const LatticeVector& b) {
    if (a.norm != b.norm) return a.norm < b.norm;
    return a.coeffs < b.coeffs;
  });
  return out;
}

ShortestVector shortest_vector(const UnimodularLattice& L) {
  return ReducedLattice(L).shortest();
}

double lambda1(const UnimodularLattice& L) { return to_double(ReducedLattice(L).lambda1()); }

std::vector<LatticeVector> enumerate_vectors_within(const UnimodularLattice& L, double radius,
                                                    const EnumerationLimits& limits) {
  return ReducedLattice(L).within(radius, limits);
}

// --- Grid --------------------------------------------------------------------

Grid::Grid(UnimodularLattice lattice, std::vector<HighReal> frac)
    : lattice_(std::move(lattice)), frac_(std::move(frac)) {
  for (HighReal& f : frac_) f = wrap_unit(f);
}

Grid::Grid(UnimodularLattice lattice, const Vector& shift) : lattice_(std::move(lattice)) {
  const int d = lattice_.dim();
  if (shift.size() != d) fail(ErrorKind::kInvalidArgument, "shift length");
  std::vector<HighReal> B(static_cast<size_t>(d) * d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) B[r * d + c] = lattice_.entry(r, c);
  std::vector<HighReal> v(d);
  for (int r = 0; r < d; ++r) v[r] = shift(r);
  frac_ = solve_gauss(B, v, d);
  for (HighReal& f : frac_) f = wrap_unit(f);
}

Grid Grid::from_lattice_coordinates(UnimodularLattice lattice, std::vector<HighReal> fractional) {
  if (static_cast<int>(fractional.size()) != lattice.dim()) {
    fail(ErrorKind::kInvalidArgument, "shift length");
  }
  return Grid(std::move(lattice), std::move(fractional));
}

Vector Grid::shift() const {
  const int d = lattice_.dim();
  std::vector<HighReal> out(d);
  lattice_.coordinates(frac_.data(), out.data());
  Vector v(d);
  for (int r = 0; r < d; ++r) v(r) = to_double(out[r]);
  return v;
}

Grid Grid::scaled(const std::vector<HighReal>& extra) const {
  return Grid(lattice_.scaled(extra), frac_);
}

std::optional<double> grid_min_norm(const Grid& G, double cap, NormKind norm,
                                    const EnumerationLimits& limits) {
  if (!(cap > 0)) fail(ErrorKind::kInvalidArgument, "cap must be positive");
  const UnimodularLattice& L = G.lattice();
  const int d = L.dim();
  ReducedLattice RL(L);
  const detail::Reduction& red = RL.reduction();
  // Integer part through the (possibly exact) evaluator, shift separately.
  std::vector<HighReal> shift(d), coords(d);
  L.coordinates(G.fractional_shift().data(), shift.data());
  // The reduced basis V is well conditioned, so the centre y = V^{-1}(-shift)
  // is solved in real coordinates.
  std::vector<HighReal> V(static_cast<size_t>(d) * d), minus_s(d);
  for (int j = 0; j < d; ++j) {
    RL.coordinates(std::vector<Int128>(red.row(j), red.row(j) + d), coords);
    for (int r = 0; r < d; ++r) V[r * d + j] = coords[r];
  }
  for (int r = 0; r < d; ++r) minus_s[r] = -shift[r];
  std::vector<HighReal> yc = solve_gauss(V, minus_s, d);

  detail::EnumerationOptions opts;
  opts.symmetric = false;
  opts.center.resize(d);
  for (int r = 0; r < d; ++r) opts.center[r] = static_cast<long double>(yc[r]);
  opts.max_nodes = 64 * limits.max_points + 100000;

  const double radius = norm == NormKind::kSup ? cap * std::sqrt(static_cast<double>(d)) : cap;
  long double r2 = static_cast<long double>(radius) * radius * (1 + kRadiusSlack);
  std::optional<double> best;
  std::size_t count = 0;
  auto status = detail::enumerate(red, r2, opts, [&](const std::vector<Int128>& y, long double) {
    RL.coordinates(detail::combine(red, y), coords);
    for (int r = 0; r < d; ++r) coords[r] += shift[r];
    HighReal value = 0;
    if (norm == NormKind::kSup) {
      for (HighReal x : coords) value = std::max(value, habs(x));
    } else {
      value = hsqrt(norm2_of(coords));
    }
    if (value > HighReal(cap)) return true;
    if (++count > limits.max_points) {
      fail(ErrorKind::kEnumerationBudgetExceeded, "too many grid points within the cap");
    }
    double v = to_double(value);
    if (!best || v < *best) {
      best = v;
      // Only points that can beat the current minimum remain of interest.
      long double lim = static_cast<long double>(v) * v * (1 + kRadiusSlack);
      if (norm == NormKind::kSup) lim *= d;
      r2 = std::min(r2, lim);
    }
    return true;
  });
  if (status == detail::EnumStatus::kNodeBudget)
    fail(ErrorKind::kEnumerationBudgetExceeded, "grid enumeration exceeded its node budget");
  return best;
}

// --- 2D reduction --------------------------------------------------------------

namespace {

struct Gauss2 {
  Int128 c1[2], c2[2];
  HighReal v1[2], v2[2];
  bool second_reduced = true;
};

Gauss2 gauss_2d_raw(const std::function<void(const Int128*, HighReal*)>& coords) {
  Int128 c1[2] = {1, 0};
  Int128 c2[2] = {0, 1};
  HighReal v1[2], v2[2];
  bool second_reduced = true;
  auto n2 = [](const HighReal* v) { return v[0] * v[0] + v[1] * v[1]; };
  coords(c1, v1);
  coords(c2, v2);
  for (int iter = 0; iter < 100000; ++iter) {
    if (n2(v2) < n2(v1)) {
      std::swap(c1[0], c2[0]);
      std::swap(c1[1], c2[1]);
      std::swap(v1[0], v2[0]);
      std::swap(v1[1], v2[1]);
    }
    HighReal mu = (v1[0] * v2[0] + v1[1] * v2[1]) / n2(v1);
    if (habs(mu) > 0x1p64Q) {
      // Any vector using v2 is at least |det| / |v1| long.
      const HighReal det = habs(v1[0] * v2[1] - v1[1] * v2[0]);
      if (det >= n2(v1)) {
        second_reduced = false;
        break;
      }
    }
    Int128 q = round_to_int(mu);
    if (q == 0) break;
    c2[0] = checked_add(c2[0], -checked_mul(q, c1[0]));
    c2[1] = checked_add(c2[1], -checked_mul(q, c1[1]));
    coords(c2, v2);
    if (!(n2(v2) < n2(v1))) break;
  }
  if (n2(v2) < n2(v1)) {
    std::swap(c1[0], c2[0]);
    std::swap(c1[1], c2[1]);
    std::swap(v1[0], v2[0]);
    std::swap(v1[1], v2[1]);
  }
  Gauss2 g;
  g.second_reduced = second_reduced;
  for (int r = 0; r < 2; ++r) {
    g.c1[r] = c1[r];
    g.c2[r] = c2[r];
    g.v1[r] = v1[r];
    g.v2[r] = v2[r];
  }
  return g;
}

// The second vector may need coefficients beyond 64 bits (xi close to a
// rational with huge denominator); only callers wanting them narrow.
GaussReduced gauss_2d(const std::function<void(const Int128*, HighReal*)>& coords) {
  const Gauss2 g = gauss_2d_raw(coords);
  if (!g.second_reduced) {
    fail(ErrorKind::kNumericRange, "second reduced vector needs more than 128-bit coefficients");
  }
  const Int128 *c1 = g.c1, *c2 = g.c2;
  const HighReal *v1 = g.v1, *v2 = g.v2;
  auto n2 = [](const HighReal* v) { return v[0] * v[0] + v[1] * v[1]; };
  GaussReduced out;
  out.first = {narrow_int64(c1[0]), narrow_int64(c1[1])};
  out.second = {narrow_int64(c2[0]), narrow_int64(c2[1])};
  out.basis << to_double(v1[0]), to_double(v2[0]), to_double(v1[1]), to_double(v2[1]);
  out.norm1 = to_double(hsqrt(n2(v1)));
  out.norm2 = to_double(hsqrt(n2(v2)));
  return out;
}

}  // namespace

GaussReduced lagrange_gauss_reduce(const Eigen::Matrix2d& basis) {
  if (!basis.allFinite()) fail(ErrorKind::kInvalidArgument, "non-finite basis entry");
  HighReal det = HighReal(basis(0, 0)) * basis(1, 1) - HighReal(basis(0, 1)) * basis(1, 0);
  if (det == 0) fail(ErrorKind::kDegenerateBasis, "singular 2x2 basis");
  return gauss_2d([&](const Int128* c, HighReal* out) {
    for (int r = 0; r < 2; ++r) {
      out[r] = HighReal(basis(r, 0)) * static_cast<HighReal>(c[0]) +
               HighReal(basis(r, 1)) * static_cast<HighReal>(c[1]);
    }
  });
}

GaussReduced lagrange_gauss_reduce(const UnimodularLattice& L) {
  if (L.dim() != 2) fail(ErrorKind::kInvalidArgument, "expected a 2D lattice");
  return gauss_2d([&](const Int128* c, HighReal* out) { L.coordinates(c, out); });
}

HighReal lambda1_2d(const UnimodularLattice& L) {
  if (L.dim() != 2) fail(ErrorKind::kInvalidArgument, "expected a 2D lattice");
  const Gauss2 g = gauss_2d_raw([&](const Int128* c, HighReal* out) { L.coordinates(c, out); });
  return hsqrt(g.v1[0] * g.v1[0] + g.v1[1] * g.v1[1]);
}

// --- Wedges --------------------------------------------------------------------

std::vector<std::vector<int>> wedge_subsets(int d, int k) { return detail::k_subsets(d, k); }

double WedgeElement::norm() const {
  HighReal s = 0;
  for (double c : coords) s += HighReal(c) * HighReal(c);
  return to_double(hsqrt(s));
}

WedgeElement wedge_coords(const UnimodularLattice& L, const IntMatrix& generators) {
  const int d = L.dim();
  const int k = static_cast<int>(generators.cols());
  if (generators.rows() != d || k < 1 || k > d) {
    fail(ErrorKind::kInvalidArgument, "generators must be d x k with 1 <= k <= d");
  }
  detail::IntMat G = to_intmat(generators);
  bool saturated = detail::is_saturated(G);
  detail::IntMat S = detail::saturate(G);
  return make_wedge(L, S, !saturated);
}

std::vector<WedgeElement> enumerate_primitive_wedges(const UnimodularLattice& L, int k,
                                                     double bound,
                                                     const EnumerationLimits& limits) {
  const int d = L.dim();
  if (k < 1 || k > d - 1) fail(ErrorKind::kInvalidArgument, "degree must be in 1..d-1");
  if (!(bound > 0)) fail(ErrorKind::kInvalidArgument, "bound must be positive");
  std::vector<WedgeElement> out;

  if (k == 1) {
    ReducedLattice RL(L);
    RL.for_each_within(bound, limits,
                       [&](const std::vector<Int128>& c, const std::vector<HighReal>& coords,
                           HighReal) {
                         Int128 g = 0;
                         for (Int128 v : c) g = gcd(g, v);
                         if (g != 1) return;
                         IntVector cs = canonical_sign(c);
                         WedgeElement w;
                         w.dim = d;
                         w.degree = 1;
                         int sign = 1;
                         for (int r = 0; r < d; ++r) {
                           if (c[r] != 0) {
                             sign = c[r] > 0 ? 1 : -1;
                             break;
                           }
                         }
                         for (HighReal x : coords) w.coords.push_back(to_double(sign * x));
                         w.generators = IntMatrix(d, 1);
                         for (int r = 0; r < d; ++r) w.generators(r, 0) = cs[r];
                         out.push_back(std::move(w));
                       });
    sort_wedges(out);
    return out;
  }

  if (k == d - 1) {
    ReducedLattice RD(L.dual());
    RD.for_each_within(bound, limits,
                       [&](const std::vector<Int128>& n, const std::vector<HighReal>&, HighReal) {
                         Int128 g = 0;
                         for (Int128 v : n) g = gcd(g, v);
                         if (g != 1) return;
                         detail::IntMat row(1, d);
                         for (int c = 0; c < d; ++c) row(0, c) = n[c];
                         detail::IntMat K = detail::integer_kernel(row);
                         WedgeElement w = make_wedge(L, K, false);
                         if (w.norm() <= bound * (1 + 1e-12)) out.push_back(std::move(w));
                       });
    sort_wedges(out);
    return out;
  }

  // Generator-level search for 2 <= k <= d - 2.
  ReducedLattice RL(L);
  std::vector<std::vector<Int128>> vecs;
  RL.for_each_within(bound, limits,
                     [&](const std::vector<Int128>& c, const std::vector<HighReal>&, HighReal) {
                       vecs.push_back(c);
                     });
  std::map<std::vector<Int128>, bool> seen;
  const int nv = static_cast<int>(vecs.size());
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  std::size_t combos = 0;
  while (nv >= k) {
    if (++combos > limits.max_points) {
      fail(ErrorKind::kEnumerationBudgetExceeded, "too many generator combinations");
    }
    detail::IntMat G(d, k);
    for (int j = 0; j < k; ++j)
      for (int r = 0; r < d; ++r) G(r, j) = vecs[idx[j]][r];
    std::vector<Int128> P = detail::maximal_minors(G);
    Int128 g = 0;
    for (Int128 v : P) g = gcd(g, v);
    if (g != 0) {
      detail::IntMat S = g == 1 ? G : detail::saturate(G);
      std::vector<Int128> key = detail::maximal_minors(S);
      for (Int128 v : key) {
        if (v != 0) {
          if (v < 0)
            for (Int128& x : key) x = -x;
          break;
        }
      }
      if (seen.emplace(key, true).second) {
        WedgeElement w = make_wedge(L, S, false);
        if (w.norm() <= bound * (1 + 1e-12)) out.push_back(std::move(w));
      }
    }
    int i = k - 1;
    while (i >= 0 && idx[i] == nv - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  sort_wedges(out);
  return out;
}

}  // namespace latflow::lattice
