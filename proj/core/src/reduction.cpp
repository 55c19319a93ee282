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

#include "latflow/detail/reduction.hpp"

#include <algorithm>
#include <cmath>

#include "latflow/errors.hpp"

namespace latflow::detail {

namespace {

constexpr HighReal kMaxMultiplier = 0x1p64Q;

// Gram-Schmidt data are kept in HighReal: deep in the cusp the basis mixes
// vectors whose lengths differ by e^40 and more, and long double loses the
// projections of long vectors onto short ones.
class LllState {
 public:
  LllState(int n, int m, const CoordFn& coords, long double delta)
      : n_(n), m_(m), coords_(coords), delta_(delta),
        c_(static_cast<size_t>(n) * m), bstar_(static_cast<size_t>(n) * m),
        mu_(static_cast<size_t>(n) * n, 0), b2_(n, 0), tmp_(m) {}

  Reduction run(const std::vector<Int128>* start) {
    red_.n = n_;
    red_.m = m_;
    if (start != nullptr) {
      red_.basis = *start;
    } else {
      red_.basis.assign(static_cast<size_t>(n_) * n_, 0);
      for (int i = 0; i < n_; ++i) red_.basis[static_cast<size_t>(i) * n_ + i] = 1;
    }
    for (int j = 0; j < n_; ++j) refresh(j);

    int k = 1;
    int valid = 0;
    long long guard = 0;
    while (k < n_) {
      if (++guard > 2'000'000) {
        fail(ErrorKind::kNumericRange, "basis reduction did not terminate");
      }
      for (int j = valid; j < k; ++j) gram_schmidt_row(j);
      valid = k;
      size_reduce(k);
      HighReal mk = mu(k, k - 1);
      if (b2_[k] < (HighReal(delta_) - mk * mk) * b2_[k - 1]) {
        swap_rows(k, k - 1);
        valid = k - 1;
        k = std::max(k - 1, 1);
      } else {
        valid = k + 1;
        ++k;
      }
    }
    for (int j = valid; j < n_; ++j) gram_schmidt_row(j);
    red_.mu.resize(mu_.size());
    red_.bstar2.resize(n_);
    for (std::size_t i = 0; i < mu_.size(); ++i) red_.mu[i] = static_cast<long double>(mu_[i]);
    for (int i = 0; i < n_; ++i) red_.bstar2[i] = static_cast<long double>(b2_[i]);
    return std::move(red_);
  }

 private:
  HighReal& mu(int i, int j) { return mu_[static_cast<size_t>(i) * n_ + j]; }
  Int128* row(int j) { return red_.basis.data() + static_cast<size_t>(j) * n_; }

  void refresh(int j) {
    coords_(row(j), c_.data() + static_cast<size_t>(j) * m_);
  }

  // Modified Gram-Schmidt against the stored rows 0..k-1.
  void gram_schmidt_row(int k) {
    HighReal* v = bstar_.data() + static_cast<size_t>(k) * m_;
    std::copy_n(c_.data() + static_cast<size_t>(k) * m_, m_, v);
    for (int j = 0; j < k; ++j) {
      const HighReal* b = bstar_.data() + static_cast<size_t>(j) * m_;
      HighReal dot = 0;
      for (int r = 0; r < m_; ++r) dot += v[r] * b[r];
      HighReal q = dot / b2_[j];
      mu(k, j) = q;
      for (int r = 0; r < m_; ++r) v[r] -= q * b[r];
    }
    HighReal s = 0;
    for (int r = 0; r < m_; ++r) s += v[r] * v[r];
    if (!(s > 0) || !std::isfinite(static_cast<double>(s))) {
      fail(ErrorKind::kDegenerateBasis, "basis vectors are numerically dependent");
    }
    b2_[k] = s;
  }

  void size_reduce(int k) {
    for (int pass = 0; pass < 200; ++pass) {
      gram_schmidt_row(k);
      HighReal bk2 = 0;
      for (int r = 0; r < m_; ++r) bk2 += c_[static_cast<size_t>(k) * m_ + r] * c_[static_cast<size_t>(k) * m_ + r];
      bool changed = false;
      for (int j = k - 1; j >= 0; --j) {
        HighReal q = mu(k, j);
        // Rounding in the coordinates of b_k shows up in mu(k, j) amplified by
        // |b_k| / |b_j*|; below that level mu cannot be reduced further.
        const HighReal noise = hsqrt(bk2 / b2_[j]) * HighReal(0x1p-104);
        if (habs(q) <= HighReal(0.51) + noise) continue;
        // Multipliers this large only arise against a vector that is
        // shorter by a factor > 2^64; enumeration below |b_k*| never uses
        // the pair, so it stays unreduced and coefficients stay bounded.
        if (habs(q) > kMaxMultiplier) continue;
        Int128 r = round_to_int(q);
        Int128* bk = row(k);
        const Int128* bj = row(j);
        for (int c = 0; c < n_; ++c) bk[c] = checked_add(bk[c], -checked_mul(r, bj[c]));
        HighReal rl = static_cast<HighReal>(r);
        for (int l = 0; l < j; ++l) mu(k, l) -= rl * mu(j, l);
        mu(k, j) -= rl;
        changed = true;
      }
      if (!changed) return;
      refresh(k);
    }
    fail(ErrorKind::kNumericRange, "size reduction did not converge");
  }

  void swap_rows(int a, int b) {
    std::swap_ranges(row(a), row(a) + n_, row(b));
    std::swap_ranges(c_.begin() + static_cast<long>(a) * m_,
                     c_.begin() + static_cast<long>(a + 1) * m_,
                     c_.begin() + static_cast<long>(b) * m_);
  }

  int n_;
  int m_;
  const CoordFn& coords_;
  long double delta_;
  std::vector<HighReal> c_;
  std::vector<HighReal> bstar_;
  std::vector<HighReal> mu_;
  std::vector<HighReal> b2_;
  std::vector<HighReal> tmp_;
  Reduction red_;
};

class Enumerator {
 public:
  Enumerator(const Reduction& red, long double& r2, const EnumerationOptions& opts,
             const std::function<bool(const std::vector<Int128>&, long double)>& visit)
      : red_(red), r2_(r2), opts_(opts), visit_(visit), y_(red.n, 0),
        center_(red.n, 0.0L) {
    if (!opts.center.empty()) center_ = opts.center;
  }

  EnumStatus run() {
    if (red_.n == 0) return EnumStatus::kComplete;
    recurse(red_.n - 1, 0.0L, true);
    if (stopped_) return EnumStatus::kStopped;
    return aborted_ ? EnumStatus::kNodeBudget : EnumStatus::kComplete;
  }

 private:
  void recurse(int i, long double partial, bool zero_above) {
    if (aborted_) return;
    if (opts_.max_nodes != 0 && ++nodes_ > opts_.max_nodes) {
      aborted_ = true;
      return;
    }
    long double ctr = center_[i];
    for (int j = i + 1; j < red_.n; ++j) {
      ctr -= (static_cast<long double>(y_[j]) - center_[j]) * red_.mu_at(j, i);
    }
    const long double b = red_.bstar2[i];
    long double rem = r2_ - partial;
    if (rem < 0) return;
    long double w = std::sqrt(rem / b);
    Int128 lo = round_to_int(std::ceil(ctr - w));
    Int128 hi = round_to_int(std::floor(ctr + w));
    const bool sym = opts_.symmetric && zero_above;
    if (sym && lo < 0) lo = 0;
    for (Int128 v = lo; v <= hi; ++v) {
      long double z = static_cast<long double>(v) - ctr;
      long double p = partial + b * z * z;
      if (p > r2_) {
        if (z > 0) break;
        continue;
      }
      y_[i] = v;
      if (i == 0) {
        if (sym && v == 0) continue;
        if (!visit_(y_, p)) {
          stopped_ = aborted_ = true;
          return;
        }
      } else {
        recurse(i - 1, p, zero_above && v == 0);
      }
      if (aborted_) return;
    }
    y_[i] = 0;
  }

  const Reduction& red_;
  long double& r2_;
  const EnumerationOptions& opts_;
  const std::function<bool(const std::vector<Int128>&, long double)>& visit_;
  std::vector<Int128> y_;
  std::vector<long double> center_;
  std::size_t nodes_ = 0;
  bool aborted_ = false;
  bool stopped_ = false;
};

}  // namespace

Reduction lll_reduce(int n, int m, const CoordFn& coords,
                     const std::vector<Int128>* start, long double delta) {
  LllState state(n, m, coords, delta);
  return state.run(start);
}

std::vector<Int128> combine(const Reduction& red, const std::vector<Int128>& y) {
  std::vector<Int128> c(red.n, 0);
  for (int j = 0; j < red.n; ++j) {
    if (y[j] == 0) continue;
    const Int128* b = red.row(j);
    for (int r = 0; r < red.n; ++r) c[r] = checked_add(c[r], checked_mul(y[j], b[r]));
  }
  return c;
}

EnumStatus enumerate(const Reduction& red, long double& r2, const EnumerationOptions& opts,
                     const std::function<bool(const std::vector<Int128>&, long double)>& visit) {
  Enumerator e(red, r2, opts, visit);
  return e.run();
}

}  // namespace latflow::detail
