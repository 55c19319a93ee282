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

#include "latflow/detail/integer.hpp"

#include <utility>

#include "latflow/errors.hpp"

namespace latflow::detail {

namespace {

Int128 iabs(Int128 x) { return x < 0 ? -x : x; }

void swap_cols(IntMat& M, int i, int j) {
  if (i == j) return;
  for (int r = 0; r < M.rows; ++r) std::swap(M(r, i), M(r, j));
}

// col_j -= q * col_p
void axpy_col(IntMat& M, int j, int p, Int128 q) {
  for (int r = 0; r < M.rows; ++r) {
    M(r, j) = checked_add(M(r, j), -checked_mul(q, M(r, p)));
  }
}

}  // namespace

IntMat IntMat::transposed() const {
  IntMat t(cols, rows);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) t(c, r) = (*this)(r, c);
  return t;
}

IntMat IntMat::identity(int n) {
  IntMat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

IntMat integer_kernel(const IntMat& A) {
  const int n = A.cols;
  IntMat W = A;
  IntMat U = IntMat::identity(n);
  int p = 0;
  for (int r = 0; r < A.rows && p < n; ++r) {
    while (true) {
      int best = -1;
      for (int j = p; j < n; ++j) {
        if (W(r, j) != 0 && (best < 0 || iabs(W(r, j)) < iabs(W(r, best)))) {
          best = j;
        }
      }
      if (best < 0) break;
      swap_cols(W, p, best);
      swap_cols(U, p, best);
      bool clean = true;
      for (int j = p + 1; j < n; ++j) {
        if (W(r, j) == 0) continue;
        Int128 q = W(r, j) / W(r, p);
        axpy_col(W, j, p, q);
        axpy_col(U, j, p, q);
        if (W(r, j) != 0) clean = false;
      }
      if (clean) {
        ++p;
        break;
      }
    }
  }
  IntMat K(n, n - p);
  for (int c = p; c < n; ++c)
    for (int r = 0; r < n; ++r) K(r, c - p) = U(r, c);
  return K;
}

Int128 determinant(IntMat M) {
  const int n = M.rows;
  if (n == 0) return 1;
  int sign = 1;
  Int128 prev = 1;
  for (int k = 0; k < n - 1; ++k) {
    if (M(k, k) == 0) {
      int piv = -1;
      for (int r = k + 1; r < n; ++r) {
        if (M(r, k) != 0) {
          piv = r;
          break;
        }
      }
      if (piv < 0) return 0;
      for (int c = 0; c < n; ++c) std::swap(M(k, c), M(piv, c));
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i) {
      for (int j = k + 1; j < n; ++j) {
        Int128 v = checked_add(checked_mul(M(i, j), M(k, k)),
                               -checked_mul(M(i, k), M(k, j)));
        M(i, j) = v / prev;
      }
      M(i, k) = 0;
    }
    prev = M(k, k);
  }
  return sign * M(n - 1, n - 1);
}

std::vector<std::vector<int>> k_subsets(int d, int k) {
  std::vector<std::vector<int>> out;
  if (k < 0 || k > d) return out;
  std::vector<int> s(k);
  for (int i = 0; i < k; ++i) s[i] = i;
  while (true) {
    out.push_back(s);
    int i = k - 1;
    while (i >= 0 && s[i] == d - k + i) --i;
    if (i < 0) break;
    ++s[i];
    for (int j = i + 1; j < k; ++j) s[j] = s[j - 1] + 1;
  }
  return out;
}

int binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return static_cast<int>(r);
}

std::vector<Int128> maximal_minors(const IntMat& G) {
  const int k = G.cols;
  std::vector<Int128> out;
  for (const auto& S : k_subsets(G.rows, k)) {
    IntMat sub(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) sub(i, j) = G(S[i], j);
    out.push_back(determinant(sub));
  }
  return out;
}

bool is_saturated(const IntMat& G) {
  Int128 g = 0;
  for (Int128 m : maximal_minors(G)) g = gcd(g, m);
  return g == 1;
}

IntMat saturate(const IntMat& G) {
  Int128 g = 0;
  for (Int128 m : maximal_minors(G)) g = gcd(g, m);
  if (g == 0) fail(ErrorKind::kRankDeficient, "generators are not independent");
  if (g == 1) return G;
  IntMat K = integer_kernel(G.transposed());
  if (K.cols == 0) return IntMat::identity(G.rows);
  return integer_kernel(K.transposed());
}

}  // namespace latflow::detail
