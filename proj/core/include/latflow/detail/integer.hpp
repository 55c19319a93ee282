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

#ifndef LATFLOW_DETAIL_INTEGER_HPP_
#define LATFLOW_DETAIL_INTEGER_HPP_

#include <vector>

#include "latflow/numeric.hpp"

namespace latflow::detail {

// Dense row-major integer matrix with checked arithmetic in the helpers below.
struct IntMat {
  int rows = 0;
  int cols = 0;
  std::vector<Int128> a;

  IntMat() = default;
  IntMat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0) {}

  Int128& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  Int128 operator()(int r, int c) const {
    return a[static_cast<size_t>(r) * cols + c];
  }

  IntMat transposed() const;
  static IntMat identity(int n);
};

// Columns form a basis of {x in Z^cols : A x = 0}. The basis is saturated
// because it is read off a unimodular column transform.
IntMat integer_kernel(const IntMat& A);

// Fraction-free (Bareiss) determinant.
Int128 determinant(IntMat M);

// All k x k minors of a d x k matrix, rows indexed by k-subsets in
// lexicographic order.
std::vector<Int128> maximal_minors(const IntMat& G);

// Basis of (span_Q G) ∩ Z^d. Throws RankDeficient if G has rank < cols.
IntMat saturate(const IntMat& G);

// True when the gcd of the maximal minors is 1.
bool is_saturated(const IntMat& G);

// k-subsets of {0..d-1} in lexicographic order.
std::vector<std::vector<int>> k_subsets(int d, int k);

int binomial(int n, int k);

}  // namespace latflow::detail

#endif  // LATFLOW_DETAIL_INTEGER_HPP_
