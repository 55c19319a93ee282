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

#ifndef LATFLOW_DETAIL_REDUCTION_HPP_
#define LATFLOW_DETAIL_REDUCTION_HPP_

#include <cstddef>
#include <functional>
#include <vector>

#include "latflow/numeric.hpp"

namespace latflow::detail {

// Maps an integer coefficient vector (length n) to ambient coordinates
// (length m). Implementations must be exact up to HighReal rounding.
using CoordFn = std::function<void(const Int128* coeffs, HighReal* out)>;

// LLL-reduced basis expressed through integer coefficient vectors, with its
// Gram-Schmidt data.
struct Reduction {
  int n = 0;
  int m = 0;
  std::vector<Int128> basis;        // row j: coefficients of reduced vector j
  std::vector<long double> mu;      // mu[i * n + j], j < i
  std::vector<long double> bstar2;  // squared Gram-Schmidt norms

  const Int128* row(int j) const { return basis.data() + static_cast<size_t>(j) * n; }
  long double mu_at(int i, int j) const { return mu[static_cast<size_t>(i) * n + j]; }
};

// Integer-exact LLL: coefficient updates are exact, coordinates are
// recomputed from coefficients after every update. `start` (n*n, row-major)
// seeds the basis; identity otherwise.
Reduction lll_reduce(int n, int m, const CoordFn& coords,
                     const std::vector<Int128>* start = nullptr,
                     long double delta = 0.99L);

// Coefficients of sum_j y_j * (reduced vector j).
std::vector<Int128> combine(const Reduction& red, const std::vector<Int128>& y);

struct EnumerationOptions {
  // Centre in reduced-basis coordinates; lattice enumeration when empty.
  std::vector<long double> center;
  // Keep one of each ±y pair and skip y = 0 (lattice enumeration only).
  bool symmetric = true;
  std::size_t max_nodes = 0;  // 0: unlimited
};

enum class EnumStatus { kComplete, kStopped, kNodeBudget };

// Calls visit(y, partial_norm2) for every integer y with
// sum_i bstar2_i (y_i - c_i(y))^2 <= r2. `r2` may be lowered by the visitor
// to prune the remaining search; returning false stops the search.
EnumStatus enumerate(const Reduction& red, long double& r2,
                     const EnumerationOptions& opts,
                     const std::function<bool(const std::vector<Int128>& y,
                                              long double norm2)>& visit);

}  // namespace latflow::detail

#endif  // LATFLOW_DETAIL_REDUCTION_HPP_
