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

#ifndef LATFLOW_NUMERIC_HPP_
#define LATFLOW_NUMERIC_HPP_

#include <quadmath.h>

#include <cstdint>
#include <limits>
#include <string>

namespace latflow {

// 113-bit binary floating point. Lattice coordinates are formed in this type
// from exact integer coefficients.
using HighReal = __float128;
using Int128 = __int128;

inline HighReal hexp(HighReal x) { return expq(x); }
inline HighReal hlog(HighReal x) { return logq(x); }
inline HighReal hsqrt(HighReal x) { return sqrtq(x); }
inline HighReal hfloor(HighReal x) { return floorq(x); }
inline HighReal habs(HighReal x) { return x < 0 ? -x : x; }
inline double to_double(HighReal x) { return static_cast<double>(x); }

// Wraps into the half-open interval [-1/2, 1/2).
inline HighReal wrap_unit(HighReal x) {
  HighReal r = x - hfloor(x + HighReal(0.5));
  if (r >= HighReal(0.5)) r -= 1;
  if (r < HighReal(-0.5)) r += 1;
  return r;
}

inline double wrap_unit(double x) { return to_double(wrap_unit(HighReal(x))); }

std::string to_string(HighReal x, int significant_digits = 34);
std::string to_string(Int128 x);

// Throws NumericRange when the value does not fit.
std::int64_t narrow_int64(Int128 x);
Int128 checked_mul(Int128 a, Int128 b);
Int128 checked_add(Int128 a, Int128 b);

Int128 gcd(Int128 a, Int128 b);

// Rounds to the nearest integer, ties away from zero; throws NumericRange
// outside the Int128 range.
Int128 round_to_int(HighReal x);
Int128 round_to_int(long double x);

}  // namespace latflow

#endif  // LATFLOW_NUMERIC_HPP_
