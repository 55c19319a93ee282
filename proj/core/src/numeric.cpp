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

#include "latflow/numeric.hpp"

#include <algorithm>
#include <cmath>

#include "latflow/errors.hpp"

namespace latflow {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kDegenerateBasis: return "DegenerateBasis";
    case ErrorKind::kEnumerationBudgetExceeded:
      return "EnumerationBudgetExceeded";
    case ErrorKind::kRankDeficient: return "RankDeficient";
    case ErrorKind::kLeavesSlice: return "LeavesSlice";
    case ErrorKind::kNumericRange: return "NumericRange";
    case ErrorKind::kCalibrationUnstable: return "CalibrationUnstable";
    case ErrorKind::kGridBudgetExceeded: return "GridBudgetExceeded";
    case ErrorKind::kParse: return "ParseError";
  }
  return "Unknown";
}

std::string to_string(HighReal x, int significant_digits) {
  char buf[128];
  quadmath_snprintf(buf, sizeof buf, "%.*Qg", significant_digits, x);
  return buf;
}

std::string to_string(Int128 x) {
  if (x == 0) return "0";
  bool neg = x < 0;
  unsigned __int128 u = neg ? -static_cast<unsigned __int128>(x)
                            : static_cast<unsigned __int128>(x);
  std::string s;
  while (u > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
    u /= 10;
  }
  if (neg) s.push_back('-');
  std::reverse(s.begin(), s.end());
  return s;
}

std::int64_t narrow_int64(Int128 x) {
  if (x > std::numeric_limits<std::int64_t>::max() ||
      x < std::numeric_limits<std::int64_t>::min()) {
    fail(ErrorKind::kNumericRange, "coefficient " + to_string(x) +
                                       " does not fit in 64 bits");
  }
  return static_cast<std::int64_t>(x);
}

Int128 checked_mul(Int128 a, Int128 b) {
  Int128 r;
  if (__builtin_mul_overflow(a, b, &r)) {
    fail(ErrorKind::kNumericRange, "128-bit integer overflow in product");
  }
  return r;
}

Int128 checked_add(Int128 a, Int128 b) {
  Int128 r;
  if (__builtin_add_overflow(a, b, &r)) {
    fail(ErrorKind::kNumericRange, "128-bit integer overflow in sum");
  }
  return r;
}

Int128 gcd(Int128 a, Int128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    Int128 r = a % b;
    a = b;
    b = r;
  }
  return a;
}

Int128 round_to_int(HighReal x) {
  HighReal r = roundq(x);
  if (!(habs(r) < HighReal(1.7e38))) {
    fail(ErrorKind::kNumericRange, "rounding target " + to_string(x, 6) +
                                       " outside the integer range");
  }
  return static_cast<Int128>(r);
}

Int128 round_to_int(long double x) {
  long double r = std::round(x);
  if (!(std::fabs(r) < 1.7e38L)) {
    fail(ErrorKind::kNumericRange, "rounding target outside the integer range");
  }
  return static_cast<Int128>(r);
}

}  // namespace latflow
