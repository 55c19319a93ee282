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


// Shortest round-trip formatting for CSV cells.

#ifndef LATFLOW_DETAIL_CSV_HPP_
#define LATFLOW_DETAIL_CSV_HPP_

#include <charconv>
#include <cmath>
#include <string>

namespace latflow::detail {

inline std::string format_csv_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace latflow::detail

#endif  // LATFLOW_DETAIL_CSV_HPP_
