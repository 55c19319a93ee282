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


// JSON emission with fixed 17-significant-digit floats, for any
// nlohmann-style JSON value type. Non-finite numbers become null.

#ifndef LATFLOW_DETAIL_JSON_DUMP_HPP_
#define LATFLOW_DETAIL_JSON_DUMP_HPP_

#include <cmath>
#include <cstdio>
#include <string>

namespace latflow::detail {

inline std::string format_json_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

template <class Json>
void dump_json_into(const Json& j, std::string& out, int indent, int level) {
  const std::string pad(static_cast<size_t>(indent) * (level + 1), ' ');
  const std::string close_pad(static_cast<size_t>(indent) * level, ' ');
  const char* nl = indent > 0 ? "\n" : "";
  if (j.is_number_float()) {
    out += format_json_double(j.template get<double>());
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
      return;
    }
    out += "[";
    out += nl;
    bool first = true;
    for (const auto& e : j) {
      if (!first) {
        out += ",";
        out += nl;
      }
      first = false;
      out += pad;
      dump_json_into(e, out, indent, level + 1);
    }
    out += nl;
    out += close_pad + "]";
  } else if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{";
    out += nl;
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) {
        out += ",";
        out += nl;
      }
      first = false;
      out += pad + Json(it.key()).dump() + (indent > 0 ? ": " : ":");
      dump_json_into(it.value(), out, indent, level + 1);
    }
    out += nl;
    out += close_pad + "}";
  } else {
    out += j.dump();
  }
}

template <class Json>
std::string dump_json(const Json& j, int indent = 2) {
  std::string out;
  dump_json_into(j, out, indent, 0);
  return out;
}

}  // namespace latflow::detail

#endif  // LATFLOW_DETAIL_JSON_DUMP_HPP_
