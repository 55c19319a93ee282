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


// GMP conversions shared by the library sources. Not installed.
#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>

#include "latflow/numeric.hpp"

namespace latflow::detail {

inline mpz_class to_mpz(Int128 v) {
  unsigned __int128 u = v < 0 ? -static_cast<unsigned __int128>(v)
                              : static_cast<unsigned __int128>(v);
  std::uint64_t words[2] = {static_cast<std::uint64_t>(u),
                            static_cast<std::uint64_t>(u >> 64)};
  mpz_class z;
  mpz_import(z.get_mpz_t(), 2, -1, sizeof(std::uint64_t), 0, 0, words);
  if (v < 0) z = -z;
  return z;
}

// Empty when |z| >= 2^127.
inline std::optional<Int128> to_int128(const mpz_class& z) {
  if (mpz_sizeinbase(z.get_mpz_t(), 2) > 127) return std::nullopt;
  std::uint64_t words[2] = {0, 0};
  mpz_export(words, nullptr, -1, sizeof(std::uint64_t), 0, 0, z.get_mpz_t());
  Int128 v = static_cast<Int128>((static_cast<unsigned __int128>(words[1]) << 64) | words[0]);
  return sgn(z) < 0 ? -v : v;
}

inline HighReal to_high(const mpz_class& z) {
  const std::size_t n = mpz_size(z.get_mpz_t());
  HighReal r = 0;
  const HighReal base = HighReal(18446744073709551616.0);  // 2^64
  for (std::size_t k = n; k-- > 0;) {
    r = r * base + static_cast<HighReal>(mpz_getlimbn(z.get_mpz_t(), k));
  }
  return sgn(z) < 0 ? -r : r;
}

}  // namespace latflow::detail
