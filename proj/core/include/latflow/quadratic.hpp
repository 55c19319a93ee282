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

// Exact numbers in Q and Q(sqrt D), a small expression parser for them, and
// the target vectors (xi, theta) used by the Diophantine front end.
//
// Grammar (whitespace ignored):
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | primary
//   primary := INTEGER | DECIMAL | 'sqrt' INTEGER | 'sqrt' '(' expr ')'
//            | 'phi' | 'wrap' '(' expr ')' | '(' expr ')'
// INTEGER literals are exact; DECIMAL literals (with '.' or an exponent) make
// the result inexact. phi = (sqrt5 - 1) / 2 and wrap(x) = x - floor(x + 1/2).
// Results stay exact while every irrational part shares one sqrt D.

#ifndef LATFLOW_QUADRATIC_HPP_
#define LATFLOW_QUADRATIC_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "latflow/numeric.hpp"

namespace latflow::diophantine {

// num / den with gcd(num, den) = 1 and den > 0. Arithmetic is overflow
// checked.
class Rational {
 public:
  Rational() = default;
  Rational(Int128 n) : num_(n) {}  // NOLINT(google-explicit-constructor)
  static Rational make(Int128 num, Int128 den);

  Int128 num() const { return num_; }
  Int128 den() const { return den_; }
  bool is_zero() const { return num_ == 0; }
  bool is_integer() const { return den_ == 1; }
  int sign() const { return num_ > 0 ? 1 : (num_ < 0 ? -1 : 0); }
  Int128 floor() const;
  HighReal value() const;
  std::string str() const;

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a) { return make(-a.num_, a.den_); }
  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }

 private:
  Int128 num_ = 0;
  Int128 den_ = 1;
};

// a + b sqrt(D) with D >= 2 square-free, or b = 0 and D = 1.
class Quadratic {
 public:
  Quadratic() = default;
  Quadratic(Rational a) : a_(a) {}  // NOLINT(google-explicit-constructor)
  // Canonicalizes: D is made square-free, perfect squares fold into a.
  static Quadratic make(Rational a, Rational b, std::int64_t D);
  static Quadratic sqrt_of(Int128 n);

  const Rational& a() const { return a_; }
  const Rational& b() const { return b_; }
  std::int64_t D() const { return D_; }
  bool is_rational() const { return b_.is_zero(); }
  int sign() const;
  Int128 floor() const;
  HighReal value() const;
  std::string str() const;

  // Throw Parse when the operands use different square roots, or on
  // division by zero.
  friend Quadratic operator+(const Quadratic& x, const Quadratic& y);
  friend Quadratic operator-(const Quadratic& x, const Quadratic& y);
  friend Quadratic operator*(const Quadratic& x, const Quadratic& y);
  friend Quadratic operator/(const Quadratic& x, const Quadratic& y);
  friend Quadratic operator-(const Quadratic& x) { return make(-x.a_, -x.b_, x.D_); }
  friend bool operator==(const Quadratic& x, const Quadratic& y) {
    return x.a_ == y.a_ && x.b_ == y.b_ && x.D_ == y.D_;
  }

 private:
  Rational a_;
  Rational b_;
  std::int64_t D_ = 1;
};

// A real number with an optional exact representation.
struct Number {
  HighReal value = 0;
  std::optional<Quadratic> exact;

  static Number from_double(double v);
  static Number from_exact(const Quadratic& q);
  bool is_exact() const { return exact.has_value(); }
  double to_double() const { return static_cast<double>(value); }
  std::string str() const;
};

// Throws Parse on malformed input.
Number parse_number(const std::string& text);
// Comma-separated list; commas inside parentheses do not split.
std::vector<Number> parse_vector(const std::string& text);

// x - floor(x + 1/2), exact when x is.
Number wrap(const Number& x);

struct TargetSpec {
  std::vector<Number> xi;
  std::vector<Number> theta;  // empty when not given

  bool exact() const;
  std::vector<HighReal> xi_values() const;
  std::vector<HighReal> theta_values() const;
};

// Throws Parse, or InvalidArgument when theta is given with another length.
TargetSpec parse_target(const std::string& xi, const std::string& theta = "");

}  // namespace latflow::diophantine

#endif  // LATFLOW_QUADRATIC_HPP_
