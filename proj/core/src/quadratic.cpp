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

#include "latflow/quadratic.hpp"

#include <cctype>

#include "latflow/errors.hpp"

namespace latflow::diophantine {

namespace {

Int128 floor_div(Int128 n, Int128 d) {
  Int128 q = n / d;
  if (n % d != 0 && ((n < 0) != (d < 0))) --q;
  return q;
}

constexpr std::int64_t kMaxRadicand = 1'000'000'000'000;

// (s, r) with n = s^2 r and r square-free.
std::pair<std::int64_t, std::int64_t> split_square(std::int64_t n) {
  if (n > kMaxRadicand) {
    fail(ErrorKind::kParse, "radicand " + std::to_string(n) + " exceeds 10^12");
  }
  std::int64_t s = 1;
  std::int64_t r = n;
  for (std::int64_t f = 2; f * f <= r; ++f) {
    while (r % (f * f) == 0) {
      r /= f * f;
      s *= f;
    }
  }
  return {s, r};
}

bool compatible(const Quadratic& x, const Quadratic& y) {
  return x.is_rational() || y.is_rational() || x.D() == y.D();
}

std::int64_t common_D(const Quadratic& x, const Quadratic& y) {
  if (!compatible(x, y)) {
    fail(ErrorKind::kInvalidArgument,
         "sqrt" + std::to_string(x.D()) + " and sqrt" + std::to_string(y.D()) +
             " do not share a quadratic field");
  }
  return x.is_rational() ? y.D() : x.D();
}

}  // namespace

Rational Rational::make(Int128 num, Int128 den) {
  if (den == 0) fail(ErrorKind::kInvalidArgument, "division by zero");
  if (den < 0) {
    num = checked_mul(num, -1);
    den = checked_mul(den, -1);
  }
  Int128 g = gcd(num, den);
  Rational r;
  r.num_ = num / g;
  r.den_ = den / g;
  return r;
}

Int128 Rational::floor() const { return floor_div(num_, den_); }

HighReal Rational::value() const {
  return static_cast<HighReal>(num_) / static_cast<HighReal>(den_);
}

std::string Rational::str() const {
  if (den_ == 1) return to_string(num_);
  return to_string(num_) + "/" + to_string(den_);
}

Rational operator+(const Rational& a, const Rational& b) {
  Int128 g = gcd(a.den_, b.den_);
  Int128 num = checked_add(checked_mul(a.num_, b.den_ / g), checked_mul(b.num_, a.den_ / g));
  return Rational::make(num, checked_mul(a.den_, b.den_ / g));
}

Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }

Rational operator*(const Rational& a, const Rational& b) {
  Int128 g1 = gcd(a.num_, b.den_);
  Int128 g2 = gcd(b.num_, a.den_);
  if (g1 == 0) g1 = 1;
  if (g2 == 0) g2 = 1;
  return Rational::make(checked_mul(a.num_ / g1, b.num_ / g2),
                        checked_mul(a.den_ / g2, b.den_ / g1));
}

Rational operator/(const Rational& a, const Rational& b) {
  if (b.is_zero()) fail(ErrorKind::kInvalidArgument, "division by zero");
  return a * Rational::make(b.den_, b.num_);
}

Quadratic Quadratic::make(Rational a, Rational b, std::int64_t D) {
  if (D < 0) fail(ErrorKind::kInvalidArgument, "negative radicand");
  Quadratic q;
  if (b.is_zero() || D == 0) {
    q.a_ = a;
    return q;
  }
  auto [s, r] = split_square(D);
  b = b * Rational(s);
  if (r == 1) {
    q.a_ = a + b;
    return q;
  }
  q.a_ = a;
  q.b_ = b;
  q.D_ = r;
  return q;
}

Quadratic Quadratic::sqrt_of(Int128 n) {
  if (n < 0) fail(ErrorKind::kInvalidArgument, "square root of a negative number");
  if (n > kMaxRadicand) fail(ErrorKind::kParse, "radicand exceeds 10^12");
  return make(Rational(0), Rational(1), static_cast<std::int64_t>(n));
}

int Quadratic::sign() const {
  int sa = a_.sign();
  int sb = b_.sign();
  if (sb == 0) return sa;
  if (sa == 0 || sa == sb) return sb;
  Rational a2 = a_ * a_;
  Rational b2d = b_ * b_ * Rational(D_);
  // a^2 = b^2 D is impossible for square-free D >= 2.
  return (a2 - b2d).sign() > 0 ? sa : sb;
}

Int128 Quadratic::floor() const {
  if (is_rational()) return a_.floor();
  Int128 f = round_to_int(hfloor(value()));
  while ((*this - Quadratic(Rational(f))).sign() < 0) --f;
  while ((*this - Quadratic(Rational(f + 1))).sign() >= 0) ++f;
  return f;
}

HighReal Quadratic::value() const {
  if (is_rational()) return a_.value();
  return a_.value() + b_.value() * hsqrt(static_cast<HighReal>(D_));
}

std::string Quadratic::str() const {
  if (is_rational()) return a_.str();
  std::string rad = "*sqrt" + std::to_string(D_);
  Rational mag = b_.sign() < 0 ? -b_ : b_;
  if (a_.is_zero()) return (b_.sign() < 0 ? "-" : "") + mag.str() + rad;
  return a_.str() + (b_.sign() < 0 ? "-" : "+") + mag.str() + rad;
}

Quadratic operator+(const Quadratic& x, const Quadratic& y) {
  std::int64_t D = common_D(x, y);
  return Quadratic::make(x.a_ + y.a_, x.b_ + y.b_, D);
}

Quadratic operator-(const Quadratic& x, const Quadratic& y) { return x + (-y); }

Quadratic operator*(const Quadratic& x, const Quadratic& y) {
  std::int64_t D = common_D(x, y);
  return Quadratic::make(x.a_ * y.a_ + x.b_ * y.b_ * Rational(D), x.a_ * y.b_ + x.b_ * y.a_,
                         D);
}

Quadratic operator/(const Quadratic& x, const Quadratic& y) {
  std::int64_t D = common_D(x, y);
  Rational norm = y.a_ * y.a_ - y.b_ * y.b_ * Rational(D);
  if (norm.is_zero()) fail(ErrorKind::kInvalidArgument, "division by zero");
  Quadratic conj = Quadratic::make(y.a_ / norm, -y.b_ / norm, y.is_rational() ? 1 : D);
  return x * conj;
}

Number Number::from_double(double v) {
  Number n;
  n.value = v;
  return n;
}

Number Number::from_exact(const Quadratic& q) {
  Number n;
  n.value = q.value();
  n.exact = q;
  return n;
}

std::string Number::str() const {
  return exact ? exact->str() : to_string(value, 17);
}

Number wrap(const Number& x) {
  if (x.exact) {
    Quadratic shifted = *x.exact + Quadratic(Rational::make(1, 2));
    return Number::from_exact(*x.exact - Quadratic(Rational(shifted.floor())));
  }
  Number n;
  n.value = wrap_unit(x.value);
  return n;
}

namespace {

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  Number parse() {
    Number v = expr();
    skip();
    if (pos_ != s_.size()) error("unexpected '" + std::string(1, s_[pos_]) + "'");
    return v;
  }

 private:
  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorKind::kParse, what + " at offset " + std::to_string(pos_) + " in '" + s_ + "'");
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) error(std::string("expected '") + c + "'");
  }

  template <class ExactOp, class FloatOp>
  static Number combine(const Number& x, const Number& y, ExactOp eop, FloatOp fop) {
    if (x.exact && y.exact && compatible(*x.exact, *y.exact)) {
      try {
        return Number::from_exact(eop(*x.exact, *y.exact));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNumericRange) throw;
      }
    }
    Number n;
    n.value = fop(x.value, y.value);
    return n;
  }

  Number expr() {
    Number v = term();
    while (true) {
      if (eat('+')) {
        v = combine(v, term(), [](auto a, auto b) { return a + b; },
                    [](HighReal a, HighReal b) { return a + b; });
      } else if (eat('-')) {
        v = combine(v, term(), [](auto a, auto b) { return a - b; },
                    [](HighReal a, HighReal b) { return a - b; });
      } else {
        return v;
      }
    }
  }

  Number term() {
    Number v = unary();
    while (true) {
      if (eat('*')) {
        v = combine(v, unary(), [](auto a, auto b) { return a * b; },
                    [](HighReal a, HighReal b) { return a * b; });
      } else if (eat('/')) {
        std::size_t at = pos_;
        Number d = unary();
        if (d.value == 0) {
          pos_ = at;
          error("division by zero");
        }
        v = combine(v, d, [](auto a, auto b) { return a / b; },
                    [](HighReal a, HighReal b) { return a / b; });
      } else {
        return v;
      }
    }
  }

  Number unary() {
    if (eat('-')) {
      Number v = unary();
      if (v.exact) return Number::from_exact(-*v.exact);
      v.value = -v.value;
      return v;
    }
    if (eat('+')) return unary();
    return primary();
  }

  Number primary() {
    skip();
    if (pos_ >= s_.size()) error("unexpected end of input");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Number v = expr();
      expect(')');
      return v;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return literal();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      std::string name = s_.substr(start, pos_ - start);
      if (name == "phi") {
        return Number::from_exact((Quadratic::sqrt_of(5) - Quadratic(Rational(1))) /
                                  Quadratic(Rational(2)));
      }
      if (name == "sqrt") {
        skip();
        Number arg;
        if (eat('(')) {
          arg = expr();
          expect(')');
        } else {
          arg = literal();
        }
        if (arg.value < 0) error("square root of a negative number");
        if (arg.exact && arg.exact->is_rational()) {
          const Rational& r = arg.exact->a();
          try {
            Int128 pq = checked_mul(r.num(), r.den());
            if (pq <= kMaxRadicand) {
              return Number::from_exact(Quadratic::sqrt_of(pq) /
                                        Quadratic(Rational(r.den())));
            }
          } catch (const Error& e) {
            if (e.kind() != ErrorKind::kNumericRange) throw;
          }
        }
        Number n;
        n.value = hsqrt(arg.value);
        return n;
      }
      if (name == "wrap") {
        expect('(');
        Number v = expr();
        expect(')');
        return wrap(v);
      }
      pos_ = start;
      error("unknown name '" + name + "'");
    }
    error("unexpected '" + std::string(1, c) + "'");
  }

  Number literal() {
    skip();
    std::size_t start = pos_;
    bool decimal = false;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ < s_.size() && s_[pos_] == '.') {
      decimal = true;
      ++pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        decimal = true;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      } else {
        pos_ = save;
      }
    }
    std::string tok = s_.substr(start, pos_ - start);
    if (tok.empty() || tok == ".") error("expected a number");
    if (decimal) {
      Number n;
      n.value = strtoflt128(tok.c_str(), nullptr);
      return n;
    }
    Int128 v = 0;
    try {
      for (char ch : tok) v = checked_add(checked_mul(v, 10), ch - '0');
    } catch (const Error&) {
      error("integer literal too large");
    }
    return Number::from_exact(Quadratic(Rational(v)));
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Number parse_number(const std::string& text) { return Parser(text).parse(); }

std::vector<Number> parse_vector(const std::string& text) {
  std::vector<Number> out;
  bool blank = true;
  for (char c : text) blank = blank && std::isspace(static_cast<unsigned char>(c));
  if (blank) return out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t k = 0; k <= text.size(); ++k) {
    char c = k < text.size() ? text[k] : ',';
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(parse_number(text.substr(start, k - start)));
      start = k + 1;
    }
  }
  return out;
}

bool TargetSpec::exact() const {
  for (const auto& n : xi)
    if (!n.exact) return false;
  for (const auto& n : theta)
    if (!n.exact) return false;
  return true;
}

std::vector<HighReal> TargetSpec::xi_values() const {
  std::vector<HighReal> v;
  for (const auto& n : xi) v.push_back(n.value);
  return v;
}

std::vector<HighReal> TargetSpec::theta_values() const {
  std::vector<HighReal> v;
  for (const auto& n : theta) v.push_back(n.value);
  return v;
}

TargetSpec parse_target(const std::string& xi, const std::string& theta) {
  TargetSpec spec;
  spec.xi = parse_vector(xi);
  spec.theta = parse_vector(theta);
  if (spec.xi.empty() || spec.xi.size() > 5) {
    fail(ErrorKind::kInvalidArgument, "xi needs 1 to 5 entries");
  }
  if (!spec.theta.empty() && spec.theta.size() != spec.xi.size()) {
    fail(ErrorKind::kInvalidArgument, "theta and xi lengths differ");
  }
  return spec;
}

}  // namespace latflow::diophantine
