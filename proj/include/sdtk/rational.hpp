#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <sstream>
#include <stdexcept>
#include <string>

namespace sdtk {

// Exact rational scalar for decision procedures.
//
// Deliberately a thin wrapper instead of using boost::multiprecision::cpp_rational
// directly as an Eigen scalar: Eigen's operator overloads probe implicit
// conversions from matrix expressions, and cpp_int's templated constructor is not
// SFINAE-friendly under Boost 1.74 (hard error in its byte-container detection).
// Keeping every constructor non-template sidesteps the probe entirely.
class Rational {
public:
  using Rep = boost::multiprecision::cpp_rational;
  using Int = boost::multiprecision::cpp_int;

  Rational() : v_(0) {}
  Rational(int n) : v_(n) {}
  Rational(long n) : v_(n) {}
  Rational(long long n) : v_(static_cast<std::int64_t>(n)) {}
  Rational(const Int& num, const Int& den) : v_(0) {
    if (den == 0) throw std::invalid_argument("rational with zero denominator");
    v_ = den < 0 ? Rep(-num, -den) : Rep(num, den);
  }
  explicit Rational(const Rep& r) : v_(r) {}

  const Rep& rep() const { return v_; }
  Int num() const { return boost::multiprecision::numerator(v_); }
  Int den() const { return boost::multiprecision::denominator(v_); }
  double to_double() const { return v_.convert_to<double>(); }
  bool is_zero() const { return v_.is_zero(); }
  int sign() const { return v_.sign(); }

  Rational& operator+=(const Rational& o) { v_ += o.v_; return *this; }
  Rational& operator-=(const Rational& o) { v_ -= o.v_; return *this; }
  Rational& operator*=(const Rational& o) { v_ *= o.v_; return *this; }
  Rational& operator/=(const Rational& o) {
    if (o.is_zero()) throw std::invalid_argument("rational division by zero");
    v_ /= o.v_;
    return *this;
  }
  Rational operator-() const { return Rational(Rep(-v_)); }
  Rational operator+() const { return *this; }

  friend Rational operator+(Rational a, const Rational& b) { return a += b; }
  friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
  friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
  friend Rational operator/(Rational a, const Rational& b) { return a /= b; }
  friend bool operator==(const Rational& a, const Rational& b) { return a.v_ == b.v_; }
  friend bool operator!=(const Rational& a, const Rational& b) { return a.v_ != b.v_; }
  friend bool operator<(const Rational& a, const Rational& b) { return a.v_ < b.v_; }
  friend bool operator<=(const Rational& a, const Rational& b) { return a.v_ <= b.v_; }
  friend bool operator>(const Rational& a, const Rational& b) { return a.v_ > b.v_; }
  friend bool operator>=(const Rational& a, const Rational& b) { return a.v_ >= b.v_; }

  friend std::ostream& operator<<(std::ostream& os, const Rational& r);

private:
  Rep v_;
};

inline Rational abs(const Rational& r) { return r.sign() < 0 ? -r : r; }

inline Rational pow(Rational base, long long e) {
  if (e < 0) {
    if (base.is_zero()) throw std::invalid_argument("zero to a negative power");
    base = Rational(1) / base;
    e = -e;
  }
  Rational out(1);
  while (e > 0) {
    if (e & 1) out *= base;
    base *= base;
    e >>= 1;
  }
  return out;
}

namespace detail {
// cpp_int's string constructor treats a leading 0 as octal; parse decimally.
inline Rational::Int parse_decimal_int(const std::string& s) {
  std::size_t i = 0;
  bool neg = false;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) neg = s[i++] == '-';
  if (i == s.size()) throw std::invalid_argument("empty integer literal");
  Rational::Int out = 0;
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') throw std::invalid_argument("bad digit in integer literal");
    out = out * 10 + (s[i] - '0');
  }
  return neg ? Rational::Int(-out) : out;
}
}  // namespace detail

// Accepts "p/q", integers, and decimal/scientific literals ("-0.25", "1e-3").
inline Rational parse_rational(const std::string& text) {
  using Int = Rational::Int;
  auto s = text;
  auto bad = [&] { throw std::invalid_argument("cannot parse rational: '" + text + "'"); };
  if (s.empty()) bad();
  if (auto pos = s.find('/'); pos != std::string::npos) {
    try {
      Int num = detail::parse_decimal_int(s.substr(0, pos));
      Int den = detail::parse_decimal_int(s.substr(pos + 1));
      if (den == 0) bad();
      return Rational(num, den);
    } catch (const std::invalid_argument&) {
      bad();
    }
  }
  std::size_t i = 0;
  bool neg = false;
  if (s[i] == '+' || s[i] == '-') neg = s[i++] == '-';
  std::string digits;
  long long scale10 = 0;
  bool saw_digit = false, saw_dot = false;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (c >= '0' && c <= '9') {
      digits += c;
      saw_digit = true;
      if (saw_dot) --scale10;
    } else if (c == '.' && !saw_dot) {
      saw_dot = true;
    } else if ((c == 'e' || c == 'E') && saw_digit) {
      try {
        scale10 += std::stoll(s.substr(i + 1));
      } catch (const std::exception&) {
        bad();
      }
      i = s.size() - 1;
      break;
    } else {
      bad();
    }
  }
  if (!saw_digit) bad();
  Int mant = detail::parse_decimal_int(digits);
  if (neg) mant = -mant;
  Int p10 = 1;
  for (long long k = 0; k < std::llabs(scale10); ++k) p10 *= 10;
  return scale10 >= 0 ? Rational(mant * p10, Int(1)) : Rational(mant, p10);
}

inline std::string to_string(const Rational& r) {
  std::ostringstream os;
  os << r.num();
  if (r.den() != 1) os << '/' << r.den();
  return os.str();
}

inline std::ostream& operator<<(std::ostream& os, const Rational& r) {
  return os << to_string(r);
}

// Uniform scalar helpers so templated code reads the same for both backends.
inline double to_double(const Rational& r) { return r.to_double(); }
inline double to_double(double x) { return x; }
inline bool is_exact_zero(const Rational& r) { return r.is_zero(); }
inline bool is_exact_zero(double x) { return x == 0.0; }

template <class S> struct scalar_traits;
template <> struct scalar_traits<double> {
  static constexpr bool exact = false;
  static double from_int(long long n) { return static_cast<double>(n); }
};
template <> struct scalar_traits<Rational> {
  static constexpr bool exact = true;
  static Rational from_int(long long n) { return Rational(n); }
};

}  // namespace sdtk

#include <Eigen/Core>

namespace Eigen {
template <> struct NumTraits<sdtk::Rational> {
  using Real = sdtk::Rational;
  using NonInteger = sdtk::Rational;
  using Literal = sdtk::Rational;
  using Nested = sdtk::Rational;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 8,
    AddCost = 60,
    MulCost = 60
  };
  static sdtk::Rational epsilon() { return sdtk::Rational(0); }
  static sdtk::Rational dummy_precision() { return sdtk::Rational(0); }
  static int digits10() { return 0; }
  static sdtk::Rational highest() { throw std::logic_error("unbounded scalar"); }
  static sdtk::Rational lowest() { throw std::logic_error("unbounded scalar"); }
};
}  // namespace Eigen
