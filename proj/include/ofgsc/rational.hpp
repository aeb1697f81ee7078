#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace ofgsc {

// Exact rational over 128-bit integers, always normalized (den > 0, gcd 1).
class Rational {
 public:
  using Int = __int128;

  constexpr Rational() = default;
  constexpr Rational(std::int64_t n) : num_(n), den_(1) {}  // NOLINT: implicit from integers
  Rational(Int num, Int den);

  // Best rational approximation with denominator <= max_den (continued
  // fractions). Decimal inputs such as 0.3 come back as 3/10.
  static Rational from_double(double x, std::int64_t max_den = 1'000'000);

  Int num() const { return num_; }
  Int den() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  bool is_integer() const { return den_ == 1; }
  std::string str() const;

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  friend bool operator==(const Rational& a, const Rational& b) { return a.num_ == b.num_ && a.den_ == b.den_; }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    const Int l = a.num_ * b.den_, r = b.num_ * a.den_;
    return l < r ? std::strong_ordering::less : (l > r ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

 private:
  Int num_ = 0;
  Int den_ = 1;
};

}  // namespace ofgsc
