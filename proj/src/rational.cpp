#include "ofgsc/rational.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ofgsc {

namespace {

Rational::Int gcd128(Rational::Int a, Rational::Int b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    const Rational::Int t = a % b;
    a = b;
    b = t;
  }
  return a;
}

}  // namespace

Rational::Rational(Int num, Int den) {
  if (den == 0) throw std::domain_error("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const Int g = gcd128(num, den);
  num_ = g > 1 ? num / g : num;
  den_ = g > 1 ? den / g : den;
}

Rational Rational::from_double(double x, std::int64_t max_den) {
  if (!std::isfinite(x)) throw std::domain_error("rational from non-finite value");
  const bool neg = x < 0;
  const double ax = std::abs(x);
  const double whole = std::floor(ax);
  Int h_prev = 1, h = static_cast<Int>(whole);
  Int k_prev = 0, k = 1;
  double rem = ax - whole;
  const double tol = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, ax);
  while (rem > 0.0 && std::abs(ax - static_cast<double>(h) / static_cast<double>(k)) > tol) {
    const double inv = 1.0 / rem;
    const double a_d = std::floor(inv);
    const Int a = static_cast<Int>(a_d);
    const Int k_next = a * k + k_prev;
    if (k_next > max_den) break;
    const Int h_next = a * h + h_prev;
    h_prev = h;
    h = h_next;
    k_prev = k;
    k = k_next;
    rem = inv - a_d;
  }
  return {neg ? -h : h, k};
}

std::string Rational::str() const {
  auto to_s = [](Int v) {
    if (v == 0) return std::string("0");
    const bool neg = v < 0;
    std::string s;
    while (v != 0) {
      const int digit = static_cast<int>(v % 10);
      s.push_back(static_cast<char>('0' + (digit < 0 ? -digit : digit)));
      v /= 10;
    }
    if (neg) s.push_back('-');
    return std::string(s.rbegin(), s.rend());
  };
  return den_ == 1 ? to_s(num_) : to_s(num_) + "/" + to_s(den_);
}

Rational operator+(const Rational& a, const Rational& b) {
  return {a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_};
}
Rational operator-(const Rational& a, const Rational& b) {
  return {a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_};
}
Rational operator*(const Rational& a, const Rational& b) { return {a.num_ * b.num_, a.den_ * b.den_}; }
Rational operator/(const Rational& a, const Rational& b) { return {a.num_ * b.den_, a.den_ * b.num_}; }

}  // namespace ofgsc
