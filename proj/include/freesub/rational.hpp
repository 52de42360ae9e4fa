#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <complex>
#include <stdexcept>
#include <string>

namespace freesub {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Canonical "p/q" form, denominator always present and positive.
std::string rational_to_string(const Rational& r);

/// Accepts "p/q" or "p"; throws std::invalid_argument on malformed input.
Rational rational_from_string(const std::string& s);

/// Gaussian rational: exact complex number with rational real and
/// imaginary parts. Coefficient field of the exact algebra layer.
struct Scalar {
  Rational re;
  Rational im;

  Scalar() = default;
  Scalar(int v) : re(v), im(0) {}                     // NOLINT(google-explicit-constructor)
  Scalar(Rational r) : re(std::move(r)), im(0) {}     // NOLINT(google-explicit-constructor)
  Scalar(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}

  static Scalar i() { return Scalar(Rational(0), Rational(1)); }

  bool is_zero() const { return re == 0 && im == 0; }
  bool is_real() const { return im == 0; }

  Scalar conj() const { return Scalar(re, -im); }
  Rational norm2() const { return re * re + im * im; }

  std::complex<double> to_complex() const {
    return {static_cast<double>(re), static_cast<double>(im)};
  }

  Scalar& operator+=(const Scalar& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  Scalar& operator-=(const Scalar& o) {
    re -= o.re;
    im -= o.im;
    return *this;
  }
  Scalar& operator*=(const Scalar& o) {
    Rational r = re * o.re - im * o.im;
    im = re * o.im + im * o.re;
    re = std::move(r);
    return *this;
  }
  Scalar& operator/=(const Scalar& o) {
    Rational n2 = o.norm2();
    if (n2 == 0) throw std::invalid_argument("Scalar: division by zero");
    Rational r = (re * o.re + im * o.im) / n2;
    im = (im * o.re - re * o.im) / n2;
    re = std::move(r);
    return *this;
  }

  friend Scalar operator+(Scalar a, const Scalar& b) { return a += b; }
  friend Scalar operator-(Scalar a, const Scalar& b) { return a -= b; }
  friend Scalar operator*(Scalar a, const Scalar& b) { return a *= b; }
  friend Scalar operator/(Scalar a, const Scalar& b) { return a /= b; }
  friend Scalar operator-(const Scalar& a) { return Scalar(-a.re, -a.im); }
  friend bool operator==(const Scalar& a, const Scalar& b) {
    return a.re == b.re && a.im == b.im;
  }
};

/// |z| as a double, rounded up slightly so it stays a valid upper bound.
double scalar_abs_upper(const Scalar& z);

std::string scalar_to_string(const Scalar& z);

}  // namespace freesub
