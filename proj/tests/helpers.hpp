#pragma once

// shared closed forms and small numeric utilities for the test suites

#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace testutil {

using Complex = std::complex<double>;

// semicircle of given variance; branch with Im G < 0 on the upper half-plane
inline Complex semicircle_G(Complex z, double var) {
  Complex s = std::sqrt(z * z - 4.0 * var);
  if (s.imag() * z.imag() < 0) s = -s;
  return (z - s) / (2.0 * var);
}

// arcsine law on [-a, a]: G(z) = 1/sqrt(z^2 - a^2)
inline Complex arcsine_G(Complex z, double a) {
  Complex s = std::sqrt(z * z - a * a);
  if (s.imag() * z.imag() < 0) s = -s;
  return 1.0 / s;
}

// Taylor coefficients of an analytic function on |z| <= radius via the
// trapezoid rule on the circle (exponentially accurate)
inline std::vector<Complex> taylor_coeffs(const std::function<Complex(Complex)>& f,
                                          int n_max, double radius,
                                          int n_points = 256) {
  std::vector<Complex> vals(n_points);
  for (int k = 0; k < n_points; ++k)
    vals[k] = f(std::polar(radius, 2.0 * std::numbers::pi * k / n_points));
  std::vector<Complex> out(n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    Complex acc{0, 0};
    for (int k = 0; k < n_points; ++k)
      acc += vals[k] *
             std::polar(1.0, -2.0 * std::numbers::pi * k * n / n_points);
    out[n] = acc / static_cast<double>(n_points) / std::pow(radius, n);
  }
  return out;
}

}  // namespace testutil
