#include "doctest.h"
#include "freesub/hilbreg.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

using namespace freesub::hilbreg;

namespace {
constexpr double kPi = std::numbers::pi;

// Chebyshev-substitution quadrature oracle: theta = pi eps sin(t) turns
// the square-root edges into a smooth periodic integrand, where the
// trapezoid rule is spectrally accurate
double arc_theta_moment(double eps, int power, int n = 20001) {
  double h = kPi / (n - 1);  // t in [-pi/2, pi/2]
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double t = -kPi / 2 + i * h;
    double th = kPi * eps * std::sin(t);
    double jac = kPi * eps * std::cos(t);
    double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    acc += w * std::pow(th, power) * arc_density(eps, th) * jac;
  }
  return acc * h / (2 * kPi);
}

}  // namespace

TEST_CASE("arc density: value, support, mass, second moment") {
  CHECK(arc_density(0.5, 0.0) == doctest::Approx(8.0 / kPi).epsilon(1e-14));
  CHECK(arc_density(0.25, kPi * 0.25 + 1e-9) == 0.0);
  CHECK(arc_density(0.25, -3.0) == 0.0);

  for (double eps : {0.1, 0.25, 0.5, 0.75})
    CHECK(arc_theta_moment(eps, 0) == doctest::Approx(1.0).epsilon(1e-10));

  // second moment of the pushforward: (pi eps)^2 / 4
  for (double eps : {0.25, 0.5})
    CHECK(arc_theta_moment(eps, 2) ==
          doctest::Approx(kPi * eps * kPi * eps / 4.0).epsilon(1e-8));
}

TEST_CASE("circular Hilbert transform: symmetry and ladder stability") {
  // odd integrand at theta1 = 0
  HilbertValue h0 = circular_hilbert(0.25, 0.0);
  CHECK(std::abs(h0.value) <= 1e-8);

  // oddness in theta1
  for (double eps : {0.1, 0.5})
    for (double frac : {0.2, 0.5, 0.8}) {
      double th = frac * kPi * eps;
      HilbertValue a = circular_hilbert(eps, th);
      HilbertValue b = circular_hilbert(eps, -th);
      CHECK(std::abs(a.value + b.value) <= 1e-7);
    }

  // delta-ladder self-consistency
  for (double eps : {0.25, 0.5}) {
    HilbertValue h = circular_hilbert(eps, 0.3 * kPi * eps);
    CHECK(h.instability <= 1e-6);
    CHECK(!h.unstable);
  }
}

TEST_CASE("circular Hilbert transform matches the kernel-consistent linear term") {
  // the transform of the arc density is -4 theta1/(pi^2 eps^2) up to the
  // cot-vs-1/t correction, which is controlled by twice the deviation bound
  for (double eps : {0.1, 0.25}) {
    double th = 0.3 * kPi * eps;
    HilbertValue h = circular_hilbert(eps, th);
    double ref = -4.0 * th / (kPi * kPi * eps * eps);
    CHECK(std::abs(h.value - ref) <= 2.0 * cot_deviation_bound(eps));
  }
}

TEST_CASE("cot partial fraction residual") {
  // x = pi: (1/2)cot(pi/2) = 0, truncation tail O(1/N)
  CHECK(cot_partial_fraction_residual(kPi, 10000) <= 1e-4);

  // x -> 0: the Laurent leading term cancels
  CHECK(cot_partial_fraction_residual(1e-3, 1000) <= 1e-3);

  // residual decreases monotonically in N on a fixed grid
  for (double x : {0.5, 1.0, 2.0, 3.0}) {
    double prev = cot_partial_fraction_residual(x, 10);
    for (long N : {100L, 1000L, 10000L}) {
      double cur = cot_partial_fraction_residual(x, N);
      CHECK(cur < prev);
      prev = cur;
    }
  }

  // the displayed pointwise bound holds on the inner part of the range ...
  for (double eps : {0.25, 0.5}) {
    double B = cot_deviation_bound(eps);
    for (double frac : {0.1, 0.3, 0.5}) {
      double x = frac * 2 * kPi * eps;
      double dev = std::abs(0.5 / std::tan(x / 2) - 1.0 / x);
      CHECK(dev <= B);
    }
    // ... and provably fails at the outer edge |x| = 2 pi eps, where the
    // true deviation approaches (eps/pi) sum 1/(n^2 - eps^2) > bound
    double dev_edge =
        std::abs(0.5 / std::tan(kPi * eps) - 1.0 / (2 * kPi * eps));
    CHECK(dev_edge > B);
  }
}

TEST_CASE("semicircle Hilbert transform: closed form vs quadrature") {
  CHECK(semicircle_hilbert(1.0, 0.0) == 0.0);
  for (double eps : {0.25, 0.5}) {
    double r = kPi * eps;
    for (double frac : {-0.7, -0.2, 0.4, 0.9}) {
      double x = frac * r;
      CHECK(semicircle_hilbert(r, x) ==
            doctest::Approx(x / (2 * kPi * r * r)).epsilon(1e-14));
      CHECK(std::abs(semicircle_hilbert_quadrature(r, x) -
                     semicircle_hilbert(r, x)) <= 1e-8);
    }
  }
  CHECK_THROWS_AS(semicircle_hilbert(1.0, 1.5), std::invalid_argument);
}

TEST_CASE("conjugate bound report") {
  ConjBoundReport rep = verify_conj_bound(0.25, 21);
  CHECK(rep.bound == doctest::Approx(0.4375 / (1.5 * kPi)).epsilon(1e-12));
  CHECK(rep.quad_error <= 1e-6);
  CHECK(!rep.unstable);

  ConjBoundReport rep5 = verify_conj_bound(0.5, 21);
  CHECK(rep5.bound == doctest::Approx(0.75 / kPi).epsilon(1e-12));

  // the transform follows the kernel-consistent slope within 2x bound
  CHECK(rep.pass_consistent);
  CHECK(rep5.pass_consistent);

  // deviation from the consistent reference shrinks with eps
  double prev = 1e9;
  for (double eps : {0.2, 0.1, 0.05}) {
    ConjBoundReport r = verify_conj_bound(eps, 15);
    CHECK(r.max_deviation_consistent < prev);
    prev = r.max_deviation_consistent;
  }
}
