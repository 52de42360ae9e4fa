#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <optional>
#include <vector>

namespace freesub::transforms {

using Complex = std::complex<double>;

/// Probability law on the real line, held as weighted nodes: either exact
/// atoms or a Gauss-Chebyshev discretization of a density. The Chebyshev
/// weighting matches the square-root edge behavior of the test laws.
struct MeasureR {
  std::vector<double> nodes;
  std::vector<double> weights;
  double support_radius = 0.0;  // max |node|

  static MeasureR from_atoms(const std::vector<std::pair<double, double>>& atoms);
  /// Semicircle with the given variance (radius 2 sqrt(variance)).
  static MeasureR semicircle(double variance = 1.0, int n_nodes = 2048);
  /// Arcsine law on [-half_width, half_width].
  static MeasureR arcsine(double half_width, int n_nodes = 2048);
  /// Gauss-Chebyshev discretization of an arbitrary density on [a, b].
  static MeasureR from_density(const std::function<double(double)>& density,
                               double a, double b, int n_nodes = 2048);

  void validate(double tol = 1e-12) const;
};

/// Probability law on the unit circle: moments c_n = integral of z^n,
/// n = 1..N (c_0 = 1, c_{-n} = conj(c_n)), plus optional exact atoms.
struct MeasureT {
  std::vector<Complex> moments;
  std::vector<std::pair<Complex, double>> atoms;  // (point on T, weight)
  bool atomic = false;

  static MeasureT from_atoms(const std::vector<std::pair<Complex, double>>& atoms,
                             int n_moments = 32);
  static MeasureT from_moments(std::vector<Complex> cs);
  static MeasureT haar(int n_moments = 32);

  Complex moment(long n) const;  // any n for atomic, |n| <= N otherwise
  void validate(double tol = 1e-12) const;
};

// ---------------------------------------------------------------------------
// scalar transforms

/// G_mu(z) = integral of 1/(z - t); maps the upper half-plane into the
/// closed lower half-plane. Requires Im z > 0.
Complex cauchy_G(const MeasureR& mu, Complex z);

/// F_mu = 1/G_mu.
Complex f_transform(const MeasureR& mu, Complex z);

struct PsiValue {
  Complex value;
  double tail_bound = 0.0;  // 0 when evaluated exactly from atoms
};

/// psi_mu(z) = sum_{n>=1} c_n z^n for |z| < 1. Exact sum over atoms when
/// available, otherwise a truncated moment series with the geometric tail
/// bound |z|^{N+1}/(1-|z|).
PsiValue psi_transform(const MeasureT& mu, Complex z);

// ---------------------------------------------------------------------------
// matrix-argument transforms

/// Largest eps with Im(T) >= eps * 1, or nullopt when T is not in the
/// open matrix upper half-plane. Membership is a value, not an error.
std::optional<double> half_plane_membership(const Eigen::MatrixXcd& T);

/// G_mu(b) = integral of (b - t)^{-1} d mu(t) for b in H_+(M_k); lands in
/// H_-(M_k) with ||G(b)|| <= 1/eps.
Eigen::MatrixXcd matrix_cauchy_G(const MeasureR& mu, const Eigen::MatrixXcd& b);

/// ||x|| < 1, cross-checked against the resolvent criterion
/// "1 - x invertible and 2 Re(1-x)^{-1} >= (1+eps)1". The two must agree;
/// disagreement throws std::logic_error.
bool disk_criterion(const Eigen::MatrixXcd& x);

// ---------------------------------------------------------------------------
// Stieltjes inversion

struct DensityEstimate {
  std::vector<double> grid;
  std::vector<double> density;
  double eta = 0.0;
  std::vector<int> atomic_flags;  // 1 where a Poisson-kernel spike was detected
  bool unstable = false;          // eta-ladder estimates disagreed
};

/// density(x) ~= -Im G(x + i eta) / pi from precomputed boundary values.
DensityEstimate stieltjes_invert(const std::vector<double>& grid,
                                 const std::vector<Complex>& g_values,
                                 double eta);

/// Evaluates G on the ladder of eta values and flags the estimate unstable
/// when successive eta levels disagree by more than 10x the tolerance.
DensityEstimate stieltjes_invert_ladder(
    const std::function<Complex(Complex)>& G, const std::vector<double>& grid,
    const std::vector<double>& etas = {1e-1, 1e-2, 1e-3}, double tol = 5e-3);

}  // namespace freesub::transforms
