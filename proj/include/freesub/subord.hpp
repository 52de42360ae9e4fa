#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

#include "freesub/freeprob.hpp"
#include "freesub/transforms.hpp"

namespace freesub::subord {

using transforms::Complex;
using transforms::MeasureR;
using transforms::MeasureT;

/// Both-first-moments-vanishing / vanishing-psi inputs: the trace-level
/// equation does not determine the subordination function there.
struct DegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverConfig {
  double tol = 1e-12;
  int max_iter = 10000;
  double damping = 1.0;  // halved on detected oscillation
};

/// A solved subordination instance. `residual` is the recomputed defect of
/// the subordination identity at the reported omega values, never the last
/// iteration step.
template <class P>
struct SubordResult {
  P point{};
  P omega1{};
  P omega2{};
  P value{};  // G_mu(omega1) (additive) or psi value (multiplicative)
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;
};

/// Additive subordination: omega1 solves w = h_nu(h_mu(w) + z) + z with
/// h = 1/G - w; then G_{mu (+) nu}(z) = G_mu(omega1) = G_nu(omega2) and
/// omega1 + omega2 = z + 1/G. Scalar argument z in H_+.
SubordResult<Complex> additive_subord(const MeasureR& mu, const MeasureR& nu,
                                      Complex z, const SolverConfig& cfg = {});

/// Matrix-argument version on H_+(M_k); h(W) = G(W)^{-1} - W. The stopping
/// rule uses operator-norm residuals; no eigendecomposition shortcut.
SubordResult<Eigen::MatrixXcd> additive_subord(const MeasureR& mu,
                                               const MeasureR& nu,
                                               const Eigen::MatrixXcd& b,
                                               const SolverConfig& cfg = {});

/// Multiplicative subordination on the disk: omega with
/// psi_{mu (x) nu}(z) = psi_mu(omega(z)), |omega(z)| <= |z|, omega(0) = 0.
/// Returns degenerate = true (with the trace-level fact psi == 0 when the
/// mu side is Haar-like) instead of fabricating omega when the data cannot
/// determine it.
SubordResult<Complex> mult_unitary_subord(const MeasureT& mu_u,
                                          const MeasureT& mu_v, Complex z,
                                          const SolverConfig& cfg = {});

/// Exact formal power-series solution of psi_box = psi_U o omega, where
/// psi_box coefficients are tau((UV)^n) computed by the exact trace.
/// Returns omega_1..omega_N. Throws DegenerateError when tau(U) = 0.
std::vector<Scalar> mult_series_subord(const freeprob::AlgebraSpec& u,
                                       const freeprob::AlgebraSpec& v,
                                       int order);

/// Matrix-argument subordination consistency: runs the matrix fixed point
/// at b and returns the operator-norm residual over the subordination
/// system (G_mu(O1) = G_nu(O2), O1 + O2 = b + G^{-1}) plus the
/// half-plane gates on G.
double resolvent_identity_check(const MeasureR& mu, const MeasureR& nu,
                                const Eigen::MatrixXcd& b,
                                const SolverConfig& cfg = {});

}  // namespace freesub::subord
