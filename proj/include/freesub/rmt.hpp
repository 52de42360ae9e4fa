#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "freesub/subord.hpp"
#include "freesub/transforms.hpp"

namespace freesub::rmt {

using transforms::Complex;
using transforms::MeasureR;
using transforms::MeasureT;

/// Counter-based stream: draw i of trial t under seed s is a fixed mixing
/// of (s, t, i), so trials can run on any thread layout and reproduce
/// bit-identically.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t trial);

  std::uint64_t next_u64();
  double uniform01();  // in (0, 1)
  double gaussian();   // standard normal, Box-Muller
  Complex cgaussian(); // E |z|^2 = 1

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// ---------------------------------------------------------------------------
// samplers

/// GUE normalized so the empirical law converges to the standard
/// semicircle: E|H_ij|^2 = 1/n.
Eigen::MatrixXcd sample_gue(int n, CounterRng& rng);

/// QR of a complex Ginibre sample with the phase correction that makes the
/// factor Haar distributed.
Eigen::MatrixXcd sample_haar_unitary(int n, CounterRng& rng);

/// Diagonal matrix with i.i.d. entries drawn from the atoms of mu.
Eigen::VectorXd sample_diagonal_atoms(const MeasureR& mu, int n, CounterRng& rng);
Eigen::VectorXcd sample_diagonal_atoms(const MeasureT& mu, int n, CounterRng& rng);

/// Eigenvalues of a unitary matrix through the Cayley transform
/// C = i(1-M)(1+M)^{-1} of a deterministically rotated copy (C is
/// Hermitian, so only a selfadjoint solve is needed).
Eigen::VectorXcd unitary_eigenvalues(const Eigen::MatrixXcd& u);

// ---------------------------------------------------------------------------
// validation harness

/// Matrix model for one side of a convolution.
struct Model {
  enum class Kind { Gue, DiagonalReal, HaarUnitary, DiagonalUnitary };
  Kind kind = Kind::Gue;
  MeasureR law_r;   // DiagonalReal
  MeasureT law_t;   // DiagonalUnitary

  static Model gue() { return {Kind::Gue, {}, {}}; }
  static Model diagonal(MeasureR mu) { return {Kind::DiagonalReal, std::move(mu), {}}; }
  static Model haar() { return {Kind::HaarUnitary, {}, {}}; }
  static Model diagonal_unitary(MeasureT mu) {
    return {Kind::DiagonalUnitary, {}, std::move(mu)};
  }

  /// The limiting law as a MeasureR / MeasureT for the solver side.
  MeasureR limit_r() const;
  MeasureT limit_t() const;
};

struct EnsembleConfig {
  int n = 1024;
  int trials = 20;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency
};

/// Deterministic validation record; identical config + seed give identical
/// contents regardless of thread count. Wall-clock timing is reported on
/// stderr by the CLI, never stored here.
struct ValidationReport {
  std::string check_name;
  std::string statement;
  std::uint64_t seed = 0;
  double tolerance = 0.0;
  double metric = 0.0;  // headline sup-error
  bool pass = false;
  bool degenerate = false;
  std::vector<std::pair<std::string, double>> details;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  // per-gridpoint data
};

/// Empirical Cauchy transform of X + W Y W* against G_mu(omega_1(z)).
ValidationReport validate_additive(const Model& mu_model, const Model& nu_model,
                                   const EnsembleConfig& cfg,
                                   const std::vector<Complex>& z_grid,
                                   double tolerance);

/// Empirical psi of U (W V W*) against psi_U(omega(z)); when the U side is
/// Haar the check degrades to psi == 0 within tolerance and the report is
/// marked degenerate.
ValidationReport validate_multiplicative(const Model& u_model,
                                         const Model& v_model,
                                         const EnsembleConfig& cfg,
                                         const std::vector<Complex>& z_grid,
                                         double tolerance);

/// (id_k (x) tr_n)((b (x) 1 - 1 (x) (X + WYW*))^{-1}) against the matrix
/// fixed-point prediction, in operator norm over the listed b.
ValidationReport validate_matrix_resolvent(const Model& mu_model,
                                           const Model& nu_model,
                                           const EnsembleConfig& cfg,
                                           const std::vector<Eigen::MatrixXcd>& bs,
                                           double tolerance);

/// Runs f(0..trials-1) across threads and returns results in trial order.
std::vector<std::vector<Complex>> run_trials(
    int trials, int threads,
    const std::function<std::vector<Complex>(int)>& f);

}  // namespace freesub::rmt
