#pragma once

#include <vector>

namespace freesub::hilbreg {

/// Quadrature controls for the principal-value transforms.
struct ArcDensityParams {
  double epsilon = 0.25;  // in (0, 1)
  int panel_refinement = 12;      // geometric subpanels toward kinks
  std::vector<double> delta_ladder = {1e-2, 1e-3, 1e-4};
};

/// Density of exp(i pi eps S), S semicircular of radius 1, with respect to
/// normalized arc length: (4/(pi eps^2)) sqrt(eps^2 - theta^2/pi^2) on
/// [-pi eps, pi eps], zero outside.
double arc_density(double eps, double theta);

struct HilbertValue {
  double value = 0.0;        // at the smallest delta of the ladder
  double instability = 0.0;  // spread across the ladder
  bool unstable = false;     // spread exceeded 10x the target tolerance
};

/// Circular Hilbert transform of the arc density,
///   (H_delta p)(e^{i theta1}) = -(1/2pi) int_{delta<|t|<=pi} p(e^{i(theta1-t)}) cot(t/2) dt,
/// computed by symmetric pairing theta1 +- s and extrapolated over the
/// delta ladder.
HilbertValue circular_hilbert(double eps, double theta1,
                              const ArcDensityParams& params = {});

/// | (1/2)cot(x/2) - [1/x + sum_{1<=n<=N} (1/(x+2pi n) + 1/(x-2pi n))] |.
/// Decays like O(|x|/N).
double cot_partial_fraction_residual(double x, long N);

/// Pointwise deviation bound eps(2-eps)/(2pi(1-eps)).
double cot_deviation_bound(double eps);

/// Hilbert transform of the radius-r semicircle law in the normalization
/// fixed by the instance value x/(2 pi r^2) (the quadrature oracle uses
/// the kernel (1/4pi)/(x - t) to match it). Requires |x| < r.
double semicircle_hilbert(double r, double x);
/// Principal-value quadrature route for the same quantity.
double semicircle_hilbert_quadrature(double r, double x, int levels = 48);

struct ConjBoundReport {
  double epsilon = 0.0;
  double bound = 0.0;             // eps(2-eps)/(2pi(1-eps))
  double quad_error = 0.0;        // worst ladder spread over the grid
  bool unstable = false;

  // deviation against the cited linear reference theta1/(2 pi^3 eps^2)
  double max_deviation = 0.0;
  bool pass = false;

  // deviation against the reference -4 theta1 / (pi^2 eps^2), which is the
  // linear term consistent with the cot kernel above; see README notes
  double max_deviation_consistent = 0.0;
  bool pass_consistent = false;   // within 2x bound
};

/// Max-over-grid comparison of the circular Hilbert transform of the arc
/// density against the linear references, on a theta1 grid inside
/// [-pi eps, pi eps].
ConjBoundReport verify_conj_bound(double eps, int grid_size,
                                  const ArcDensityParams& params = {});

}  // namespace freesub::hilbreg
