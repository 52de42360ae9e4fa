#include "freesub/transforms.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace freesub::transforms {

namespace {
constexpr double kPi = std::numbers::pi;
}

// ---------------------------------------------------------------------------
// MeasureR

MeasureR MeasureR::from_atoms(
    const std::vector<std::pair<double, double>>& atoms) {
  MeasureR m;
  for (auto& [t, w] : atoms) {
    m.nodes.push_back(t);
    m.weights.push_back(w);
    m.support_radius = std::max(m.support_radius, std::abs(t));
  }
  m.validate();
  return m;
}

MeasureR MeasureR::semicircle(double variance, int n_nodes) {
  if (variance <= 0) throw std::invalid_argument("variance must be positive");
  // radius r = 2 sqrt(var); Gauss-Chebyshev (second kind) nodes absorb the
  // square-root edge factor exactly: weights (2/n) sin^2(theta_k)
  double r = 2.0 * std::sqrt(variance);
  MeasureR m;
  m.nodes.resize(n_nodes);
  m.weights.resize(n_nodes);
  for (int k = 0; k < n_nodes; ++k) {
    double th = kPi * (2.0 * k + 1.0) / (2.0 * n_nodes);
    m.nodes[k] = r * std::cos(th);
    m.weights[k] = 2.0 / n_nodes * std::sin(th) * std::sin(th);
  }
  m.support_radius = r;
  m.validate();
  return m;
}

MeasureR MeasureR::arcsine(double half_width, int n_nodes) {
  if (half_width <= 0) throw std::invalid_argument("half_width must be positive");
  // arcsine density 1/(pi sqrt(r^2-x^2)): first-kind Chebyshev weights 1/n
  MeasureR m;
  m.nodes.resize(n_nodes);
  m.weights.resize(n_nodes);
  for (int k = 0; k < n_nodes; ++k) {
    double th = kPi * (2.0 * k + 1.0) / (2.0 * n_nodes);
    m.nodes[k] = half_width * std::cos(th);
    m.weights[k] = 1.0 / n_nodes;
  }
  m.support_radius = half_width;
  m.validate();
  return m;
}

MeasureR MeasureR::from_density(const std::function<double(double)>& density,
                                double a, double b, int n_nodes) {
  if (!(a < b)) throw std::invalid_argument("need a < b");
  double c = (a + b) / 2, r = (b - a) / 2;
  MeasureR m;
  m.nodes.resize(n_nodes);
  m.weights.resize(n_nodes);
  double total = 0.0;
  for (int k = 0; k < n_nodes; ++k) {
    double th = kPi * (2.0 * k + 1.0) / (2.0 * n_nodes);
    double x = c + r * std::cos(th);
    double w = kPi / n_nodes * density(x) * r * std::sin(th);
    m.nodes[k] = x;
    m.weights[k] = w;
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-8)
    throw std::invalid_argument("density does not integrate to 1 on [a,b]");
  for (auto& w : m.weights) w /= total;  // remove residual quadrature drift
  m.support_radius = std::max(std::abs(a), std::abs(b));
  m.validate();
  return m;
}

void MeasureR::validate(double tol) const {
  if (nodes.size() != weights.size() || nodes.empty())
    throw std::invalid_argument("MeasureR: empty or inconsistent data");
  double total = 0.0;
  for (double w : weights) {
    if (w <= 0) throw std::invalid_argument("MeasureR: weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > tol)
    throw std::invalid_argument("MeasureR: weights must sum to 1");
}

// ---------------------------------------------------------------------------
// MeasureT

MeasureT MeasureT::from_atoms(
    const std::vector<std::pair<Complex, double>>& atoms, int n_moments) {
  MeasureT m;
  m.atomic = true;
  m.atoms = atoms;
  m.moments.resize(n_moments);
  for (int n = 1; n <= n_moments; ++n) {
    Complex c{0, 0};
    for (auto& [z, w] : atoms) c += w * std::pow(z, n);
    m.moments[n - 1] = c;
  }
  m.validate();
  return m;
}

MeasureT MeasureT::from_moments(std::vector<Complex> cs) {
  MeasureT m;
  m.moments = std::move(cs);
  m.validate();
  return m;
}

MeasureT MeasureT::haar(int n_moments) {
  MeasureT m;
  m.moments.assign(n_moments, Complex{0, 0});
  return m;
}

Complex MeasureT::moment(long n) const {
  if (n == 0) return {1, 0};
  bool neg = n < 0;
  long k = neg ? -n : n;
  Complex out;
  if (atomic && k > static_cast<long>(moments.size())) {
    out = {0, 0};
    for (auto& [z, w] : atoms) out += w * std::pow(z, k);
  } else {
    if (k > static_cast<long>(moments.size()))
      throw std::out_of_range("MeasureT: moment order " + std::to_string(k) +
                              " not available");
    out = moments[k - 1];
  }
  return neg ? std::conj(out) : out;
}

void MeasureT::validate(double tol) const {
  if (atomic) {
    double total = 0.0;
    for (auto& [z, w] : atoms) {
      if (w <= 0) throw std::invalid_argument("MeasureT: weights must be positive");
      if (std::abs(std::abs(z) - 1.0) > tol)
        throw std::invalid_argument("MeasureT: atoms must lie on the circle");
      total += w;
    }
    if (std::abs(total - 1.0) > tol)
      throw std::invalid_argument("MeasureT: weights must sum to 1");
  }
  // Toeplitz positivity up to available order (numeric)
  std::size_t s = std::min<std::size_t>(moments.size() + 1, 12);
  Eigen::MatrixXcd T(s, s);
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < s; ++j)
      T(i, j) = moment(static_cast<long>(i) - static_cast<long>(j));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(T, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9)
    throw std::invalid_argument("MeasureT: moments fail Toeplitz positivity");
}

// ---------------------------------------------------------------------------
// scalar transforms

Complex cauchy_G(const MeasureR& mu, Complex z) {
  if (z.imag() <= 0) throw std::invalid_argument("cauchy_G: need Im z > 0");
  Complex out{0, 0};
  for (std::size_t i = 0; i < mu.nodes.size(); ++i)
    out += mu.weights[i] / (z - mu.nodes[i]);
  return out;
}

Complex f_transform(const MeasureR& mu, Complex z) { return 1.0 / cauchy_G(mu, z); }

PsiValue psi_transform(const MeasureT& mu, Complex z) {
  double az = std::abs(z);
  if (az >= 1.0) throw std::invalid_argument("psi_transform: need |z| < 1");
  PsiValue out;
  if (mu.atomic) {
    Complex v{0, 0};
    for (auto& [zeta, w] : mu.atoms) v += w * z * zeta / (1.0 - z * zeta);
    out.value = v;
    out.tail_bound = 0.0;
    return out;
  }
  Complex v{0, 0};
  Complex zp{1, 0};
  for (std::size_t n = 1; n <= mu.moments.size(); ++n) {
    zp *= z;
    v += mu.moments[n - 1] * zp;
  }
  out.value = v;
  out.tail_bound = std::pow(az, mu.moments.size() + 1) / (1.0 - az);
  return out;
}

// ---------------------------------------------------------------------------
// matrix arguments

std::optional<double> half_plane_membership(const Eigen::MatrixXcd& T) {
  if (T.rows() != T.cols())
    throw std::invalid_argument("half_plane_membership: square matrix required");
  Eigen::MatrixXcd imT = (T - T.adjoint()) / Complex(0, 2);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(imT, Eigen::EigenvaluesOnly);
  double eps = es.eigenvalues().minCoeff();
  if (eps <= 0) return std::nullopt;
  return eps;
}

Eigen::MatrixXcd matrix_cauchy_G(const MeasureR& mu, const Eigen::MatrixXcd& b) {
  auto eps = half_plane_membership(b);
  if (!eps)
    throw std::invalid_argument("matrix_cauchy_G: argument not in H_+(M_k)");
  const Eigen::Index k = b.rows();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(k, k);
  Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(k, k);
  for (std::size_t i = 0; i < mu.nodes.size(); ++i)
    out += mu.weights[i] *
           (b - mu.nodes[i] * id).partialPivLu().solve(id);
  return out;
}

bool disk_criterion(const Eigen::MatrixXcd& x) {
  if (x.rows() != x.cols())
    throw std::invalid_argument("disk_criterion: square matrix required");
  const Eigen::Index k = x.rows();
  double norm = x.jacobiSvd().singularValues()(0);
  bool strict = norm < 1.0;

  // resolvent form: 1-x invertible and 2 Re(1-x)^{-1} >= (1+eps) 1
  bool resolvent = false;
  Eigen::MatrixXcd one_minus = Eigen::MatrixXcd::Identity(k, k) - x;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(one_minus);
  double rcond_proxy = std::abs(lu.determinant());
  if (rcond_proxy > 1e-300) {
    Eigen::MatrixXcd inv = lu.solve(Eigen::MatrixXcd::Identity(k, k));
    Eigen::MatrixXcd re2 = inv + inv.adjoint();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(re2,
                                                       Eigen::EigenvaluesOnly);
    resolvent = es.eigenvalues().minCoeff() > 1.0;
  }
  if (strict != resolvent)
    throw std::logic_error("disk_criterion: norm and resolvent tests disagree");
  return strict;
}

// ---------------------------------------------------------------------------
// Stieltjes inversion

DensityEstimate stieltjes_invert(const std::vector<double>& grid,
                                 const std::vector<Complex>& g_values,
                                 double eta) {
  if (eta <= 0) throw std::invalid_argument("stieltjes_invert: eta must be > 0");
  if (grid.size() != g_values.size())
    throw std::invalid_argument("stieltjes_invert: grid/value size mismatch");
  DensityEstimate out;
  out.grid = grid;
  out.eta = eta;
  out.density.resize(grid.size());
  out.atomic_flags.assign(grid.size(), 0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.density[i] = -g_values[i].imag() / kPi;
    // a point mass of weight w contributes w/(pi eta) at the atom
    if (out.density[i] * kPi * eta > 0.05) out.atomic_flags[i] = 1;
  }
  return out;
}

DensityEstimate stieltjes_invert_ladder(
    const std::function<Complex(Complex)>& G, const std::vector<double>& grid,
    const std::vector<double>& etas, double tol) {
  if (etas.empty()) throw std::invalid_argument("empty eta ladder");
  std::vector<DensityEstimate> levels;
  for (double eta : etas) {
    std::vector<Complex> vals(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
      vals[i] = G(Complex(grid[i], eta));
    levels.push_back(stieltjes_invert(grid, vals, eta));
  }
  DensityEstimate out = levels.back();
  if (levels.size() >= 2) {
    const auto& a = levels[levels.size() - 2];
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (out.atomic_flags[i] || a.atomic_flags[i]) continue;
      if (std::abs(out.density[i] - a.density[i]) > 10.0 * tol) {
        out.unstable = true;
        break;
      }
    }
  }
  return out;
}

}  // namespace freesub::transforms
