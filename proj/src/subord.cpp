#include "freesub/subord.hpp"

#include <cmath>

namespace freesub::subord {

namespace {

using Eigen::MatrixXcd;

// the fixed-point core is shared between the scalar and matrix arguments
double pnorm(const Complex& z) { return std::abs(z); }
double pnorm(const MatrixXcd& m) { return m.jacobiSvd().singularValues()(0); }

Complex pinv(const Complex& z) { return 1.0 / z; }
MatrixXcd pinv(const MatrixXcd& m) {
  return m.partialPivLu().solve(MatrixXcd::Identity(m.rows(), m.cols()));
}

Complex g_eval(const MeasureR& mu, const Complex& z) {
  return transforms::cauchy_G(mu, z);
}
MatrixXcd g_eval(const MeasureR& mu, const MatrixXcd& b) {
  return transforms::matrix_cauchy_G(mu, b);
}

template <class P>
SubordResult<P> additive_core(const MeasureR& mu, const MeasureR& nu, const P& z,
                              const SolverConfig& cfg) {
  SubordResult<P> out;
  out.point = z;
  P w = z;
  double damping = cfg.damping;
  double prev_step = std::numeric_limits<double>::infinity();
  P g1{}, g2{}, w2{};
  for (int it = 1; it <= cfg.max_iter; ++it) {
    g1 = g_eval(mu, w);
    w2 = pinv(g1) - w + z;
    g2 = g_eval(nu, w2);
    out.iterations = it;
    out.residual = pnorm(P(g1 - g2));
    if (out.residual <= cfg.tol) {
      out.converged = true;
      break;
    }
    P target = pinv(g2) - w2 + z;
    double step = pnorm(P(target - w));
    if (step > prev_step * 1.0001 && damping > 1e-3) damping *= 0.5;
    prev_step = step;
    w = w + damping * (target - w);
  }
  out.omega1 = w;
  out.omega2 = w2;
  out.value = g1;
  return out;
}

}  // namespace

SubordResult<Complex> additive_subord(const MeasureR& mu, const MeasureR& nu,
                                      Complex z, const SolverConfig& cfg) {
  if (z.imag() <= 0)
    throw std::invalid_argument("additive_subord: need Im z > 0");
  return additive_core(mu, nu, z, cfg);
}

SubordResult<MatrixXcd> additive_subord(const MeasureR& mu, const MeasureR& nu,
                                        const MatrixXcd& b,
                                        const SolverConfig& cfg) {
  if (!transforms::half_plane_membership(b))
    throw std::invalid_argument("additive_subord: argument not in H_+(M_k)");
  return additive_core(mu, nu, b, cfg);
}

// ---------------------------------------------------------------------------
// multiplicative

namespace {

// eta = psi/(1+psi); both sides of the subordination system use
// q(w) = eta(w)/w, extended by continuity to q(0) = c_1.
Complex eta_eval(const MeasureT& mu, const Complex& w) {
  Complex psi = transforms::psi_transform(mu, w).value;
  return psi / (1.0 + psi);
}

Complex q_eval(const MeasureT& mu, const Complex& w) {
  if (std::abs(w) < 1e-100) return mu.moment(1);
  return eta_eval(mu, w) / w;
}

bool psi_vanishes(const MeasureT& mu) {
  for (auto& c : mu.moments)
    if (std::abs(c) > 1e-15) return false;
  if (mu.atomic) {
    // atoms can still encode a nonvanishing law even if the stored moment
    // window is zero; probe a few more orders
    for (long n = static_cast<long>(mu.moments.size()) + 1; n <= 64; ++n)
      if (std::abs(mu.moment(n)) > 1e-15) return false;
  }
  return true;
}

}  // namespace

SubordResult<Complex> mult_unitary_subord(const MeasureT& mu_u,
                                          const MeasureT& mu_v, Complex z,
                                          const SolverConfig& cfg) {
  if (std::abs(z) >= 1.0)
    throw std::invalid_argument("mult_unitary_subord: need |z| < 1");
  SubordResult<Complex> out;
  out.point = z;

  Complex c1u = mu_u.moment(1), c1v = mu_v.moment(1);
  if (psi_vanishes(mu_u)) {
    // Haar-like factor: psi of the product vanishes identically, but the
    // subordination function is not determined at trace level
    out.degenerate = true;
    out.converged = true;
    out.value = Complex(0, 0);
    return out;
  }
  if (std::abs(c1u) < 1e-14 && std::abs(c1v) < 1e-14) {
    out.degenerate = true;
    return out;
  }

  if (std::abs(z) < 1e-100) {
    out.converged = true;
    return out;  // omega(0) = 0 exactly
  }

  Complex w1 = z * c1v;
  Complex w2{};
  double damping = cfg.damping;
  double prev_step = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= cfg.max_iter; ++it) {
    w2 = z * q_eval(mu_u, w1);
    Complex target = z * q_eval(mu_v, w2);
    out.iterations = it;
    double step = std::abs(target - w1);
    if (step <= cfg.tol * 0.1) {
      w1 = target;
      out.converged = true;
      break;
    }
    if (step > prev_step * 1.0001 && damping > 1e-3) damping *= 0.5;
    prev_step = step;
    w1 = w1 + damping * (target - w1);
  }
  w2 = z * q_eval(mu_u, w1);

  out.omega1 = w1;
  out.omega2 = w2;
  Complex eta_box = w1 * w2 / z;
  Complex psi_box = eta_box / (1.0 - eta_box);
  out.value = psi_box;
  double r1 = std::abs(transforms::psi_transform(mu_u, w1).value - psi_box);
  double r2 = std::abs(transforms::psi_transform(mu_v, w2).value - psi_box);
  out.residual = std::max(r1, r2);
  out.converged = out.converged && out.residual <= std::max(cfg.tol, 1e-11);
  return out;
}

// ---------------------------------------------------------------------------
// exact series

std::vector<Scalar> mult_series_subord(const freeprob::AlgebraSpec& u,
                                       const freeprob::AlgebraSpec& v,
                                       int order) {
  if (order < 1) throw std::invalid_argument("mult_series_subord: order >= 1");
  if (u.kind != ncalg::SymbolKind::Unitary || v.kind != ncalg::SymbolKind::Unitary)
    throw std::invalid_argument("mult_series_subord: unitary specs required");
  Scalar u1 = u.moment(1);
  if (u1.is_zero())
    throw DegenerateError("mult_series_subord: tau(U) = 0, omega undetermined");

  const int N = order;

  // psi_box coefficients p_n = tau((UV)^n), exact. Low orders go through
  // the centering trace; the rest through the equivalent noncrossing
  // recursion, which stays polynomial in n.
  freeprob::FreeState st = freeprob::FreeState::symbolic({u, v});
  std::vector<Scalar> p(N + 1, Scalar(0));
  for (int n = 1; n <= N; ++n) {
    p[n] = freeprob::alternating_product_moment(u, v, n);
    if (n <= 4) {
      std::vector<ncalg::GenSymbol> ls;
      for (int k = 0; k < n; ++k) {
        ls.push_back(u.generator());
        ls.push_back(v.generator());
      }
      if (!(st.tau(ncalg::NCWord(std::move(ls))) == p[n]))
        throw std::logic_error("mult_series_subord: trace routes disagree");
    }
  }

  std::vector<Scalar> un(N + 1, Scalar(0));
  for (int n = 1; n <= N; ++n) un[n] = u.moment(n);

  auto series_mul = [N](const std::vector<Scalar>& a,
                        const std::vector<Scalar>& b) {
    std::vector<Scalar> c(N + 1, Scalar(0));
    for (int i = 0; i <= N; ++i) {
      if (a[i].is_zero()) continue;
      for (int j = 0; i + j <= N; ++j) c[i + j] += a[i] * b[j];
    }
    return c;
  };

  // match psi_U(omega(z)) = psi_box(z) order by order
  std::vector<Scalar> omega(N + 1, Scalar(0));
  for (int n = 1; n <= N; ++n) {
    std::vector<Scalar> comp(N + 1, Scalar(0));
    std::vector<Scalar> pw(N + 1, Scalar(0));
    pw[0] = Scalar(1);
    for (int k = 1; k <= n; ++k) {
      pw = series_mul(pw, omega);
      if (un[k].is_zero()) continue;
      for (int i = 0; i <= N; ++i) comp[i] += un[k] * pw[i];
    }
    omega[n] = (p[n] - comp[n]) / u1;
  }
  return {omega.begin() + 1, omega.end()};
}

// ---------------------------------------------------------------------------
// matrix-argument consistency

double resolvent_identity_check(const MeasureR& mu, const MeasureR& nu,
                                const Eigen::MatrixXcd& b,
                                const SolverConfig& cfg) {
  auto eps = transforms::half_plane_membership(b);
  if (!eps)
    throw std::invalid_argument("resolvent_identity_check: b not in H_+(M_k)");
  auto res = additive_subord(mu, nu, b, cfg);

  const Eigen::Index k = b.rows();
  MatrixXcd G1 = transforms::matrix_cauchy_G(mu, res.omega1);
  MatrixXcd G2 = transforms::matrix_cauchy_G(nu, res.omega2);
  double r1 = pnorm(MatrixXcd(G1 - G2));

  // omega1 + omega2 = b + G^{-1}: the subordination shift n = omega1 - b
  // reproduces the resolvent of a + n with a = b - (mu part)
  MatrixXcd Ginv = pinv(G1);
  double r2 = pnorm(MatrixXcd(res.omega1 + res.omega2 - b - Ginv));

  // half-plane gates
  double gate = 0.0;
  double gnorm = pnorm(G1);
  if (gnorm > 1.0 / *eps + 1e-9) gate = gnorm - 1.0 / *eps;
  if (!transforms::half_plane_membership(MatrixXcd(-G1))) gate = 1.0;

  return std::max({r1, r2, gate});
}

}  // namespace freesub::subord
