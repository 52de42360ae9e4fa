#include "freesub/rmt.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace freesub::rmt {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t trial)
    : key_(mix64(seed + kGolden) ^ mix64(trial * kGolden + 1)) {}

std::uint64_t CounterRng::next_u64() {
  return mix64(key_ + (++counter_) * kGolden);
}

double CounterRng::uniform01() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::gaussian() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  double u1 = uniform01(), u2 = uniform01();
  double r = std::sqrt(-2.0 * std::log(u1));
  double th = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(th);
  has_cached_ = true;
  return r * std::cos(th);
}

Complex CounterRng::cgaussian() {
  double a = gaussian(), b = gaussian();
  return Complex(a, b) / std::sqrt(2.0);
}

// ---------------------------------------------------------------------------
// samplers

Eigen::MatrixXcd sample_gue(int n, CounterRng& rng) {
  if (n < 2) throw std::invalid_argument("sample_gue: n >= 2");
  Eigen::MatrixXcd H(n, n);
  double off = 1.0 / std::sqrt(2.0 * n);
  double diag = 1.0 / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i) {
    H(i, i) = diag * rng.gaussian();
    for (int j = i + 1; j < n; ++j) {
      Complex z = off * Complex(rng.gaussian(), rng.gaussian());
      H(i, j) = z;
      H(j, i) = std::conj(z);
    }
  }
  return H;
}

Eigen::MatrixXcd sample_haar_unitary(int n, CounterRng& rng) {
  if (n < 2) throw std::invalid_argument("sample_haar_unitary: n >= 2");
  Eigen::MatrixXcd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = rng.cgaussian();
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(A);
  Eigen::MatrixXcd Q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, n);
  Eigen::VectorXcd d = qr.matrixQR().diagonal();
  for (int i = 0; i < n; ++i) {
    Complex phase = d(i) / std::abs(d(i));
    Q.col(i) *= phase;
  }
  return Q;
}

namespace {

template <class ScalarT, class MeasureAtoms>
void fill_from_atoms(Eigen::Matrix<ScalarT, Eigen::Dynamic, 1>& out,
                     const MeasureAtoms& atoms, CounterRng& rng) {
  std::vector<double> cum;
  cum.reserve(atoms.size());
  double acc = 0.0;
  for (auto& a : atoms) {
    acc += a.second;
    cum.push_back(acc);
  }
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    double u = rng.uniform01() * acc;
    std::size_t k = 0;
    while (k + 1 < cum.size() && u > cum[k]) ++k;
    out(i) = atoms[k].first;
  }
}

}  // namespace

Eigen::VectorXd sample_diagonal_atoms(const MeasureR& mu, int n, CounterRng& rng) {
  if (mu.nodes.size() > 64)
    throw std::invalid_argument("diagonal model expects an atomic measure");
  std::vector<std::pair<double, double>> atoms;
  for (std::size_t i = 0; i < mu.nodes.size(); ++i)
    atoms.emplace_back(mu.nodes[i], mu.weights[i]);
  Eigen::VectorXd out(n);
  fill_from_atoms(out, atoms, rng);
  return out;
}

Eigen::VectorXcd sample_diagonal_atoms(const MeasureT& mu, int n,
                                       CounterRng& rng) {
  if (!mu.atomic)
    throw std::invalid_argument("diagonal unitary model expects atoms");
  Eigen::VectorXcd out(n);
  fill_from_atoms(out, mu.atoms, rng);
  return out;
}

Eigen::VectorXcd unitary_eigenvalues(const Eigen::MatrixXcd& u) {
  const Eigen::Index n = u.rows();
  // rotate so no eigenvalue sits at -1, then Cayley-transform to a
  // Hermitian problem
  const double phi = 0.7320508075688772;
  Complex rot = std::polar(1.0, phi);
  Eigen::MatrixXcd m = rot * u;
  Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
  Eigen::MatrixXcd c =
      Complex(0, 1) * ((id - m) * (id + m).partialPivLu().solve(id));
  c = (c + c.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(c, Eigen::EigenvaluesOnly);
  Eigen::VectorXcd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double theta = 2.0 * std::atan(es.eigenvalues()(i));
    out(i) = std::polar(1.0, theta - phi);
  }
  return out;
}

// ---------------------------------------------------------------------------
// models

MeasureR Model::limit_r() const {
  switch (kind) {
    case Kind::Gue:
      return MeasureR::semicircle(1.0);
    case Kind::DiagonalReal:
      return law_r;
    default:
      throw std::invalid_argument("model has no real limit law");
  }
}

MeasureT Model::limit_t() const {
  switch (kind) {
    case Kind::HaarUnitary:
      return MeasureT::haar();
    case Kind::DiagonalUnitary:
      return law_t;
    default:
      throw std::invalid_argument("model has no circle limit law");
  }
}

// ---------------------------------------------------------------------------
// deterministic parallel trials

std::vector<std::vector<Complex>> run_trials(
    int trials, int threads,
    const std::function<std::vector<Complex>(int)>& f) {
  if (threads <= 0)
    threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, trials));
  std::vector<std::vector<Complex>> results(trials);
  if (threads == 1) {
    for (int t = 0; t < trials; ++t) results[t] = f(t);
    return results;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      try {
        for (int t = w; t < trials; t += threads) results[t] = f(t);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return results;
}

namespace {

// X + W Y W* sample for additive-type checks; Hermitian by construction
Eigen::MatrixXcd additive_sample(const Model& mu_model, const Model& nu_model,
                                 int n, CounterRng& rng) {
  Eigen::MatrixXcd X;
  if (mu_model.kind == Model::Kind::Gue) {
    X = sample_gue(n, rng);
  } else {
    X = sample_diagonal_atoms(mu_model.limit_r(), n, rng).asDiagonal();
  }
  Eigen::MatrixXcd Y;
  if (nu_model.kind == Model::Kind::Gue) {
    Y = sample_gue(n, rng);
  } else {
    Y = sample_diagonal_atoms(nu_model.limit_r(), n, rng).asDiagonal();
  }
  Eigen::MatrixXcd W = sample_haar_unitary(n, rng);
  return X + W * Y * W.adjoint();
}

}  // namespace

ValidationReport validate_additive(const Model& mu_model, const Model& nu_model,
                                   const EnsembleConfig& cfg,
                                   const std::vector<Complex>& z_grid,
                                   double tolerance) {
  MeasureR mu = mu_model.limit_r(), nu = nu_model.limit_r();

  auto trial = [&](int t) {
    CounterRng rng(cfg.seed, static_cast<std::uint64_t>(t));
    Eigen::MatrixXcd M = additive_sample(mu_model, nu_model, cfg.n, rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M, Eigen::EigenvaluesOnly);
    const auto& lam = es.eigenvalues();
    std::vector<Complex> g(z_grid.size());
    for (std::size_t i = 0; i < z_grid.size(); ++i) {
      Complex acc{0, 0};
      for (Eigen::Index k = 0; k < lam.size(); ++k)
        acc += 1.0 / (z_grid[i] - lam(k));
      g[i] = acc / static_cast<double>(cfg.n);
      if (g[i].imag() > 1e-14)
        throw std::logic_error("empirical Cauchy transform left H_-");
    }
    return g;
  };

  auto per_trial = run_trials(cfg.trials, cfg.threads, trial);

  ValidationReport rep;
  rep.check_name = "additive-subordination-mc";
  rep.statement = "additive subordination theorem (freely Markovian triples), trace form";
  rep.seed = cfg.seed;
  rep.tolerance = tolerance;
  rep.columns = {"re_z", "im_z", "re_G_emp", "im_G_emp", "re_G_pred",
                 "im_G_pred", "abs_err"};

  subord::SolverConfig scfg;
  double sup = 0.0;
  for (std::size_t i = 0; i < z_grid.size(); ++i) {
    Complex emp{0, 0};
    for (int t = 0; t < cfg.trials; ++t) emp += per_trial[t][i];
    emp /= static_cast<double>(cfg.trials);
    auto sol = subord::additive_subord(mu, nu, z_grid[i], scfg);
    double err = std::abs(emp - sol.value);
    sup = std::max(sup, err);
    rep.rows.push_back({z_grid[i].real(), z_grid[i].imag(), emp.real(),
                        emp.imag(), sol.value.real(), sol.value.imag(), err});
  }
  rep.metric = sup;
  rep.pass = sup <= tolerance;
  rep.details = {{"sup_error", sup},
                 {"n", static_cast<double>(cfg.n)},
                 {"trials", static_cast<double>(cfg.trials)}};
  return rep;
}

ValidationReport validate_multiplicative(const Model& u_model,
                                         const Model& v_model,
                                         const EnsembleConfig& cfg,
                                         const std::vector<Complex>& z_grid,
                                         double tolerance) {
  MeasureT mu = u_model.limit_t(), nv = v_model.limit_t();

  auto trial = [&](int t) {
    CounterRng rng(cfg.seed, static_cast<std::uint64_t>(t));
    Eigen::MatrixXcd U;
    if (u_model.kind == Model::Kind::HaarUnitary)
      U = sample_haar_unitary(cfg.n, rng);
    else
      U = sample_diagonal_atoms(mu, cfg.n, rng).asDiagonal();
    Eigen::MatrixXcd V;
    if (v_model.kind == Model::Kind::HaarUnitary)
      V = sample_haar_unitary(cfg.n, rng);
    else
      V = sample_diagonal_atoms(nv, cfg.n, rng).asDiagonal();
    Eigen::MatrixXcd W = sample_haar_unitary(cfg.n, rng);
    Eigen::MatrixXcd M = U * (W * V * W.adjoint());
    Eigen::VectorXcd lam = unitary_eigenvalues(M);
    std::vector<Complex> psi(z_grid.size());
    for (std::size_t i = 0; i < z_grid.size(); ++i) {
      Complex acc{0, 0};
      for (Eigen::Index k = 0; k < lam.size(); ++k)
        acc += z_grid[i] * lam(k) / (1.0 - z_grid[i] * lam(k));
      psi[i] = acc / static_cast<double>(cfg.n);
    }
    return psi;
  };

  auto per_trial = run_trials(cfg.trials, cfg.threads, trial);

  ValidationReport rep;
  rep.check_name = "multiplicative-subordination-mc";
  rep.statement =
      "multiplicative subordination theorem (free unitaries), trace form";
  rep.seed = cfg.seed;
  rep.tolerance = tolerance;
  rep.columns = {"re_z",      "im_z",      "re_psi_emp", "im_psi_emp",
                 "re_psi_pred", "im_psi_pred", "abs_err"};

  double sup = 0.0;
  bool degenerate = false;
  for (std::size_t i = 0; i < z_grid.size(); ++i) {
    Complex emp{0, 0};
    for (int t = 0; t < cfg.trials; ++t) emp += per_trial[t][i];
    emp /= static_cast<double>(cfg.trials);
    auto sol = subord::mult_unitary_subord(mu, nv, z_grid[i]);
    degenerate = degenerate || sol.degenerate;
    Complex pred = sol.degenerate ? Complex{0, 0} : sol.value;
    double err = std::abs(emp - pred);
    sup = std::max(sup, err);
    rep.rows.push_back({z_grid[i].real(), z_grid[i].imag(), emp.real(),
                        emp.imag(), pred.real(), pred.imag(), err});
  }
  rep.metric = sup;
  rep.pass = sup <= tolerance;
  rep.degenerate = degenerate;
  rep.details = {{"sup_error", sup},
                 {"n", static_cast<double>(cfg.n)},
                 {"trials", static_cast<double>(cfg.trials)}};
  return rep;
}

ValidationReport validate_matrix_resolvent(const Model& mu_model,
                                           const Model& nu_model,
                                           const EnsembleConfig& cfg,
                                           const std::vector<Eigen::MatrixXcd>& bs,
                                           double tolerance) {
  MeasureR mu = mu_model.limit_r(), nu = nu_model.limit_r();
  std::vector<double> eps(bs.size());
  int kdim = 0;
  for (std::size_t i = 0; i < bs.size(); ++i) {
    auto e = transforms::half_plane_membership(bs[i]);
    if (!e) throw std::invalid_argument("b not in H_+(M_k)");
    eps[i] = *e;
    kdim = static_cast<int>(bs[i].rows());
  }

  auto trial = [&](int t) {
    CounterRng rng(cfg.seed, static_cast<std::uint64_t>(t));
    Eigen::MatrixXcd M = additive_sample(mu_model, nu_model, cfg.n, rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M, Eigen::EigenvaluesOnly);
    const auto& lam = es.eigenvalues();
    std::vector<Complex> flat;
    flat.reserve(bs.size() * kdim * kdim);
    for (std::size_t i = 0; i < bs.size(); ++i) {
      const Eigen::Index k = bs[i].rows();
      Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(k, k);
      Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(k, k);
      for (Eigen::Index q = 0; q < lam.size(); ++q)
        acc += (bs[i] - lam(q) * id).partialPivLu().solve(id);
      acc /= static_cast<double>(cfg.n);
      if (acc.jacobiSvd().singularValues()(0) > 1.0 / eps[i] + 1e-9)
        throw std::logic_error("empirical matrix transform broke the 1/eps gate");
      for (Eigen::Index r = 0; r < k; ++r)
        for (Eigen::Index c = 0; c < k; ++c) flat.push_back(acc(r, c));
    }
    return flat;
  };

  auto per_trial = run_trials(cfg.trials, cfg.threads, trial);

  ValidationReport rep;
  rep.check_name = "matrix-resolvent-mc";
  rep.statement = "additive subordination theorem at matrix arguments";
  rep.seed = cfg.seed;
  rep.tolerance = tolerance;
  rep.columns = {"b_index", "op_err"};

  subord::SolverConfig scfg;
  double sup = 0.0;
  std::size_t off = 0;
  for (std::size_t i = 0; i < bs.size(); ++i) {
    const Eigen::Index k = bs[i].rows();
    Eigen::MatrixXcd emp = Eigen::MatrixXcd::Zero(k, k);
    for (int t = 0; t < cfg.trials; ++t)
      for (Eigen::Index r = 0; r < k; ++r)
        for (Eigen::Index c = 0; c < k; ++c)
          emp(r, c) += per_trial[t][off + r * k + c];
    emp /= static_cast<double>(cfg.trials);
    off += static_cast<std::size_t>(k) * k;

    auto sol = subord::additive_subord(mu, nu, bs[i], scfg);
    double err =
        Eigen::MatrixXcd(emp - sol.value).jacobiSvd().singularValues()(0);
    sup = std::max(sup, err);
    rep.rows.push_back({static_cast<double>(i), err});
  }
  rep.metric = sup;
  rep.pass = sup <= tolerance;
  rep.details = {{"sup_op_error", sup},
                 {"n", static_cast<double>(cfg.n)},
                 {"trials", static_cast<double>(cfg.trials)},
                 {"k", static_cast<double>(kdim)}};
  return rep;
}

}  // namespace freesub::rmt
