#include "doctest.h"
#include "freesub/rmt.hpp"

#include <algorithm>

using namespace freesub;
using namespace freesub::rmt;
using transforms::Complex;
using transforms::MeasureR;
using transforms::MeasureT;

namespace {

double tr_power(const Eigen::MatrixXcd& H, int p) {
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Identity(H.rows(), H.cols());
  for (int i = 0; i < p; ++i) acc = acc * H;
  return acc.trace().real() / static_cast<double>(H.rows());
}

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

MeasureR bernoulli() {
  return MeasureR::from_atoms({{-kInvSqrt2, 0.5}, {kInvSqrt2, 0.5}});
}

}  // namespace

TEST_CASE("GUE sampler: symmetry and limiting moments") {
  CounterRng rng(42, 0);
  Eigen::MatrixXcd H = sample_gue(512, rng);
  CHECK((H - H.adjoint()).norm() <= 1e-14 * H.norm());
  CHECK(std::abs(tr_power(H, 2) - 1.0) <= 0.1);
  CHECK(std::abs(tr_power(H, 4) - 2.0) <= 0.3);  // Catalan C_2
}

TEST_CASE("Haar sampler: unitarity and moment decay") {
  CounterRng rng(42, 1);
  int n = 512;
  Eigen::MatrixXcd U = sample_haar_unitary(n, rng);
  CHECK((U.adjoint() * U - Eigen::MatrixXcd::Identity(n, n)).norm() <= 1e-12 * n);
  Eigen::MatrixXcd P = Eigen::MatrixXcd::Identity(n, n);
  for (int k = 1; k <= 4; ++k) {
    P = P * U;
    CHECK(std::abs(P.trace()) / n <= 5.0 / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("unitary eigenvalues via the Cayley transform") {
  CounterRng rng(7, 3);
  int n = 128;
  Eigen::MatrixXcd U = sample_haar_unitary(n, rng);
  Eigen::VectorXcd lam = unitary_eigenvalues(U);
  for (int i = 0; i < n; ++i) CHECK(std::abs(std::abs(lam(i)) - 1.0) <= 1e-10);
  // moment cross-checks against traces
  Complex s1{0, 0}, s2{0, 0};
  for (int i = 0; i < n; ++i) {
    s1 += lam(i);
    s2 += lam(i) * lam(i);
  }
  CHECK(std::abs(s1 - U.trace()) <= 1e-8 * n);
  CHECK(std::abs(s2 - (U * U).trace()) <= 1e-8 * n);
}

TEST_CASE("counter streams are reproducible and thread-layout independent") {
  CounterRng a(123, 5), b(123, 5);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CounterRng c(123, 6);
  CHECK(a.next_u64() != c.next_u64());

  auto work = [](int t) {
    CounterRng rng(9, static_cast<std::uint64_t>(t));
    std::vector<Complex> out;
    for (int i = 0; i < 16; ++i) out.push_back(rng.cgaussian());
    return out;
  };
  auto r1 = run_trials(8, 1, work);
  auto r2 = run_trials(8, 2, work);
  auto r4 = run_trials(8, 4, work);
  CHECK(r1 == r2);
  CHECK(r1 == r4);
}

TEST_CASE("additive validation: shift case and bitwise determinism") {
  EnsembleConfig cfg;
  cfg.n = 256;
  cfg.trials = 6;
  cfg.seed = 11;
  std::vector<Complex> grid;
  for (double x = -2.0; x <= 2.0 + 1e-9; x += 0.5) grid.emplace_back(x, 0.5);

  // nu = delta_0: exact shift, error limited by sampling of X only
  Model gue = Model::gue();
  Model zero = Model::diagonal(MeasureR::from_atoms({{0.0, 1.0}}));
  auto rep = validate_additive(gue, zero, cfg, grid, 0.05);
  CHECK(rep.pass);

  // identical reports across thread counts
  EnsembleConfig cfg1 = cfg;
  cfg1.threads = 1;
  EnsembleConfig cfg2 = cfg;
  cfg2.threads = 2;
  auto ra = validate_additive(gue, zero, cfg1, grid, 0.05);
  auto rb = validate_additive(gue, zero, cfg2, grid, 0.05);
  CHECK(ra.metric == rb.metric);
  CHECK(ra.rows == rb.rows);
}

TEST_CASE("additive validation error decreases with dimension") {
  std::vector<Complex> grid;
  for (double x = -2.0; x <= 2.0 + 1e-9; x += 0.5) grid.emplace_back(x, 0.5);
  Model bern = Model::diagonal(bernoulli());
  std::vector<double> medians;
  for (int n : {256, 512, 1024}) {
    EnsembleConfig cfg;
    cfg.n = n;
    cfg.trials = 8;
    cfg.seed = 21;
    auto rep = validate_additive(bern, bern, cfg, grid, 1.0);
    std::vector<double> errs;
    for (auto& row : rep.rows) errs.push_back(row.back());
    std::nth_element(errs.begin(), errs.begin() + errs.size() / 2, errs.end());
    medians.push_back(errs[errs.size() / 2]);
  }
  CHECK(medians[1] < medians[0]);
  CHECK(medians[2] < medians[1]);
}

TEST_CASE("multiplicative validation: identity factor and Haar degeneracy") {
  EnsembleConfig cfg;
  cfg.n = 256;
  cfg.trials = 6;
  cfg.seed = 31;
  std::vector<Complex> grid;
  for (int k = 0; k < 8; ++k)
    grid.push_back(std::polar(0.5, 2 * std::numbers::pi * k / 8.0));

  MeasureT u_atoms =
      MeasureT::from_atoms({{Complex(1, 0), 0.7}, {Complex(-1, 0), 0.3}});
  Model u = Model::diagonal_unitary(u_atoms);
  Model v1 = Model::diagonal_unitary(MeasureT::from_atoms({{Complex(1, 0), 1.0}}));
  auto rep = validate_multiplicative(u, v1, cfg, grid, 0.05);
  CHECK(rep.pass);
  CHECK(!rep.degenerate);

  // Haar factor: psi of the product vanishes
  auto rep2 = validate_multiplicative(Model::haar(), u, cfg, grid, 0.03);
  CHECK(rep2.degenerate);
  CHECK(rep2.pass);
}

TEST_CASE("matrix resolvent validation: diagonal b decouples") {
  EnsembleConfig cfg;
  cfg.n = 256;
  cfg.trials = 6;
  cfg.seed = 41;

  Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(2, 2);
  b(0, 0) = Complex(0.4, 0.7);
  b(1, 1) = Complex(-0.9, 0.9);
  Model gue = Model::gue();
  auto rep = validate_matrix_resolvent(gue, gue, cfg, {b}, 0.1);
  CHECK(rep.pass);

  // compare against two scalar runs on the diagonal
  std::vector<Complex> grid{b(0, 0), b(1, 1)};
  auto scalar_rep = validate_additive(gue, gue, cfg, grid, 0.1);
  CHECK(scalar_rep.pass);
}
