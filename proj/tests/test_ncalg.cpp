#include "doctest.h"
#include "freesub/ncalg.hpp"

#include <random>

using namespace freesub;
using namespace freesub::ncalg;

namespace {

const GenSymbol A = sa("a");
const GenSymbol B = gen("b");
const GenSymbol U = uni("u");
const GenSymbol Us = uni("u", true);
const GenSymbol X = sa("x");

NCPoly P(const GenSymbol& s) { return NCPoly(s); }

// random polynomial over the given letters, degree <= max_deg
NCPoly random_poly(std::mt19937_64& rng, const std::vector<GenSymbol>& letters,
                   int max_deg, int n_terms = 4) {
  std::uniform_int_distribution<int> deg(0, max_deg);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(letters.size()) - 1);
  std::uniform_int_distribution<int> coef(-3, 3);
  NCPoly f;
  for (int t = 0; t < n_terms; ++t) {
    int d = deg(rng);
    std::vector<GenSymbol> w;
    for (int i = 0; i < d; ++i) w.push_back(letters[pick(rng)]);
    f.add_term(NCWord(std::move(w)), Scalar(Rational(coef(rng)), Rational(coef(rng))));
  }
  return f;
}

}  // namespace

TEST_CASE("word reduction and multiplication") {
  CHECK(P(A) * P(B) == NCPoly(NCWord{A, B}));
  CHECK((NCPoly::one() + P(A)) * (NCPoly::one() - P(A)) ==
        NCPoly::one() - P(A) * P(A));
  CHECK(P(U) * P(Us) == NCPoly::one());
  CHECK(P(Us) * P(U) == NCPoly::one());
  // nested cancellation: a U U* b -> ab
  NCWord w({A, U, Us, B});
  CHECK(w == NCWord({A, B}));

  std::mt19937_64 rng(11);
  std::vector<GenSymbol> pool{A, B, U, Us, X};
  for (int i = 0; i < 30; ++i) {
    NCPoly f = random_poly(rng, pool, 3);
    NCPoly g = random_poly(rng, pool, 3);
    NCPoly h = random_poly(rng, pool, 3);
    CHECK((f * g) * h == f * (g * h));
  }
}

TEST_CASE("adjoint is an antilinear involution") {
  NCPoly iab = Scalar::i() * (P(A) * P(B));
  NCPoly expect;
  expect.add_term(NCWord{B.adjoint(), A}, -Scalar::i());
  CHECK(adjoint(iab) == expect);
  CHECK(adjoint(P(U)) == NCPoly(Us));

  std::mt19937_64 rng(12);
  std::vector<GenSymbol> pool{A, B, U, Us, X};
  for (int i = 0; i < 50; ++i) {
    NCPoly f = random_poly(rng, pool, 4);
    CHECK(adjoint(adjoint(f)) == f);
  }
}

TEST_CASE("derive_delta on letters and words") {
  std::set<std::string> split{"a"};
  TensorPoly da = derive_delta(split, P(A));
  TensorPoly expect(2);
  expect.add_term({NCWord{A}, NCWord()}, Scalar(1));
  expect.add_term({NCWord(), NCWord{A}}, Scalar(-1));
  CHECK(da == expect);

  CHECK(derive_delta(split, P(B)).is_zero());

  // delta(aba) = a(x)ba - 1(x)aba + aba(x)1 - ab(x)a
  TensorPoly daba = derive_delta(split, P(A) * P(B) * P(A));
  TensorPoly e2(2);
  e2.add_term({NCWord{A}, NCWord{B, A}}, Scalar(1));
  e2.add_term({NCWord(), NCWord{A, B, A}}, Scalar(-1));
  e2.add_term({NCWord{A, B, A}, NCWord()}, Scalar(1));
  e2.add_term({NCWord{A, B}, NCWord{A}}, Scalar(-1));
  CHECK(daba == e2);
}

TEST_CASE("derive_d on letters and words") {
  TensorPoly du = derive_d("u", P(U));
  TensorPoly e(2);
  e.add_term({NCWord(), NCWord{U}}, Scalar(1));
  CHECK(du == e);

  TensorPoly dus = derive_d("u", P(Us));
  TensorPoly e2(2);
  e2.add_term({NCWord{Us}, NCWord()}, Scalar(-1));
  CHECK(dus == e2);

  TensorPoly du2 = derive_d("u", P(U) * P(U));
  TensorPoly e3(2);
  e3.add_term({NCWord(), NCWord{U, U}}, Scalar(1));
  e3.add_term({NCWord{U}, NCWord{U}}, Scalar(1));
  CHECK(du2 == e3);

  // d(U U*) = d(1) = 0 must hold on the nose
  CHECK(derive_d("u", P(U) * P(Us)).is_zero());
}

TEST_CASE("free difference quotient") {
  TensorPoly dx = derive_fdq("x", P(X));
  TensorPoly e(2);
  e.add_term({NCWord(), NCWord()}, Scalar(1));
  CHECK(dx == e);

  GenSymbol B2 = gen("b2");
  TensorPoly dbxb = derive_fdq("x", P(B) * P(X) * P(B2));
  TensorPoly e2(2);
  e2.add_term({NCWord{B}, NCWord{B2}}, Scalar(1));
  CHECK(dbxb == e2);

  TensorPoly dx2 = derive_fdq("x", P(X) * P(X));
  TensorPoly e3(2);
  e3.add_term({NCWord(), NCWord{X}}, Scalar(1));
  e3.add_term({NCWord{X}, NCWord()}, Scalar(1));
  CHECK(dx2 == e3);
}

TEST_CASE("iterated derivations act on the leftmost slot") {
  std::set<std::string> split{"a"};
  Derivation d = Derivation::delta(split);

  NCPoly f = P(A) * P(B) + Scalar(2) * P(B);
  CHECK(iterate_derivation(d, 0, f) == embed(f, 1, 0));

  // delta^(2)(a) = a(x)1(x)1 - 1(x)a(x)1
  TensorPoly d2a = iterate_derivation(d, 2, P(A));
  TensorPoly e(3);
  e.add_term({NCWord{A}, NCWord(), NCWord()}, Scalar(1));
  e.add_term({NCWord(), NCWord{A}, NCWord()}, Scalar(-1));
  CHECK(d2a == e);

  for (int p = 1; p <= 5; ++p)
    CHECK(iterate_derivation(d, p, P(B)).is_zero());
}

TEST_CASE("Leibniz rule holds exactly for all three derivations") {
  std::mt19937_64 rng(21);
  std::vector<GenSymbol> pool{A, B, U, Us, X};
  std::vector<Derivation> ds{Derivation::delta({"a"}), Derivation::d_unitary("u"),
                             Derivation::fdq("x")};
  for (int i = 0; i < 40; ++i) {
    NCPoly f = random_poly(rng, pool, 5);
    NCPoly g = random_poly(rng, pool, 5);
    for (auto& d : ds) {
      TensorPoly lhs = derive(d, f * g);
      TensorPoly rhs = embed(f, 2, 0) * derive(d, g) + derive(d, f) * embed(g, 2, 1);
      CHECK(lhs == rhs);
    }
  }
}

TEST_CASE("higher Leibniz rule for the iterates") {
  std::mt19937_64 rng(22);
  std::vector<GenSymbol> pool{A, B};
  Derivation d = Derivation::delta({"a"});
  for (int i = 0; i < 8; ++i) {
    NCPoly f = random_poly(rng, pool, 4, 3);
    NCPoly g = random_poly(rng, pool, 4, 3);
    for (int p = 0; p <= 4; ++p) {
      TensorPoly lhs = iterate_derivation(d, p, f * g);
      TensorPoly rhs(p + 1);
      for (int k = 0; k <= p; ++k) {
        TensorPoly left = tensor_pad(iterate_derivation(d, k, f), 0, p - k);
        TensorPoly right = tensor_pad(iterate_derivation(d, p - k, g), k, 0);
        rhs += left * right;
      }
      CHECK(lhs == rhs);
    }
  }
}

TEST_CASE("derivations kill the unit") {
  for (auto& d : {Derivation::delta({"a"}), Derivation::d_unitary("u"),
                  Derivation::fdq("x")})
    CHECK(derive(d, NCPoly::one()).is_zero());
}

TEST_CASE("degree-filtered resolvent identity for d") {
  CHECK(verify_resolvent_series_d("u", "b", 0).is_zero());
  CHECK(verify_resolvent_series_d("u", "b", 1).is_zero());
  CHECK(verify_resolvent_series_d("u", "b", 2).is_zero());
  for (int K = 3; K <= 8; ++K) CHECK(verify_resolvent_series_d("u", "b", K).is_zero());
}

TEST_CASE("degree-filtered resolvent identity for delta") {
  std::set<std::string> split{"a"};
  CHECK(verify_resolvent_series_delta(split, "a", 0).is_zero());
  CHECK(verify_resolvent_series_delta(split, "a", 1).is_zero());
  CHECK(verify_resolvent_series_delta(split, "a", 3).is_zero());
  for (int K = 4; K <= 8; ++K)
    CHECK(verify_resolvent_series_delta(split, "a", K).is_zero());
}

TEST_CASE("conjugated-split delta matches -d on A v UAU*") {
  // spot check here; the systematic sweep lives in the freeprob suite
  std::set<std::string> a_tags{"a"};
  NCPoly uau = P(U) * P(A) * P(Us);
  TensorPoly lhs = derive_d("u", uau);
  TensorPoly rhs = derive_delta_conjugated("u", a_tags, uau);
  CHECK((lhs + rhs).is_zero());
}

TEST_CASE("smooth norm bound") {
  GenNorms norms{{"a", 2.0}, {"b", 3.0}};
  std::set<std::string> split{"a"};

  // no split letters: only p = 0 survives
  auto nb = smooth_norm_bound(split, P(B), Rational(1, 2), norms);
  REQUIRE(nb.has_value());
  CHECK(*nb == doctest::Approx(3.0).epsilon(1e-14));

  // f = a at R = 1/4: ||a|| (1 + 2R/(1-R)) = 5/3 ||a||
  auto na = smooth_norm_bound(split, P(A), Rational(1, 4), norms);
  REQUIRE(na.has_value());
  CHECK(*na == doctest::Approx(2.0 * 5.0 / 3.0).epsilon(1e-12));

  // divergence when 2kR >= 1
  CHECK(!smooth_norm_bound(split, P(A), Rational(1, 2), norms).has_value());

  // submultiplicativity on random pairs
  std::mt19937_64 rng(33);
  std::vector<GenSymbol> pool{A, B};
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    NCPoly f = random_poly(rng, pool, 3, 3);
    NCPoly g = random_poly(rng, pool, 3, 3);
    auto bf = smooth_norm_bound(split, f, Rational(1, 16), norms);
    auto bg = smooth_norm_bound(split, g, Rational(1, 16), norms);
    auto bfg = smooth_norm_bound(split, f * g, Rational(1, 16), norms);
    REQUIRE(bf.has_value());
    REQUIRE(bg.has_value());
    REQUIRE(bfg.has_value());
    ++checked;
    CHECK(*bfg <= (*bf) * (*bg) * (1 + 1e-12) + 1e-12);
  }
  CHECK(checked == 100);
}

namespace {

MatrixAssignment demo_assignment(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  auto rand_mat = [&](bool hermitian) {
    Eigen::MatrixXcd M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = std::complex<double>(g(rng), g(rng));
    if (hermitian) M = (M + M.adjoint()) / 2.0;
    return M;
  };
  MatrixAssignment asg;
  asg.matrices["a"] = rand_mat(true);
  asg.matrices["b"] = rand_mat(false);
  // unitary via QR
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(rand_mat(false));
  asg.matrices["u"] = qr.householderQ() * Eigen::MatrixXcd::Identity(n, n);
  asg.matrices["x"] = rand_mat(true);
  return asg;
}

}  // namespace

TEST_CASE("matrix evaluation") {
  auto asg = demo_assignment(4, 5);
  CHECK((eval_matrix(NCPoly::one(), asg) - Eigen::MatrixXcd::Identity(4, 4)).norm() == 0.0);

  NCPoly ab = P(A) * P(B);
  Eigen::MatrixXcd prod = asg.at("a") * asg.at("b");
  CHECK((eval_matrix(ab, asg) - prod).norm() < 1e-12 * prod.norm());

  // tensor evaluation is the Kronecker product
  TensorPoly t = tensor2(P(A), P(B));
  Eigen::MatrixXcd K = eval_matrix(t, asg);
  CHECK(K.rows() == 16);
  Eigen::MatrixXcd expect(16, 16);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      expect.block(4 * i, 4 * j, 4, 4) = asg.at("a")(i, j) * asg.at("b");
  CHECK((K - expect).norm() < 1e-12 * expect.norm());

  // dimension mismatch rejected
  MatrixAssignment bad = asg;
  bad.matrices["b"] = Eigen::MatrixXcd::Identity(3, 3);
  CHECK_THROWS_AS(eval_matrix(ab, bad), std::invalid_argument);

  // non-unitary assignment to a unitary tag rejected
  MatrixAssignment bad2 = asg;
  bad2.matrices["u"] = 2.0 * Eigen::MatrixXcd::Identity(4, 4);
  CHECK_THROWS_AS(eval_matrix(P(U), bad2), std::invalid_argument);
}

TEST_CASE("theta contraction") {
  auto asg = demo_assignment(4, 6);
  Eigen::MatrixXcd m = 0.2 * asg.at("b");

  // s = 0 is plain evaluation
  NCPoly f = P(A) * P(B) + Scalar(2) * P(A);
  CHECK((theta_contract({}, embed(f, 1, 0), asg) - eval_matrix(f, asg)).norm() < 1e-12);

  // theta_1[m](x (x) y) = x m y
  TensorPoly t = tensor2(P(A), P(B));
  Eigen::MatrixXcd expect = asg.at("a") * m * asg.at("b");
  CHECK((theta_contract({m}, t, asg) - expect).norm() < 1e-12 * expect.norm());

  // theta_2[m,m](1 (x) a (x) 1) = m a m
  TensorPoly t3(3);
  t3.add_term({NCWord(), NCWord{A}, NCWord()}, Scalar(1));
  Eigen::MatrixXcd expect2 = m * asg.at("a") * m;
  CHECK((theta_contract({m, m}, t3, asg) - expect2).norm() < 1e-12 * expect2.norm());
}

TEST_CASE("rho series evaluation") {
  auto asg = demo_assignment(4, 7);
  std::set<std::string> split{"a"};
  Eigen::MatrixXcd m = asg.at("b");
  m *= 0.25 / m.jacobiSvd().singularValues()(0);

  // f = b: series has one term, tail 0
  auto rb = rho_series_eval(split, P(B), m, asg, 10);
  CHECK(rb.tail_bound == 0.0);
  CHECK((rb.value - asg.at("b")).norm() < 1e-14);

  // f = a matches (1-m) a (1-m)^{-1}
  auto ra = rho_series_eval(split, P(A), m, asg, 60);
  Eigen::MatrixXcd direct = rho_direct_eval(split, P(A), m, asg);
  CHECK((ra.value - direct).norm() <= ra.tail_bound + 1e-10);

  // f = ab within 1e-10 at ||m|| <= 0.3, p_max = 40
  NCPoly ab = P(A) * P(B);
  Eigen::MatrixXcd m3 = m * (0.3 / 0.25);
  auto rab = rho_series_eval(split, ab, m3, asg, 40);
  Eigen::MatrixXcd direct2 = rho_direct_eval(split, ab, m3, asg);
  CHECK((rab.value - direct2).norm() <= rab.tail_bound + 1e-10);

  // homomorphism within combined tails
  NCPoly f = P(A) + Scalar(2) * P(B);
  NCPoly g = P(B) * P(A);
  auto rf = rho_series_eval(split, f, m, asg, 40);
  auto rg = rho_series_eval(split, g, m, asg, 40);
  auto rfg = rho_series_eval(split, f * g, m, asg, 40);
  double fn = eval_matrix(f, asg).norm() + rf.tail_bound;
  double gn = eval_matrix(g, asg).norm() + rg.tail_bound;
  CHECK((rfg.value - rf.value * rg.value).norm() <=
        rfg.tail_bound + rf.tail_bound * gn + rg.tail_bound * fn + 1e-9);

  CHECK_THROWS_AS(
      rho_series_eval(split, P(A), Eigen::MatrixXcd::Identity(4, 4), asg, 10),
      std::invalid_argument);
}
