#pragma once

#include <complex>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "freesub/ncalg.hpp"

namespace freesub::freeprob {

using ncalg::GenSymbol;
using ncalg::NCPoly;
using ncalg::NCWord;
using ncalg::SymbolKind;
using ncalg::TensorPoly;

/// Raised when a trace would need moments beyond the stored order.
struct MomentOrderError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Distribution data for the single generator of one free component:
/// either a moment sequence up to order N, or finitely many atoms (exact
/// at every order). Selfadjoint generators carry real moments m_1..m_N,
/// unitary generators circle moments c_1..c_N with c_{-n} = conj(c_n).
struct AlgebraSpec {
  std::string tag;
  SymbolKind kind = SymbolKind::SelfAdjoint;
  std::vector<Scalar> moments;                      // index k-1 holds m_k / c_k
  std::vector<std::pair<Scalar, Rational>> atoms;   // (position, weight)
  bool atomic = false;

  static AlgebraSpec selfadjoint_moments(std::string tag,
                                         std::vector<Rational> ms);
  static AlgebraSpec unitary_moments(std::string tag, std::vector<Scalar> cs);
  static AlgebraSpec selfadjoint_atoms(
      std::string tag, std::vector<std::pair<Rational, Rational>> atoms);
  static AlgebraSpec unitary_atoms(
      std::string tag, std::vector<std::pair<Scalar, Rational>> atoms);

  /// Haar unitary: every nonzero moment vanishes.
  static AlgebraSpec haar_unitary(std::string tag, int order = 16);

  int max_order() const {
    return atomic ? std::numeric_limits<int>::max()
                  : static_cast<int>(moments.size());
  }

  /// m_k (selfadjoint, k >= 0) or c_k (unitary, k in Z).
  Scalar moment(long k) const;

  /// Positivity (Hankel / Toeplitz up to stored order), atom sanity.
  /// Throws std::invalid_argument on violation.
  void validate() const;

  GenSymbol generator(bool star = false) const {
    return GenSymbol(tag, kind, 0, star);
  }
};

/// Scalar trace on the free product of the listed components (SYMBOLIC),
/// or the normalized matrix trace of a fixed assignment (MATRIX).
/// Immutable after construction; the memo caches are mutex-guarded so
/// concurrent calls are safe and always agree.
class FreeState {
 public:
  static FreeState symbolic(std::vector<AlgebraSpec> specs);
  static FreeState matrix(ncalg::MatrixAssignment assignment);

  bool is_symbolic() const { return symbolic_; }
  const AlgebraSpec& spec(const std::string& tag) const;
  const ncalg::MatrixAssignment& assignment() const;
  std::vector<std::string> tags() const;

  /// Exact trace by recursive centering over the freeness decomposition.
  /// SYMBOLIC backend only.
  Scalar tau(const NCWord& w) const;
  Scalar tau(const NCPoly& f) const;
  /// Product of slotwise traces, summed over terms.
  Scalar tau_tensor(const TensorPoly& t) const;

  /// Trace on either backend (normalized matrix trace when MATRIX).
  std::complex<double> tau_c(const NCWord& w) const;
  std::complex<double> tau_c(const NCPoly& f) const;
  std::complex<double> tau_tensor_c(const TensorPoly& t) const;

  /// Trace-preserving conditional expectation onto the sub-free-product
  /// generated by `target` components. SYMBOLIC backend only.
  NCPoly cond_expect(const NCPoly& f, const std::set<std::string>& target) const;

 private:
  FreeState() = default;

  Scalar tau_word(const NCWord& w) const;
  NCPoly expect_word(const NCWord& w, const std::set<std::string>& target) const;
  Scalar block_moment(const NCWord& block) const;

  bool symbolic_ = true;
  std::map<std::string, AlgebraSpec> specs_;
  ncalg::MatrixAssignment assignment_;

  struct WordHash {
    std::size_t operator()(const NCWord& w) const { return ncalg::word_hash(w); }
  };
  struct Caches {
    std::mutex mutex;
    std::unordered_map<NCWord, Scalar, WordHash> tau;
    std::map<std::set<std::string>, std::unordered_map<NCWord, NCPoly, WordHash>>
        expect;
  };
  std::shared_ptr<Caches> caches_ = std::make_shared<Caches>();
};

// ---------------------------------------------------------------------------
// pairings

/// (tau (x) tau)(delta_split(w)): the scalar pairing defining the
/// liberation gradient. Vanishes identically iff the split family is free
/// from the rest.
Scalar liberation_pairing(const FreeState& state,
                          const std::set<std::string>& split, const NCWord& w);
std::complex<double> liberation_pairing_c(const FreeState& state,
                                          const std::set<std::string>& split,
                                          const NCWord& w);

/// (tau (x) tau)(d_u(w)): the scalar pairing defining the conjugate of U.
Scalar conjugate_pairing(const FreeState& state, const std::string& u_tag,
                         const NCWord& w);
std::complex<double> conjugate_pairing_c(const FreeState& state,
                                         const std::string& u_tag,
                                         const NCWord& w);

// ---------------------------------------------------------------------------
// morphism and conjugation identities (all residuals contract to zero)

/// (E_A (x) E_A)(delta_A(w)) - delta_A(E_A(w)) for w over A and free
/// bystander components.
TensorPoly check_coalgebra_delta(const FreeState& state,
                                 const std::set<std::string>& split,
                                 const NCWord& w);

/// (E_<U> (x) E_<U>)(d_{UV}(w)) - d_U(E_<U>(w)) for w in words over UV
/// and (UV)*. Throws if w does not lie in that subalgebra.
TensorPoly check_coalgebra_d(const FreeState& state, const std::string& u_tag,
                             const std::string& v_tag, const NCWord& w);

/// d_U(w) + delta_{UAU*}(w) for w alternating a-letters and U..U* blocks.
/// Purely symbolic.
TensorPoly check_d_equals_minus_delta(const std::string& u_tag,
                                      const std::set<std::string>& a_tags,
                                      const NCWord& w);

/// (tau (x) tau)(d_U(w)) - (tau (x) tau)(d_U(E_<U>(w))).
Scalar check_freeconj_pairing(const FreeState& state, const std::string& u_tag,
                              const NCWord& w);

/// ||j|| / sqrt(1 + ||j||^2): the operator-norm bound on
/// (E_{A1} - E_B)(E_{A2} - E_B) in terms of the liberation gradient.
double graddist_bound(double norm_j);

// ---------------------------------------------------------------------------
// exact moments of alternating products

/// Free cumulants kappa_1..kappa_order of the component's generator,
/// obtained from its moments through M(z) = C(z M(z)).
std::vector<Scalar> free_cumulants(const AlgebraSpec& s, int order);

/// tau((XY)^n) for the free pair of generators of `x` and `y`, computed by
/// the noncrossing-partition interval recursion over free cumulants.
/// Polynomial in n, unlike the centering recursion; agrees with tau.
Scalar alternating_product_moment(const AlgebraSpec& x, const AlgebraSpec& y,
                                  int n);

// ---------------------------------------------------------------------------
// deterministic random specs for randomized suites

AlgebraSpec random_selfadjoint_spec(const std::string& tag,
                                    std::mt19937_64& rng, int max_atoms = 4);
AlgebraSpec random_unitary_spec(const std::string& tag, std::mt19937_64& rng,
                                int max_atoms = 4);

/// All reduced words over `letters` of length 1..max_len.
std::vector<NCWord> enumerate_words(const std::vector<GenSymbol>& letters,
                                    int max_len);

}  // namespace freesub::freeprob
