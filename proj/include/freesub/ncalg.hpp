#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "freesub/rational.hpp"

namespace freesub::ncalg {

enum class SymbolKind : std::uint8_t { SelfAdjoint, Unitary, General };

/// One generator letter: which free component it belongs to (tag), which
/// generator inside that component (index), adjoint flag, and its *-type.
/// Selfadjoint letters are fixed under the star flip, so `star` is
/// normalized to false for them.
struct GenSymbol {
  std::string tag;
  int index = 0;
  bool star = false;
  SymbolKind kind = SymbolKind::SelfAdjoint;

  GenSymbol() = default;
  GenSymbol(std::string t, SymbolKind k, int idx = 0, bool st = false)
      : tag(std::move(t)), index(idx), star(st), kind(k) {
    if (kind == SymbolKind::SelfAdjoint) star = false;
  }

  GenSymbol adjoint() const {
    GenSymbol s = *this;
    if (kind != SymbolKind::SelfAdjoint) s.star = !s.star;
    return s;
  }

  friend auto operator<=>(const GenSymbol&, const GenSymbol&) = default;
};

inline GenSymbol sa(std::string tag, int index = 0) {
  return GenSymbol(std::move(tag), SymbolKind::SelfAdjoint, index);
}
inline GenSymbol uni(std::string tag, bool star = false, int index = 0) {
  return GenSymbol(std::move(tag), SymbolKind::Unitary, index, star);
}
inline GenSymbol gen(std::string tag, bool star = false, int index = 0) {
  return GenSymbol(std::move(tag), SymbolKind::General, index, star);
}

/// Reduced word in the free product. Reduction cancels adjacent U U* and
/// U* U pairs for unitary letters; the empty word is the unit.
struct NCWord {
  std::vector<GenSymbol> letters;

  NCWord() = default;
  NCWord(std::initializer_list<GenSymbol> ls) : letters(ls) { reduce(); }
  explicit NCWord(std::vector<GenSymbol> ls) : letters(std::move(ls)) { reduce(); }

  void reduce();

  bool empty() const { return letters.empty(); }
  std::size_t size() const { return letters.size(); }

  NCWord adjoint() const;

  /// Number of letters whose tag lies in `tags`.
  int count_tags(const std::set<std::string>& tags) const;
  int count_tag(const std::string& tag) const;

  friend NCWord operator*(const NCWord& a, const NCWord& b);
  friend bool operator==(const NCWord& a, const NCWord& b) {
    return a.letters == b.letters;
  }
  // length-then-lex order: keeps maps sorted by degree
  friend bool operator<(const NCWord& a, const NCWord& b) {
    if (a.letters.size() != b.letters.size())
      return a.letters.size() < b.letters.size();
    return a.letters < b.letters;
  }
};

std::string word_to_string(const NCWord& w);
std::uint64_t word_hash(const NCWord& w);

/// Finite C-linear combination of reduced words, zero coefficients never
/// stored. The carrier for everything exact in this module.
struct NCPoly {
  std::map<NCWord, Scalar> terms;

  NCPoly() = default;
  NCPoly(int c) { add_term(NCWord(), Scalar(c)); }  // NOLINT
  NCPoly(Scalar c) { add_term(NCWord(), std::move(c)); }  // NOLINT
  explicit NCPoly(const GenSymbol& s) { add_term(NCWord{s}, Scalar(1)); }
  explicit NCPoly(const NCWord& w) { add_term(w, Scalar(1)); }

  static NCPoly zero() { return NCPoly(); }
  static NCPoly one() { return NCPoly(1); }

  void add_term(const NCWord& w, Scalar c);
  bool is_zero() const { return terms.empty(); }
  int max_degree() const;

  NCPoly& operator+=(const NCPoly& o);
  NCPoly& operator-=(const NCPoly& o);
  friend NCPoly operator+(NCPoly a, const NCPoly& b) { return a += b; }
  friend NCPoly operator-(NCPoly a, const NCPoly& b) { return a -= b; }
  friend NCPoly operator*(const NCPoly& a, const NCPoly& b);
  friend NCPoly operator*(const Scalar& c, const NCPoly& f);
  friend NCPoly operator-(const NCPoly& f) { return Scalar(-1) * f; }
  friend bool operator==(const NCPoly& a, const NCPoly& b) {
    return a.terms == b.terms;
  }
};

/// Antilinear involution: reverses words, stars letters, conjugates
/// coefficients.
NCPoly adjoint(const NCPoly& f);

std::string poly_to_string(const NCPoly& f);

/// Element of the s-fold algebraic tensor power. Multiplication of
/// equal-order values is slotwise, which realizes the bimodule actions
/// (a (x) 1)* and *(1 (x) b) used by the derivation identities.
struct TensorPoly {
  int order = 1;
  std::map<std::vector<NCWord>, Scalar> terms;

  explicit TensorPoly(int ord = 1) : order(ord) {}

  static TensorPoly zero(int order) { return TensorPoly(order); }

  void add_term(std::vector<NCWord> slots, Scalar c);
  bool is_zero() const { return terms.empty(); }

  TensorPoly& operator+=(const TensorPoly& o);
  TensorPoly& operator-=(const TensorPoly& o);
  friend TensorPoly operator+(TensorPoly a, const TensorPoly& b) { return a += b; }
  friend TensorPoly operator-(TensorPoly a, const TensorPoly& b) { return a -= b; }
  friend TensorPoly operator*(const TensorPoly& a, const TensorPoly& b);
  friend TensorPoly operator*(const Scalar& c, const TensorPoly& t);
  friend bool operator==(const TensorPoly& a, const TensorPoly& b) {
    return a.order == b.order && a.terms == b.terms;
  }
};

/// f embedded at `slot` of an order-`order` tensor, identity elsewhere.
TensorPoly embed(const NCPoly& f, int order, int slot);

/// f (x) g as an order-2 tensor.
TensorPoly tensor2(const NCPoly& f, const NCPoly& g);

/// t with `left` identity slots prepended and `right` appended.
TensorPoly tensor_pad(const TensorPoly& t, int left, int right);

std::string tensor_to_string(const TensorPoly& t);

/// The three derivation-comultiplications of the module.
///   Delta:    a -> a(x)1 - 1(x)a on split tags, 0 elsewhere
///   DUnitary: U -> 1(x)U, U* -> -U*(x)1, 0 elsewhere
///   Fdq:      X -> 1(x)1, 0 elsewhere (free difference quotient)
struct Derivation {
  enum class Kind : std::uint8_t { Delta, DUnitary, Fdq };
  Kind kind = Kind::Delta;
  std::set<std::string> split_tags;  // Delta
  std::string tag;                   // DUnitary / Fdq

  static Derivation delta(std::set<std::string> split) {
    Derivation d;
    d.kind = Kind::Delta;
    d.split_tags = std::move(split);
    return d;
  }
  static Derivation d_unitary(std::string u_tag) {
    Derivation d;
    d.kind = Kind::DUnitary;
    d.tag = std::move(u_tag);
    return d;
  }
  static Derivation fdq(std::string x_tag) {
    Derivation d;
    d.kind = Kind::Fdq;
    d.tag = std::move(x_tag);
    return d;
  }
};

TensorPoly derive(const Derivation& d, const NCPoly& f);

inline TensorPoly derive_delta(const std::set<std::string>& split, const NCPoly& f) {
  return derive(Derivation::delta(split), f);
}
inline TensorPoly derive_d(const std::string& u_tag, const NCPoly& f) {
  return derive(Derivation::d_unitary(u_tag), f);
}
inline TensorPoly derive_fdq(const std::string& x_tag, const NCPoly& f) {
  return derive(Derivation::fdq(x_tag), f);
}

/// p-fold iterate acting on the leftmost slot:
/// D^(0) = id (order 1), D^(p+1) = (D (x) id^(x)p) o D^(p).
TensorPoly iterate_derivation(const Derivation& d, int p, const NCPoly& f);

/// One more application of D to the leftmost slot of t.
TensorPoly derive_leftmost(const Derivation& d, const TensorPoly& t);

/// delta_{UAU*:A}: the derivation that treats each U a U* block as a
/// split letter (g -> g(x)1 - 1(x)g) and kills plain a-letters. Words must
/// alternate a-letters and U...U* blocks.
TensorPoly derive_delta_conjugated(const std::string& u_tag,
                                   const std::set<std::string>& a_tags,
                                   const NCPoly& f);

// ---------------------------------------------------------------------------
// numeric evaluation

/// tag -> fixed square complex matrix, one dimension for all tags.
/// Unitary-kind letters must be assigned matrices unitary to 1e-12.
struct MatrixAssignment {
  std::map<std::string, Eigen::MatrixXcd> matrices;

  int dim() const;
  const Eigen::MatrixXcd& at(const std::string& tag) const;
};

Eigen::MatrixXcd eval_word(const NCWord& w, const MatrixAssignment& asg);
Eigen::MatrixXcd eval_matrix(const NCPoly& f, const MatrixAssignment& asg);
/// Order-s tensor lands in the n^s-dimensional Kronecker space.
Eigen::MatrixXcd eval_matrix(const TensorPoly& t, const MatrixAssignment& asg);

/// theta_s[m_1..m_s]: linear extension of
/// (w_1,..,w_{s+1}) -> eval(w_1) m_1 eval(w_2) ... m_s eval(w_{s+1}).
Eigen::MatrixXcd theta_contract(const std::vector<Eigen::MatrixXcd>& ms,
                                const TensorPoly& t, const MatrixAssignment& asg);

// ---------------------------------------------------------------------------
// norm certificates

using GenNorms = std::map<std::string, double>;

/// Word-expansion upper bound on ||t||: sum over terms of |coeff| times the
/// product of the letter norms in every slot.
double tensor_norm_bound(const TensorPoly& t, const GenNorms& norms);

struct SeriesBound {
  double partial = 0.0;  // sum_{p<=p_used} R^p ||D^(p) f||-hat
  double tail = 0.0;     // geometric bound on the rest
  int p_used = 0;
  bool divergent = false;  // tail criterion 2 k R < 1 failed
};

/// Bound data for sum_p ||delta^(p)(f)|| R^p computed from the exact
/// iterates up to p_max. The tail uses the per-term branching factor
/// 2k (k = split letters in the leftmost slot) and requires 2 k R < 1.
SeriesBound delta_series_bound(const std::set<std::string>& split,
                               const NCPoly& f, double R, const GenNorms& norms,
                               int p_max = 40);

/// Upper bound on the smooth norm sum_p ||delta^(p)(f)||_(p+1) R^p, or
/// nullopt (DIVERGENT) when the geometric tail criterion fails. The bound
/// is submultiplicative like the norm it dominates.
std::optional<double> smooth_norm_bound(const std::set<std::string>& split,
                                        const NCPoly& f, const Rational& R,
                                        const GenNorms& norms, int p_max = 40);

struct RhoSeriesResult {
  Eigen::MatrixXcd value;
  double tail_bound = 0.0;
  bool tail_valid = true;  // false when the geometric criterion failed
};

/// Partial sum sum_{p<=p_max} theta_p[m,..,m](delta^(p)(f)) together with a
/// certified bound on the discarded tail at R = ||m||. Agrees with
/// rho_direct_eval within tail_bound.
RhoSeriesResult rho_series_eval(const std::set<std::string>& split,
                                const NCPoly& f, const Eigen::MatrixXcd& m,
                                const MatrixAssignment& asg, int p_max = 40);

/// Direct evaluation of rho_{(1-m)}: split letters conjugated by
/// (1-m) * . * (1-m)^{-1}, everything else evaluated as is.
Eigen::MatrixXcd rho_direct_eval(const std::set<std::string>& split,
                                 const NCPoly& f, const Eigen::MatrixXcd& m,
                                 const MatrixAssignment& asg);

// ---------------------------------------------------------------------------
// degree-filtered resolvent identities

/// alpha_K = sum_{1<=k<=K} (U b)^k; returns d(alpha_K) - (alpha_K+1)(x)alpha_K
/// with every term of U-degree > K discarded. Zero iff the resolvent
/// relation holds at each filtered degree.
TensorPoly verify_resolvent_series_d(const std::string& u_tag,
                                     const std::string& b_tag, int K);

/// alpha_K = sum_{0<=k<=K} (-a)^k; returns
/// delta(alpha_K) + (alpha_K (x) 1)(a(x)1 - 1(x)a)(1 (x) alpha_K)
/// with every term of total a-degree > K discarded.
TensorPoly verify_resolvent_series_delta(const std::set<std::string>& split,
                                         const std::string& a_tag, int K);

}  // namespace freesub::ncalg
