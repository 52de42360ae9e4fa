#include "freesub/freeprob.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace freesub::freeprob {

using ncalg::Derivation;

// ---------------------------------------------------------------------------
// AlgebraSpec

AlgebraSpec AlgebraSpec::selfadjoint_moments(std::string tag,
                                             std::vector<Rational> ms) {
  AlgebraSpec s;
  s.tag = std::move(tag);
  s.kind = SymbolKind::SelfAdjoint;
  s.moments.reserve(ms.size());
  for (auto& m : ms) s.moments.emplace_back(std::move(m));
  s.validate();
  return s;
}

AlgebraSpec AlgebraSpec::unitary_moments(std::string tag,
                                         std::vector<Scalar> cs) {
  AlgebraSpec s;
  s.tag = std::move(tag);
  s.kind = SymbolKind::Unitary;
  s.moments = std::move(cs);
  s.validate();
  return s;
}

AlgebraSpec AlgebraSpec::selfadjoint_atoms(
    std::string tag, std::vector<std::pair<Rational, Rational>> atoms) {
  AlgebraSpec s;
  s.tag = std::move(tag);
  s.kind = SymbolKind::SelfAdjoint;
  s.atomic = true;
  for (auto& [t, w] : atoms) s.atoms.emplace_back(Scalar(t), w);
  s.validate();
  return s;
}

AlgebraSpec AlgebraSpec::unitary_atoms(
    std::string tag, std::vector<std::pair<Scalar, Rational>> atoms) {
  AlgebraSpec s;
  s.tag = std::move(tag);
  s.kind = SymbolKind::Unitary;
  s.atomic = true;
  s.atoms = std::move(atoms);
  s.validate();
  return s;
}

AlgebraSpec AlgebraSpec::haar_unitary(std::string tag, int order) {
  AlgebraSpec s;
  s.tag = std::move(tag);
  s.kind = SymbolKind::Unitary;
  s.moments.assign(order, Scalar(0));
  return s;
}

Scalar AlgebraSpec::moment(long k) const {
  if (kind == SymbolKind::SelfAdjoint) {
    if (k < 0) throw std::invalid_argument("selfadjoint moment with k < 0");
    if (k == 0) return Scalar(1);
    if (atomic) {
      Scalar out(0);
      for (auto& [t, w] : atoms) {
        Rational p = 1;
        for (long i = 0; i < k; ++i) p *= t.re;
        out += Scalar(w * p);
      }
      return out;
    }
    if (k > static_cast<long>(moments.size()))
      throw MomentOrderError("insufficient moment order for tag '" + tag +
                             "': need m_" + std::to_string(k));
    return moments[k - 1];
  }
  // unitary
  if (k == 0) return Scalar(1);
  bool neg = k < 0;
  long n = neg ? -k : k;
  Scalar out(0);
  if (atomic) {
    for (auto& [z, w] : atoms) {
      Scalar p(1);
      for (long i = 0; i < n; ++i) p *= z;
      out += Scalar(w) * p;
    }
  } else {
    if (n > static_cast<long>(moments.size()))
      throw MomentOrderError("insufficient moment order for tag '" + tag +
                             "': need c_" + std::to_string(n));
    out = moments[n - 1];
  }
  return neg ? out.conj() : out;
}

namespace {

// Exact PSD test for a Hermitian matrix of Gaussian rationals: symmetric
// elimination with the zero-pivot-forces-zero-row rule.
bool hermitian_psd_exact(std::vector<std::vector<Scalar>> M) {
  const std::size_t n = M.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Scalar& piv = M[k][k];
    if (!piv.is_real() || piv.re < 0) return false;
    if (piv.re == 0) {
      for (std::size_t j = k + 1; j < n; ++j)
        if (!M[k][j].is_zero() || !M[j][k].is_zero()) return false;
      continue;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      if (M[i][k].is_zero()) continue;
      Scalar f = M[i][k] / piv;
      for (std::size_t j = k + 1; j < n; ++j) M[i][j] -= f * M[k][j];
    }
  }
  return true;
}

}  // namespace

void AlgebraSpec::validate() const {
  if (atomic) {
    Rational total = 0;
    for (auto& [pos, w] : atoms) {
      if (w <= 0) throw std::invalid_argument("atom weight must be positive");
      total += w;
      if (kind == SymbolKind::SelfAdjoint && !pos.is_real())
        throw std::invalid_argument("selfadjoint atom must be real");
      if (kind == SymbolKind::Unitary && pos.norm2() != 1)
        throw std::invalid_argument("unitary atom must lie on the circle");
    }
    if (total != 1) throw std::invalid_argument("atom weights must sum to 1");
    return;
  }
  if (kind == SymbolKind::SelfAdjoint) {
    for (auto& m : moments)
      if (!m.is_real())
        throw std::invalid_argument("selfadjoint moments must be real");
    std::size_t s = moments.size() / 2 + 1;
    std::vector<std::vector<Scalar>> H(s, std::vector<Scalar>(s));
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j)
        H[i][j] = moment(static_cast<long>(i + j));
    if (!hermitian_psd_exact(H))
      throw std::invalid_argument("moment sequence fails Hankel positivity");
  } else {
    std::size_t s = moments.size() + 1;
    std::vector<std::vector<Scalar>> T(s, std::vector<Scalar>(s));
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j)
        T[i][j] = moment(static_cast<long>(i) - static_cast<long>(j));
    if (!hermitian_psd_exact(T))
      throw std::invalid_argument("circle moments fail Toeplitz positivity");
  }
}

// ---------------------------------------------------------------------------
// FreeState

FreeState FreeState::symbolic(std::vector<AlgebraSpec> specs) {
  FreeState st;
  st.symbolic_ = true;
  for (auto& s : specs) {
    if (st.specs_.count(s.tag))
      throw std::invalid_argument("duplicate component tag '" + s.tag + "'");
    st.specs_.emplace(s.tag, std::move(s));
  }
  return st;
}

FreeState FreeState::matrix(ncalg::MatrixAssignment assignment) {
  FreeState st;
  st.symbolic_ = false;
  st.assignment_ = std::move(assignment);
  return st;
}

const AlgebraSpec& FreeState::spec(const std::string& tag) const {
  auto it = specs_.find(tag);
  if (it == specs_.end())
    throw std::invalid_argument("unknown component tag '" + tag + "'");
  return it->second;
}

const ncalg::MatrixAssignment& FreeState::assignment() const {
  if (symbolic_) throw std::logic_error("assignment(): symbolic backend");
  return assignment_;
}

std::vector<std::string> FreeState::tags() const {
  std::vector<std::string> out;
  out.reserve(specs_.size());
  for (auto& [t, s] : specs_) out.push_back(t);
  return out;
}

Scalar FreeState::block_moment(const NCWord& block) const {
  const GenSymbol& first = block.letters.front();
  const AlgebraSpec& sp = spec(first.tag);
  for (auto& l : block.letters) {
    if (l.index != 0)
      throw std::invalid_argument(
          "symbolic backend supports a single generator per component");
    if (l.kind != sp.kind)
      throw std::invalid_argument("letter kind disagrees with component '" +
                                  first.tag + "'");
  }
  if (sp.kind == SymbolKind::SelfAdjoint)
    return sp.moment(static_cast<long>(block.size()));
  long k = static_cast<long>(block.size());
  return sp.moment(block.letters.front().star ? -k : k);
}

namespace {

std::vector<NCWord> segment_blocks(const NCWord& w) {
  std::vector<NCWord> blocks;
  std::vector<GenSymbol> cur;
  for (auto& s : w.letters) {
    if (!cur.empty() && cur.back().tag != s.tag) {
      blocks.emplace_back(std::move(cur));
      cur.clear();
    }
    cur.push_back(s);
  }
  if (!cur.empty()) blocks.emplace_back(std::move(cur));
  return blocks;
}

NCWord drop_blocks(const std::vector<NCWord>& blocks, unsigned mask) {
  std::vector<GenSymbol> letters;
  for (std::size_t i = 0; i < blocks.size(); ++i)
    if (!(mask >> i & 1u))
      letters.insert(letters.end(), blocks[i].letters.begin(),
                     blocks[i].letters.end());
  return NCWord(std::move(letters));
}

}  // namespace

Scalar FreeState::tau_word(const NCWord& w) const {
  if (w.empty()) return Scalar(1);
  auto blocks = segment_blocks(w);
  if (blocks.size() == 1) return block_moment(blocks[0]);
  if (blocks.size() > 24)
    throw std::invalid_argument("tau: word has too many alternating blocks");

  {
    std::scoped_lock lock(caches_->mutex);
    auto it = caches_->tau.find(w);
    if (it != caches_->tau.end()) return it->second;
  }

  // expand 0 = tau(prod_i (b_i - tau(b_i))) over block subsets and solve
  // for the trace of the full word
  const unsigned m = static_cast<unsigned>(blocks.size());
  std::vector<Scalar> bm(m);
  for (unsigned i = 0; i < m; ++i) bm[i] = block_moment(blocks[i]);

  Scalar total(0);
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    Scalar coef(1);
    for (unsigned i = 0; i < m; ++i)
      if (mask >> i & 1u) coef *= bm[i];
    if (coef.is_zero()) continue;
    NCWord sub = drop_blocks(blocks, mask);
    if (std::popcount(mask) % 2 == 0) coef = -coef;
    total += coef * tau_word(sub);
  }

  std::scoped_lock lock(caches_->mutex);
  caches_->tau.emplace(w, total);
  return total;
}

Scalar FreeState::tau(const NCWord& w) const {
  if (!symbolic_)
    throw std::logic_error("tau: exact trace needs the SYMBOLIC backend");
  return tau_word(w);
}

Scalar FreeState::tau(const NCPoly& f) const {
  Scalar out(0);
  for (auto& [w, c] : f.terms) out += c * tau(w);
  return out;
}

Scalar FreeState::tau_tensor(const TensorPoly& t) const {
  Scalar out(0);
  for (auto& [slots, c] : t.terms) {
    Scalar prod = c;
    for (auto& w : slots) prod *= tau(w);
    out += prod;
  }
  return out;
}

std::complex<double> FreeState::tau_c(const NCWord& w) const {
  if (symbolic_) return tau(w).to_complex();
  int n = assignment_.dim();
  return ncalg::eval_word(w, assignment_).trace() / static_cast<double>(n);
}

std::complex<double> FreeState::tau_c(const NCPoly& f) const {
  std::complex<double> out{0.0, 0.0};
  for (auto& [w, c] : f.terms) out += c.to_complex() * tau_c(w);
  return out;
}

std::complex<double> FreeState::tau_tensor_c(const TensorPoly& t) const {
  std::complex<double> out{0.0, 0.0};
  for (auto& [slots, c] : t.terms) {
    std::complex<double> prod = c.to_complex();
    for (auto& w : slots) prod *= tau_c(w);
    out += prod;
  }
  return out;
}

NCPoly FreeState::expect_word(const NCWord& w,
                              const std::set<std::string>& target) const {
  auto blocks = segment_blocks(w);
  bool inside = true;
  for (auto& b : blocks)
    if (!target.count(b.letters.front().tag)) {
      inside = false;
      break;
    }
  if (inside) return NCPoly(w);  // fixed; covers the empty word

  {
    std::scoped_lock lock(caches_->mutex);
    auto& cache = caches_->expect[target];
    auto it = cache.find(w);
    if (it != cache.end()) return it->second;
  }

  const unsigned m = static_cast<unsigned>(blocks.size());
  if (m > 24) throw std::invalid_argument("cond_expect: too many blocks");
  std::vector<Scalar> bm(m);
  for (unsigned i = 0; i < m; ++i) bm[i] = block_moment(blocks[i]);

  NCPoly total;
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    Scalar coef(1);
    for (unsigned i = 0; i < m; ++i)
      if (mask >> i & 1u) coef *= bm[i];
    if (coef.is_zero()) continue;
    if (std::popcount(mask) % 2 == 0) coef = -coef;
    NCWord sub = drop_blocks(blocks, mask);
    total += coef * expect_word(sub, target);
  }

  std::scoped_lock lock(caches_->mutex);
  caches_->expect[target].emplace(w, total);
  return total;
}

NCPoly FreeState::cond_expect(const NCPoly& f,
                              const std::set<std::string>& target) const {
  if (!symbolic_)
    throw std::logic_error("cond_expect needs the SYMBOLIC backend");
  for (auto& t : target) spec(t);
  NCPoly out;
  for (auto& [w, c] : f.terms) out += c * expect_word(w, target);
  return out;
}

// ---------------------------------------------------------------------------
// pairings

Scalar liberation_pairing(const FreeState& state,
                          const std::set<std::string>& split, const NCWord& w) {
  return state.tau_tensor(ncalg::derive_delta(split, NCPoly(w)));
}

std::complex<double> liberation_pairing_c(const FreeState& state,
                                          const std::set<std::string>& split,
                                          const NCWord& w) {
  return state.tau_tensor_c(ncalg::derive_delta(split, NCPoly(w)));
}

Scalar conjugate_pairing(const FreeState& state, const std::string& u_tag,
                         const NCWord& w) {
  return state.tau_tensor(ncalg::derive_d(u_tag, NCPoly(w)));
}

std::complex<double> conjugate_pairing_c(const FreeState& state,
                                         const std::string& u_tag,
                                         const NCWord& w) {
  return state.tau_tensor_c(ncalg::derive_d(u_tag, NCPoly(w)));
}

// ---------------------------------------------------------------------------
// morphism identities

namespace {

TensorPoly expect_tensor(const FreeState& state, const TensorPoly& t,
                         const std::set<std::string>& target) {
  TensorPoly out(t.order);
  for (auto& [slots, c] : t.terms) {
    std::vector<NCPoly> imgs;
    imgs.reserve(slots.size());
    for (auto& w : slots) imgs.push_back(state.cond_expect(NCPoly(w), target));
    std::vector<std::pair<std::vector<NCWord>, Scalar>> acc{
        {std::vector<NCWord>{}, c}};
    for (auto& img : imgs) {
      std::vector<std::pair<std::vector<NCWord>, Scalar>> next;
      for (auto& [pref, pc] : acc)
        for (auto& [w, wc] : img.terms) {
          auto slots2 = pref;
          slots2.push_back(w);
          next.emplace_back(std::move(slots2), pc * wc);
        }
      acc = std::move(next);
    }
    for (auto& [s, sc] : acc) out.add_term(s, sc);
  }
  return out;
}

}  // namespace

TensorPoly check_coalgebra_delta(const FreeState& state,
                                 const std::set<std::string>& split,
                                 const NCWord& w) {
  TensorPoly lhs =
      expect_tensor(state, ncalg::derive_delta(split, NCPoly(w)), split);
  TensorPoly rhs =
      ncalg::derive_delta(split, state.cond_expect(NCPoly(w), split));
  return lhs - rhs;
}

namespace {

void require_uv_word(const NCWord& w, const std::string& u_tag,
                     const std::string& v_tag) {
  std::size_t i = 0;
  while (i < w.letters.size()) {
    const auto& s = w.letters[i];
    if (s.tag == u_tag && !s.star) {
      if (i + 1 >= w.letters.size() || w.letters[i + 1].tag != v_tag ||
          w.letters[i + 1].star)
        throw std::invalid_argument("word not in <UV, V*U*>");
      i += 2;
    } else if (s.tag == v_tag && s.star) {
      if (i + 1 >= w.letters.size() || w.letters[i + 1].tag != u_tag ||
          !w.letters[i + 1].star)
        throw std::invalid_argument("word not in <UV, V*U*>");
      i += 2;
    } else {
      throw std::invalid_argument("word not in <UV, V*U*>");
    }
  }
}

}  // namespace

TensorPoly check_coalgebra_d(const FreeState& state, const std::string& u_tag,
                             const std::string& v_tag, const NCWord& w) {
  require_uv_word(w, u_tag, v_tag);
  std::set<std::string> target{u_tag};
  // d_{UV} agrees with d_U on words over UV and (UV)*
  TensorPoly lhs =
      expect_tensor(state, ncalg::derive_d(u_tag, NCPoly(w)), target);
  TensorPoly rhs = ncalg::derive_d(u_tag, state.cond_expect(NCPoly(w), target));
  return lhs - rhs;
}

TensorPoly check_d_equals_minus_delta(const std::string& u_tag,
                                      const std::set<std::string>& a_tags,
                                      const NCWord& w) {
  NCPoly f(w);
  return ncalg::derive_d(u_tag, f) +
         ncalg::derive_delta_conjugated(u_tag, a_tags, f);
}

Scalar check_freeconj_pairing(const FreeState& state, const std::string& u_tag,
                              const NCWord& w) {
  std::set<std::string> target{u_tag};
  Scalar lhs = state.tau_tensor(ncalg::derive_d(u_tag, NCPoly(w)));
  Scalar rhs = state.tau_tensor(
      ncalg::derive_d(u_tag, state.cond_expect(NCPoly(w), target)));
  return lhs - rhs;
}

double graddist_bound(double norm_j) {
  if (norm_j < 0) throw std::invalid_argument("graddist_bound: negative norm");
  return norm_j / std::sqrt(1.0 + norm_j * norm_j);
}

// ---------------------------------------------------------------------------
// alternating-product moments via noncrossing partitions

std::vector<Scalar> free_cumulants(const AlgebraSpec& s, int order) {
  // m_n = sum_{k=1}^{n} kappa_k [z^{n-k}] M(z)^k with M = 1 + sum m_j z^j
  std::vector<Scalar> m(order + 1, Scalar(1));
  for (int n = 1; n <= order; ++n) m[n] = s.moment(n);

  auto mul = [order](const std::vector<Scalar>& a, const std::vector<Scalar>& b) {
    std::vector<Scalar> c(order + 1, Scalar(0));
    for (int i = 0; i <= order; ++i) {
      if (a[i].is_zero()) continue;
      for (int j = 0; i + j <= order; ++j) c[i + j] += a[i] * b[j];
    }
    return c;
  };

  std::vector<std::vector<Scalar>> mpow(order + 1);
  mpow[0].assign(order + 1, Scalar(0));
  mpow[0][0] = Scalar(1);
  for (int k = 1; k <= order; ++k) mpow[k] = mul(mpow[k - 1], m);

  std::vector<Scalar> kappa(order + 1, Scalar(0));
  for (int n = 1; n <= order; ++n) {
    Scalar acc = m[n];
    for (int k = 1; k < n; ++k) acc -= kappa[k] * mpow[k][n - k];
    kappa[n] = acc;  // [z^0] M^n = 1
  }
  return kappa;
}

Scalar alternating_product_moment(const AlgebraSpec& x, const AlgebraSpec& y,
                                  int n) {
  if (n < 0) throw std::invalid_argument("alternating_product_moment: n < 0");
  if (n == 0) return Scalar(1);
  const int L = 2 * n;
  std::vector<std::vector<Scalar>> kappa{free_cumulants(x, n),
                                         free_cumulants(y, n)};

  // f[i][j] = trace of the alternating subword on positions i..j (tag of a
  // position is its parity); empty intervals have trace 1
  auto fidx = [L](int i, int j) { return i * (L + 1) + (j + 1); };
  std::vector<Scalar> f((L + 1) * (L + 1), Scalar(1));
  auto fat = [&](int i, int j) -> Scalar& { return f[fidx(i, j)]; };

  for (int len = 1; len <= L; ++len) {
    for (int i = 0; i + len - 1 < L; ++i) {
      const int j = i + len - 1;
      const int tag = i & 1;
      // chain[s][p]: size-s noncrossing block i = p_1 < .. < p_s = p of
      // same-parity positions, times the traces of the gaps between them
      const int max_s = (len + 1) / 2;
      std::vector<std::vector<Scalar>> chain(
          max_s + 1, std::vector<Scalar>(L, Scalar(0)));
      chain[1][i] = Scalar(1);
      for (int s = 2; s <= max_s; ++s)
        for (int p = i + 2 * (s - 1); p <= j; p += 2)
          for (int q = i + 2 * (s - 2); q < p; q += 2) {
            if (chain[s - 1][q].is_zero()) continue;
            chain[s][p] += chain[s - 1][q] * fat(q + 1, p - 1);
          }
      Scalar total(0);
      for (int s = 1; s <= max_s; ++s) {
        if (kappa[tag][s].is_zero()) continue;
        for (int p = i + 2 * (s - 1); p <= j; p += 2) {
          if (chain[s][p].is_zero()) continue;
          total += kappa[tag][s] * chain[s][p] * fat(p + 1, j);
        }
      }
      fat(i, j) = total;
    }
  }
  return fat(0, L - 1);
}

// ---------------------------------------------------------------------------
// random specs

AlgebraSpec random_selfadjoint_spec(const std::string& tag,
                                    std::mt19937_64& rng, int max_atoms) {
  std::uniform_int_distribution<int> natoms(2, max_atoms);
  std::uniform_int_distribution<int> num(-6, 6);
  std::uniform_int_distribution<int> den(1, 4);
  std::uniform_int_distribution<int> wnum(1, 9);
  int k = natoms(rng);
  std::vector<std::pair<Rational, Rational>> atoms;
  std::set<Rational> used;
  while (static_cast<int>(atoms.size()) < k) {
    Rational t(num(rng), den(rng));
    if (used.count(t)) continue;
    used.insert(t);
    atoms.emplace_back(t, Rational(wnum(rng)));
  }
  Rational total = 0;
  for (auto& [t, w] : atoms) total += w;
  for (auto& [t, w] : atoms) w /= total;
  return AlgebraSpec::selfadjoint_atoms(tag, std::move(atoms));
}

AlgebraSpec random_unitary_spec(const std::string& tag, std::mt19937_64& rng,
                                int max_atoms) {
  // rational circle points from Pythagorean triples
  static const std::vector<std::pair<Rational, Rational>> circle = {
      {1, 0},
      {-1, 0},
      {0, 1},
      {0, -1},
      {Rational(3, 5), Rational(4, 5)},
      {Rational(3, 5), Rational(-4, 5)},
      {Rational(-3, 5), Rational(4, 5)},
      {Rational(-3, 5), Rational(-4, 5)},
      {Rational(5, 13), Rational(12, 13)},
      {Rational(5, 13), Rational(-12, 13)},
      {Rational(-5, 13), Rational(12, 13)},
      {Rational(8, 17), Rational(15, 17)},
      {Rational(8, 17), Rational(-15, 17)}};
  std::uniform_int_distribution<int> natoms(2, max_atoms);
  std::uniform_int_distribution<int> pick(0,
                                          static_cast<int>(circle.size()) - 1);
  std::uniform_int_distribution<int> wnum(1, 9);
  int k = natoms(rng);
  std::vector<std::pair<Scalar, Rational>> atoms;
  std::set<std::pair<Rational, Rational>> used;
  while (static_cast<int>(atoms.size()) < k) {
    auto pt = circle[pick(rng)];
    if (used.count(pt)) continue;
    used.insert(pt);
    atoms.emplace_back(Scalar(pt.first, pt.second), Rational(wnum(rng)));
  }
  Rational total = 0;
  for (auto& [z, w] : atoms) total += w;
  for (auto& [z, w] : atoms) w /= total;
  return AlgebraSpec::unitary_atoms(tag, std::move(atoms));
}

std::vector<NCWord> enumerate_words(const std::vector<GenSymbol>& letters,
                                    int max_len) {
  std::vector<NCWord> out;
  std::set<NCWord> seen;
  std::vector<std::vector<GenSymbol>> frontier{{}};
  for (int len = 1; len <= max_len; ++len) {
    std::vector<std::vector<GenSymbol>> next;
    for (auto& base : frontier)
      for (auto& l : letters) {
        auto ext = base;
        ext.push_back(l);
        NCWord w{std::vector<GenSymbol>(ext)};
        next.push_back(std::move(ext));
        if (static_cast<int>(w.size()) == len && !seen.count(w)) {
          seen.insert(w);
          out.push_back(std::move(w));
        }
      }
    frontier = std::move(next);
  }
  return out;
}

}  // namespace freesub::freeprob
