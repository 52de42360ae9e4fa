#include "freesub/ncalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace freesub {

std::string rational_to_string(const Rational& r) {
  std::ostringstream os;
  os << numerator(r) << "/" << denominator(r);
  return os.str();
}

Rational rational_from_string(const std::string& s) {
  auto slash = s.find('/');
  try {
    if (slash == std::string::npos) return Rational(BigInt(s));
    BigInt num(s.substr(0, slash));
    BigInt den(s.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator");
    return Rational(num, den);
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed rational: '" + s + "'");
  }
}

double scalar_abs_upper(const Scalar& z) {
  double v = std::sqrt(static_cast<double>(z.norm2()));
  return v * (1.0 + 4e-16);
}

std::string scalar_to_string(const Scalar& z) {
  return rational_to_string(z.re) + (z.im >= 0 ? "+" : "") +
         rational_to_string(z.im) + "i";
}

}  // namespace freesub

namespace freesub::ncalg {

// ---------------------------------------------------------------------------
// words

void NCWord::reduce() {
  std::vector<GenSymbol> out;
  out.reserve(letters.size());
  for (auto& s : letters) {
    if (!out.empty() && s.kind == SymbolKind::Unitary &&
        out.back().kind == SymbolKind::Unitary && out.back().tag == s.tag &&
        out.back().index == s.index && out.back().star != s.star) {
      out.pop_back();
    } else {
      out.push_back(s);
    }
  }
  letters = std::move(out);
}

NCWord NCWord::adjoint() const {
  std::vector<GenSymbol> rev;
  rev.reserve(letters.size());
  for (auto it = letters.rbegin(); it != letters.rend(); ++it)
    rev.push_back(it->adjoint());
  return NCWord(std::move(rev));
}

int NCWord::count_tags(const std::set<std::string>& tags) const {
  int n = 0;
  for (auto& s : letters) n += tags.count(s.tag) ? 1 : 0;
  return n;
}

int NCWord::count_tag(const std::string& tag) const {
  int n = 0;
  for (auto& s : letters) n += s.tag == tag ? 1 : 0;
  return n;
}

NCWord operator*(const NCWord& a, const NCWord& b) {
  std::vector<GenSymbol> ls = a.letters;
  ls.insert(ls.end(), b.letters.begin(), b.letters.end());
  return NCWord(std::move(ls));
}

std::string word_to_string(const NCWord& w) {
  if (w.empty()) return "1";
  std::string out;
  for (auto& s : w.letters) {
    out += s.tag;
    if (s.index != 0) out += "_" + std::to_string(s.index);
    if (s.star) out += "*";
    out += " ";
  }
  out.pop_back();
  return out;
}

std::uint64_t word_hash(const NCWord& w) {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  };
  for (auto& s : w.letters) {
    mix(std::hash<std::string>{}(s.tag));
    mix(static_cast<std::uint64_t>(s.index) * 2 + (s.star ? 1 : 0));
    mix(static_cast<std::uint64_t>(s.kind));
  }
  return h;
}

// ---------------------------------------------------------------------------
// polynomials

void NCPoly::add_term(const NCWord& w, Scalar c) {
  if (c.is_zero()) return;
  auto it = terms.find(w);
  if (it == terms.end()) {
    terms.emplace(w, std::move(c));
  } else {
    it->second += c;
    if (it->second.is_zero()) terms.erase(it);
  }
}

int NCPoly::max_degree() const {
  int d = 0;
  for (auto& [w, c] : terms) d = std::max<int>(d, static_cast<int>(w.size()));
  return d;
}

NCPoly& NCPoly::operator+=(const NCPoly& o) {
  for (auto& [w, c] : o.terms) add_term(w, c);
  return *this;
}

NCPoly& NCPoly::operator-=(const NCPoly& o) {
  for (auto& [w, c] : o.terms) add_term(w, -c);
  return *this;
}

NCPoly operator*(const NCPoly& a, const NCPoly& b) {
  NCPoly out;
  for (auto& [wa, ca] : a.terms)
    for (auto& [wb, cb] : b.terms) out.add_term(wa * wb, ca * cb);
  return out;
}

NCPoly operator*(const Scalar& c, const NCPoly& f) {
  NCPoly out;
  for (auto& [w, cf] : f.terms) out.add_term(w, c * cf);
  return out;
}

NCPoly adjoint(const NCPoly& f) {
  NCPoly out;
  for (auto& [w, c] : f.terms) out.add_term(w.adjoint(), c.conj());
  return out;
}

std::string poly_to_string(const NCPoly& f) {
  if (f.is_zero()) return "0";
  std::string out;
  for (auto& [w, c] : f.terms) {
    if (!out.empty()) out += " + ";
    out += "(" + scalar_to_string(c) + ")" + word_to_string(w);
  }
  return out;
}

// ---------------------------------------------------------------------------
// tensors

void TensorPoly::add_term(std::vector<NCWord> slots, Scalar c) {
  if (static_cast<int>(slots.size()) != order)
    throw std::invalid_argument("TensorPoly: slot count does not match order");
  if (c.is_zero()) return;
  auto it = terms.find(slots);
  if (it == terms.end()) {
    terms.emplace(std::move(slots), std::move(c));
  } else {
    it->second += c;
    if (it->second.is_zero()) terms.erase(it);
  }
}

TensorPoly& TensorPoly::operator+=(const TensorPoly& o) {
  if (order != o.order) throw std::invalid_argument("TensorPoly: order mismatch");
  for (auto& [s, c] : o.terms) add_term(s, c);
  return *this;
}

TensorPoly& TensorPoly::operator-=(const TensorPoly& o) {
  if (order != o.order) throw std::invalid_argument("TensorPoly: order mismatch");
  for (auto& [s, c] : o.terms) add_term(s, -c);
  return *this;
}

TensorPoly operator*(const TensorPoly& a, const TensorPoly& b) {
  if (a.order != b.order) throw std::invalid_argument("TensorPoly: order mismatch");
  TensorPoly out(a.order);
  for (auto& [sa, ca] : a.terms)
    for (auto& [sb, cb] : b.terms) {
      std::vector<NCWord> slots(a.order);
      for (int i = 0; i < a.order; ++i) slots[i] = sa[i] * sb[i];
      out.add_term(std::move(slots), ca * cb);
    }
  return out;
}

TensorPoly operator*(const Scalar& c, const TensorPoly& t) {
  TensorPoly out(t.order);
  for (auto& [s, ct] : t.terms) out.add_term(s, c * ct);
  return out;
}

TensorPoly embed(const NCPoly& f, int order, int slot) {
  if (slot < 0 || slot >= order)
    throw std::invalid_argument("embed: slot out of range");
  TensorPoly out(order);
  for (auto& [w, c] : f.terms) {
    std::vector<NCWord> slots(order);
    slots[slot] = w;
    out.add_term(std::move(slots), c);
  }
  return out;
}

TensorPoly tensor2(const NCPoly& f, const NCPoly& g) {
  TensorPoly out(2);
  for (auto& [wf, cf] : f.terms)
    for (auto& [wg, cg] : g.terms) out.add_term({wf, wg}, cf * cg);
  return out;
}

TensorPoly tensor_pad(const TensorPoly& t, int left, int right) {
  TensorPoly out(t.order + left + right);
  for (auto& [s, c] : t.terms) {
    std::vector<NCWord> slots(left);
    slots.insert(slots.end(), s.begin(), s.end());
    slots.resize(out.order);
    out.add_term(std::move(slots), c);
  }
  return out;
}

std::string tensor_to_string(const TensorPoly& t) {
  if (t.is_zero()) return "0";
  std::string out;
  for (auto& [s, c] : t.terms) {
    if (!out.empty()) out += " + ";
    out += "(" + scalar_to_string(c) + ")";
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) out += " (x) ";
      out += word_to_string(s[i]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// derivations

namespace {

// D(letter) as a list of (left word, right word, coefficient); empty when
// the letter is killed.
struct LetterImage {
  std::vector<std::tuple<NCWord, NCWord, Scalar>> parts;
};

LetterImage letter_image(const Derivation& d, const GenSymbol& s) {
  LetterImage img;
  switch (d.kind) {
    case Derivation::Kind::Delta:
      if (d.split_tags.count(s.tag)) {
        img.parts.emplace_back(NCWord{s}, NCWord(), Scalar(1));
        img.parts.emplace_back(NCWord(), NCWord{s}, Scalar(-1));
      }
      break;
    case Derivation::Kind::DUnitary:
      if (s.tag == d.tag) {
        if (s.kind != SymbolKind::Unitary)
          throw std::invalid_argument("derive: tag '" + s.tag +
                                      "' is not a unitary symbol");
        if (!s.star)
          img.parts.emplace_back(NCWord(), NCWord{s}, Scalar(1));
        else
          img.parts.emplace_back(NCWord{s}, NCWord(), Scalar(-1));
      }
      break;
    case Derivation::Kind::Fdq:
      if (s.tag == d.tag)
        img.parts.emplace_back(NCWord(), NCWord(), Scalar(1));
      break;
  }
  return img;
}

}  // namespace

TensorPoly derive(const Derivation& d, const NCPoly& f) {
  TensorPoly out(2);
  for (auto& [w, c] : f.terms) {
    for (std::size_t i = 0; i < w.letters.size(); ++i) {
      LetterImage img = letter_image(d, w.letters[i]);
      if (img.parts.empty()) continue;
      NCWord prefix(std::vector<GenSymbol>(w.letters.begin(),
                                           w.letters.begin() + i));
      NCWord suffix(std::vector<GenSymbol>(w.letters.begin() + i + 1,
                                           w.letters.end()));
      for (auto& [wl, wr, cc] : img.parts)
        out.add_term({prefix * wl, wr * suffix}, c * cc);
    }
  }
  return out;
}

TensorPoly derive_leftmost(const Derivation& d, const TensorPoly& t) {
  TensorPoly out(t.order + 1);
  for (auto& [slots, c] : t.terms) {
    const NCWord& w = slots[0];
    for (std::size_t i = 0; i < w.letters.size(); ++i) {
      LetterImage img = letter_image(d, w.letters[i]);
      if (img.parts.empty()) continue;
      NCWord prefix(std::vector<GenSymbol>(w.letters.begin(),
                                           w.letters.begin() + i));
      NCWord suffix(std::vector<GenSymbol>(w.letters.begin() + i + 1,
                                           w.letters.end()));
      for (auto& [wl, wr, cc] : img.parts) {
        std::vector<NCWord> ns;
        ns.reserve(t.order + 1);
        ns.push_back(prefix * wl);
        ns.push_back(wr * suffix);
        ns.insert(ns.end(), slots.begin() + 1, slots.end());
        out.add_term(std::move(ns), c * cc);
      }
    }
  }
  return out;
}

TensorPoly iterate_derivation(const Derivation& d, int p, const NCPoly& f) {
  if (p < 0) throw std::invalid_argument("iterate_derivation: p < 0");
  TensorPoly t = embed(f, 1, 0);
  for (int q = 0; q < p; ++q) t = derive_leftmost(d, t);
  return t;
}

TensorPoly derive_delta_conjugated(const std::string& u_tag,
                                   const std::set<std::string>& a_tags,
                                   const NCPoly& f) {
  TensorPoly out(2);
  for (auto& [w, c] : f.terms) {
    // segment into plain a-letters and U <a-word> U* blocks
    struct Block {
      NCWord word;
      bool conjugated;
    };
    std::vector<Block> blocks;
    std::size_t i = 0;
    while (i < w.letters.size()) {
      const GenSymbol& s = w.letters[i];
      if (s.tag == u_tag) {
        if (s.star)
          throw std::invalid_argument(
              "derive_delta_conjugated: unmatched adjoint unitary in '" +
              word_to_string(w) + "'");
        std::size_t j = i + 1;
        std::vector<GenSymbol> inner;
        while (j < w.letters.size() && w.letters[j].tag != u_tag) {
          if (!a_tags.count(w.letters[j].tag))
            throw std::invalid_argument(
                "derive_delta_conjugated: foreign letter inside block");
          inner.push_back(w.letters[j]);
          ++j;
        }
        if (j >= w.letters.size() || !w.letters[j].star)
          throw std::invalid_argument(
              "derive_delta_conjugated: unbalanced block in '" +
              word_to_string(w) + "'");
        std::vector<GenSymbol> blk;
        blk.push_back(s);
        blk.insert(blk.end(), inner.begin(), inner.end());
        blk.push_back(w.letters[j]);
        blocks.push_back({NCWord(std::move(blk)), true});
        i = j + 1;
      } else if (a_tags.count(s.tag)) {
        blocks.push_back({NCWord{s}, false});
        ++i;
      } else {
        throw std::invalid_argument(
            "derive_delta_conjugated: letter outside A and UAU*");
      }
    }
    // Leibniz over blocks; conjugated blocks are the split letters
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      if (!blocks[k].conjugated) continue;
      NCWord prefix, suffix;
      for (std::size_t q = 0; q < k; ++q) prefix = prefix * blocks[q].word;
      for (std::size_t q = k + 1; q < blocks.size(); ++q)
        suffix = suffix * blocks[q].word;
      out.add_term({prefix * blocks[k].word, suffix}, c);
      out.add_term({prefix, blocks[k].word * suffix}, -c);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// evaluation

int MatrixAssignment::dim() const {
  if (matrices.empty()) throw std::invalid_argument("empty assignment");
  return static_cast<int>(matrices.begin()->second.rows());
}

const Eigen::MatrixXcd& MatrixAssignment::at(const std::string& tag) const {
  auto it = matrices.find(tag);
  if (it == matrices.end())
    throw std::invalid_argument("no matrix assigned to tag '" + tag + "'");
  return it->second;
}

namespace {

void check_assignment(const NCWord& w, const MatrixAssignment& asg, int n) {
  for (auto& s : w.letters) {
    const auto& m = asg.at(s.tag);
    if (m.rows() != n || m.cols() != n)
      throw std::invalid_argument("matrix dimension mismatch for tag '" +
                                  s.tag + "'");
    if (s.kind == SymbolKind::Unitary) {
      double dev = (m.adjoint() * m - Eigen::MatrixXcd::Identity(n, n)).norm();
      if (dev > 1e-12 * std::sqrt(static_cast<double>(n)))
        throw std::invalid_argument("tag '" + s.tag +
                                    "' is unitary but its matrix is not");
    }
  }
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

Eigen::MatrixXcd eval_word(const NCWord& w, const MatrixAssignment& asg) {
  int n = asg.dim();
  check_assignment(w, asg, n);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(n, n);
  for (auto& s : w.letters) {
    const auto& m = asg.at(s.tag);
    out = s.star ? Eigen::MatrixXcd(out * m.adjoint()) : Eigen::MatrixXcd(out * m);
  }
  return out;
}

Eigen::MatrixXcd eval_matrix(const NCPoly& f, const MatrixAssignment& asg) {
  int n = asg.dim();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  for (auto& [w, c] : f.terms) out += c.to_complex() * eval_word(w, asg);
  return out;
}

Eigen::MatrixXcd eval_matrix(const TensorPoly& t, const MatrixAssignment& asg) {
  int n = asg.dim();
  Eigen::Index N = 1;
  for (int i = 0; i < t.order; ++i) N *= n;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(N, N);
  for (auto& [slots, c] : t.terms) {
    Eigen::MatrixXcd acc = eval_word(slots[0], asg);
    for (int i = 1; i < t.order; ++i) acc = kron(acc, eval_word(slots[i], asg));
    out += c.to_complex() * acc;
  }
  return out;
}

Eigen::MatrixXcd theta_contract(const std::vector<Eigen::MatrixXcd>& ms,
                                const TensorPoly& t,
                                const MatrixAssignment& asg) {
  if (static_cast<int>(ms.size()) + 1 != t.order)
    throw std::invalid_argument("theta_contract: need order == #matrices + 1");
  int n = asg.dim();
  for (auto& m : ms)
    if (m.rows() != n || m.cols() != n)
      throw std::invalid_argument("theta_contract: dimension mismatch");
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  for (auto& [slots, c] : t.terms) {
    Eigen::MatrixXcd acc = eval_word(slots[0], asg);
    for (std::size_t i = 0; i < ms.size(); ++i)
      acc = acc * ms[i] * eval_word(slots[i + 1], asg);
    out += c.to_complex() * acc;
  }
  return out;
}

// ---------------------------------------------------------------------------
// norm certificates

double tensor_norm_bound(const TensorPoly& t, const GenNorms& norms) {
  double total = 0.0;
  for (auto& [slots, c] : t.terms) {
    double term = scalar_abs_upper(c);
    for (auto& w : slots)
      for (auto& s : w.letters) {
        auto it = norms.find(s.tag);
        if (it == norms.end())
          throw std::invalid_argument("no norm for tag '" + s.tag + "'");
        term *= it->second;
      }
    total += term;
  }
  return total;
}

SeriesBound delta_series_bound(const std::set<std::string>& split,
                               const NCPoly& f, double R, const GenNorms& norms,
                               int p_max) {
  SeriesBound out;
  Derivation d = Derivation::delta(split);
  TensorPoly t = embed(f, 1, 0);
  double Rp = 1.0;
  int p = 0;
  for (; p <= p_max; ++p) {
    out.partial += Rp * tensor_norm_bound(t, norms);
    if (p == p_max) break;
    TensorPoly next = derive_leftmost(d, t);
    if (next.is_zero()) {
      t = std::move(next);
      break;
    }
    t = std::move(next);
    Rp *= R;
  }
  out.p_used = p;
  if (t.is_zero()) return out;  // series terminated exactly, no tail
  // geometric tail per term, branching factor 2k on the leftmost slot
  for (auto& [slots, c] : t.terms) {
    int k = slots[0].count_tags(split);
    if (k == 0) continue;
    double ratio = 2.0 * k * R;
    if (ratio >= 1.0) {
      out.divergent = true;
      return out;
    }
    double term = scalar_abs_upper(c);
    for (auto& w : slots)
      for (auto& s : w.letters) term *= norms.at(s.tag);
    out.tail += Rp * term * ratio / (1.0 - ratio);
  }
  return out;
}

std::optional<double> smooth_norm_bound(const std::set<std::string>& split,
                                        const NCPoly& f, const Rational& R,
                                        const GenNorms& norms, int p_max) {
  if (!(R > 0 && R < 1))
    throw std::invalid_argument("smooth_norm_bound: need 0 < R < 1");
  SeriesBound b =
      delta_series_bound(split, f, static_cast<double>(R), norms, p_max);
  if (b.divergent) return std::nullopt;
  return b.partial + b.tail;
}

RhoSeriesResult rho_series_eval(const std::set<std::string>& split,
                                const NCPoly& f, const Eigen::MatrixXcd& m,
                                const MatrixAssignment& asg, int p_max) {
  int n = asg.dim();
  if (m.rows() != n || m.cols() != n)
    throw std::invalid_argument("rho_series_eval: dimension mismatch");
  double mnorm = m.jacobiSvd().singularValues()(0);
  if (mnorm >= 1.0)
    throw std::invalid_argument("rho_series_eval: ||m|| must be < 1");

  GenNorms norms;
  for (auto& [w, c] : f.terms)
    for (auto& s : w.letters)
      if (!norms.count(s.tag))
        norms[s.tag] = asg.at(s.tag).jacobiSvd().singularValues()(0);

  Derivation d = Derivation::delta(split);
  TensorPoly t = embed(f, 1, 0);
  Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(n, n);
  std::vector<Eigen::MatrixXcd> ms;
  int p = 0;
  for (; p <= p_max; ++p) {
    sum += theta_contract(ms, t, asg);
    if (p == p_max) break;
    TensorPoly next = derive_leftmost(d, t);
    if (next.is_zero()) {
      t = std::move(next);
      break;
    }
    t = std::move(next);
    ms.push_back(m);
  }

  RhoSeriesResult out;
  out.value = std::move(sum);
  if (t.is_zero()) {
    out.tail_bound = 0.0;
    return out;
  }
  double Rp = std::pow(mnorm, p);
  for (auto& [slots, c] : t.terms) {
    int k = slots[0].count_tags(split);
    if (k == 0) continue;
    double ratio = 2.0 * k * mnorm;
    if (ratio >= 1.0) {
      out.tail_valid = false;
      out.tail_bound = std::numeric_limits<double>::infinity();
      return out;
    }
    double term = scalar_abs_upper(c);
    for (auto& w : slots)
      for (auto& s : w.letters) term *= norms.at(s.tag);
    out.tail_bound += Rp * term * ratio / (1.0 - ratio);
  }
  return out;
}

Eigen::MatrixXcd rho_direct_eval(const std::set<std::string>& split,
                                 const NCPoly& f, const Eigen::MatrixXcd& m,
                                 const MatrixAssignment& asg) {
  int n = asg.dim();
  Eigen::MatrixXcd one_minus = Eigen::MatrixXcd::Identity(n, n) - m;
  Eigen::MatrixXcd inv = one_minus.partialPivLu().inverse();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  for (auto& [w, c] : f.terms) {
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Identity(n, n);
    for (auto& s : w.letters) {
      const auto& base = asg.at(s.tag);
      Eigen::MatrixXcd val = s.star ? base.adjoint() : Eigen::MatrixXcd(base);
      if (split.count(s.tag)) val = one_minus * val * inv;
      acc = acc * val;
    }
    out += c.to_complex() * acc;
  }
  return out;
}

// ---------------------------------------------------------------------------
// degree-filtered resolvent identities

namespace {

TensorPoly filter_by_count(const TensorPoly& t, const std::string& tag, int K) {
  TensorPoly out(t.order);
  for (auto& [slots, c] : t.terms) {
    int deg = 0;
    for (auto& w : slots) deg += w.count_tag(tag);
    if (deg <= K) out.add_term(slots, c);
  }
  return out;
}

}  // namespace

TensorPoly verify_resolvent_series_d(const std::string& u_tag,
                                     const std::string& b_tag, int K) {
  if (K < 0) throw std::invalid_argument("K < 0");
  NCPoly Ub = NCPoly(uni(u_tag)) * NCPoly(gen(b_tag));
  NCPoly alpha;
  NCPoly pw = NCPoly::one();
  for (int k = 1; k <= K; ++k) {
    pw = pw * Ub;
    alpha += pw;
  }
  TensorPoly lhs = derive_d(u_tag, alpha);
  TensorPoly rhs = tensor2(alpha + NCPoly::one(), alpha);
  return filter_by_count(lhs - rhs, u_tag, K);
}

TensorPoly verify_resolvent_series_delta(const std::set<std::string>& split,
                                         const std::string& a_tag, int K) {
  if (K < 0) throw std::invalid_argument("K < 0");
  NCPoly a(sa(a_tag));
  NCPoly alpha;
  NCPoly pw = NCPoly::one();
  for (int k = 0; k <= K; ++k) {
    if (k > 0) pw = Scalar(-1) * (pw * a);
    alpha += pw;
  }
  TensorPoly mid = derive_delta(split, a);  // a(x)1 - 1(x)a
  TensorPoly prod = tensor2(alpha, NCPoly::one()) * mid *
                    tensor2(NCPoly::one(), alpha);
  TensorPoly res = derive_delta(split, alpha) + prod;
  return filter_by_count(res, a_tag, K);
}

}  // namespace freesub::ncalg
