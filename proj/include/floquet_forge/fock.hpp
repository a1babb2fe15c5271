#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <bit>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ff {

using cplx = std::complex<double>;
using SpMat = Eigen::SparseMatrix<cplx>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum Spin : int { up = 0, dn = 1 };
inline int flip(int s) { return 1 - s; }

/// Fixed (n_up, n_down) sector of a spinful lattice with `L` spatial orbitals.
/// Bit `s*L + i` of a state word is the occupation of orbital i with spin s.
class SectorBasis {
 public:
  SectorBasis(int L, int n_up, int n_dn) : L_(L), n_up_(n_up), n_dn_(n_dn) {
    if (L < 1 || L > 16) throw DomainError("SectorBasis: L must be in 1..16");
    if (n_up < 0 || n_dn < 0 || n_up > L || n_dn > L)
      throw DomainError("SectorBasis: particle numbers exceed orbital count");
    auto ups = patterns(L, n_up);
    auto dns = patterns(L, n_dn);
    states_.reserve(ups.size() * dns.size());
    for (auto d : dns)
      for (auto u : ups) states_.push_back(u | (d << L));
  }

  int L() const { return L_; }
  int n_up() const { return n_up_; }
  int n_dn() const { return n_dn_; }
  std::size_t dim() const { return states_.size(); }
  const std::vector<std::uint64_t>& states() const { return states_; }
  std::uint64_t state(std::size_t i) const { return states_[i]; }

  int bit(int site, int spin) const { return spin * L_ + site; }

  /// Ordinal of a pattern, or -1 when the pattern is outside the sector.
  long index(std::uint64_t pattern) const {
    auto it = std::lower_bound(states_.begin(), states_.end(), pattern);
    if (it == states_.end() || *it != pattern) return -1;
    return static_cast<long>(it - states_.begin());
  }

  bool operator==(const SectorBasis& o) const {
    return L_ == o.L_ && n_up_ == o.n_up_ && n_dn_ == o.n_dn_;
  }

 private:
  static std::vector<std::uint64_t> patterns(int L, int n) {
    std::vector<std::uint64_t> out;
    for (std::uint64_t p = 0; p < (std::uint64_t{1} << L); ++p)
      if (std::popcount(p) == n) out.push_back(p);
    return out;
  }

  int L_, n_up_, n_dn_;
  std::vector<std::uint64_t> states_;
};

inline std::shared_ptr<const SectorBasis> build_sector_basis(int L, int n_up, int n_dn) {
  return std::make_shared<const SectorBasis>(L, n_up, n_dn);
}

// ---------------------------------------------------------------------------
// Second-quantised term lists

struct Op {
  enum Kind : std::uint8_t { Cdag, C, N };
  Kind kind;
  int site;  // 0-based
  int spin;
};

inline Op cdag(int i, int s) { return {Op::Cdag, i, s}; }
inline Op ann(int i, int s) { return {Op::C, i, s}; }
inline Op num(int i, int s) { return {Op::N, i, s}; }

struct Term {
  cplx coeff;
  std::vector<Op> ops;  // applied right to left
};

inline std::string op_string(const std::vector<Op>& ops) {
  std::ostringstream os;
  for (std::size_t k = 0; k < ops.size(); ++k) {
    if (k) os << ' ';
    const auto& o = ops[k];
    os << (o.kind == Op::Cdag ? "Cdag(" : o.kind == Op::C ? "C(" : "N(")
       << o.site + 1 << ',' << (o.spin == up ? "up" : "dn") << ')';
  }
  return ops.empty() ? std::string("1") : os.str();
}

class TermList {
 public:
  TermList() = default;
  TermList(std::initializer_list<Term> t) : terms_(t) {}

  static TermList scalar(cplx c) { return TermList{Term{c, {}}}; }
  static TermList single(cplx c, std::vector<Op> ops) { return TermList{Term{c, std::move(ops)}}; }

  const std::vector<Term>& terms() const& { return terms_; }
  std::vector<Term> terms() && { return std::move(terms_); }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  void add(cplx c, std::vector<Op> ops) {
    if (c != cplx(0.0)) terms_.push_back({c, std::move(ops)});
  }
  TermList& operator+=(const TermList& o) {
    for (const auto& t : o.terms_) add(t.coeff, t.ops);
    return *this;
  }
  friend TermList operator+(TermList a, const TermList& b) { return a += b; }
  friend TermList operator*(cplx c, TermList a) {
    for (auto& t : a.terms_) t.coeff *= c;
    return a;
  }
  /// Operator product: every term of a followed (on the right) by every term of b.
  friend TermList operator*(const TermList& a, const TermList& b) {
    TermList out;
    for (const auto& x : a.terms_)
      for (const auto& y : b.terms_) {
        std::vector<Op> ops = x.ops;
        ops.insert(ops.end(), y.ops.begin(), y.ops.end());
        out.add(x.coeff * y.coeff, std::move(ops));
      }
    return out;
  }

  /// Hermitian conjugate: reverse order, swap Cdag and C, conjugate coefficients.
  TermList adjoint() const {
    TermList out;
    for (const auto& t : terms_) {
      std::vector<Op> ops(t.ops.rbegin(), t.ops.rend());
      for (auto& o : ops)
        if (o.kind == Op::Cdag) o.kind = Op::C;
        else if (o.kind == Op::C) o.kind = Op::Cdag;
      out.add(std::conj(t.coeff), std::move(ops));
    }
    return out;
  }

  /// Merge identical operator strings and drop vanishing coefficients; sorted by string.
  TermList canonical(double drop = 1e-14) const {
    std::map<std::string, std::pair<cplx, std::vector<Op>>> acc;
    for (const auto& t : terms_) {
      auto key = op_string(t.ops);
      auto it = acc.find(key);
      if (it == acc.end()) acc.emplace(key, std::make_pair(t.coeff, t.ops));
      else it->second.first += t.coeff;
    }
    TermList out;
    for (auto& [k, v] : acc)
      if (std::abs(v.first) > drop) out.terms_.push_back({v.first, v.second});
    return out;
  }

 private:
  std::vector<Term> terms_;
};

/// Apply a term's operator string to a basis pattern. Returns the fermionic sign
/// and resulting pattern, or nothing if the term annihilates the state.
inline std::optional<std::pair<int, std::uint64_t>> apply_ops(const std::vector<Op>& ops,
                                                              std::uint64_t state, int L) {
  int sign = 1;
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
    const int b = it->spin * L + it->site;
    const std::uint64_t mask = std::uint64_t{1} << b;
    const bool occ = state & mask;
    switch (it->kind) {
      case Op::N:
        if (!occ) return std::nullopt;
        break;
      case Op::C:
        if (!occ) return std::nullopt;
        if (std::popcount(state & (mask - 1)) & 1) sign = -sign;
        state ^= mask;
        break;
      case Op::Cdag:
        if (occ) return std::nullopt;
        if (std::popcount(state & (mask - 1)) & 1) sign = -sign;
        state ^= mask;
        break;
    }
  }
  return std::make_pair(sign, state);
}

// ---------------------------------------------------------------------------
// Sparse operators over a sector

struct SparseOperator {
  std::shared_ptr<const SectorBasis> basis;
  SpMat mat;
  bool hermitian = false;

  std::size_t dim() const { return static_cast<std::size_t>(mat.rows()); }
  Mat dense() const { return Mat(mat); }
};

inline SpMat materialize_matrix(const TermList& tl, const SectorBasis& b) {
  using Trip = Eigen::Triplet<cplx>;
  std::vector<Trip> trips;
  const auto n = static_cast<long>(b.dim());
  for (long col = 0; col < n; ++col) {
    const auto s = b.state(static_cast<std::size_t>(col));
    for (const auto& t : tl.terms()) {
      auto r = apply_ops(t.ops, s, b.L());
      if (!r) continue;
      const long row = b.index(r->second);
      if (row < 0)
        throw DomainError("term list leaves the particle-number sector: " + op_string(t.ops));
      trips.emplace_back(row, col, t.coeff * double(r->first));
    }
  }
  SpMat m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  m.prune(cplx(0.0), 1e-15);
  m.makeCompressed();
  return m;
}

inline SparseOperator materialize(const TermList& tl, std::shared_ptr<const SectorBasis> b,
                                  bool hermitian = false) {
  SparseOperator op{b, materialize_matrix(tl, *b), hermitian};
  return op;
}

inline SpMat commutator(const SpMat& a, const SpMat& b) {
  SpMat c = SpMat(a * b) - SpMat(b * a);
  c.prune(cplx(0.0), 1e-15);
  return c;
}

inline Mat commutator(const Mat& a, const Mat& b) { return a * b - b * a; }

inline double max_abs(const SpMat& a) {
  double m = 0.0;
  for (int k = 0; k < a.outerSize(); ++k)
    for (SpMat::InnerIterator it(a, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

inline double hermiticity_defect(const SpMat& a) {
  SpMat d = a - SpMat(a.adjoint());
  return max_abs(d);
}

// ---------------------------------------------------------------------------
// Driven one-band Hubbard chain

struct HubbardParams {
  int L = 2;
  double J = 1.0;
  double U = 0.0;
  double mu = 0.0;
  double g = 0.0;
  double omega = 1.0;

  void validate() const {
    if (L < 2) throw DomainError("HubbardParams: L must be >= 2");
    if (!(omega > 0.0)) throw DomainError("HubbardParams: omega must be positive");
  }
};

inline TermList hopping_terms(int L, double J) {
  TermList t;
  for (int s = 0; s < 2; ++s)
    for (int j = 0; j + 1 < L; ++j) {
      t.add(-J, {cdag(j + 1, s), ann(j, s)});
      t.add(-J, {cdag(j, s), ann(j + 1, s)});
    }
  return t;
}

inline TermList interaction_terms(int L, double U) {
  TermList t;
  for (int j = 0; j < L; ++j) t.add(U, {num(j, up), num(j, dn)});
  return t;
}

inline TermList number_terms(int L) {
  TermList t;
  for (int s = 0; s < 2; ++s)
    for (int j = 0; j < L; ++j) t.add(1.0, {num(j, s)});
  return t;
}

inline TermList sz_terms(int L) {
  TermList t;
  for (int j = 0; j < L; ++j) {
    t.add(0.5, {num(j, up)});
    t.add(-0.5, {num(j, dn)});
  }
  return t;
}

/// g * sum_j j n_j with sites counted from 1.
inline TermList drive_terms(int L, double g) {
  TermList t;
  for (int s = 0; s < 2; ++s)
    for (int j = 0; j < L; ++j) t.add(g * (j + 1), {num(j, s)});
  return t;
}

struct HubbardOperators {
  SparseOperator h, U_op, N_op, drive;
  SparseOperator H0() const {
    return {h.basis, SpMat(h.mat + U_op.mat), true};
  }
};

inline HubbardOperators build_hubbard_operators(const HubbardParams& p,
                                                std::shared_ptr<const SectorBasis> b) {
  p.validate();
  if (b->L() != p.L) throw DomainError("build_hubbard_operators: basis does not match L");
  HubbardOperators ops;
  ops.h = materialize(hopping_terms(p.L, p.J), b, true);
  ops.U_op = materialize(interaction_terms(p.L, p.U), b, true);
  ops.N_op = materialize(number_terms(p.L), b, true);
  ops.drive = materialize(drive_terms(p.L, p.g), b, true);
  if (p.mu != 0.0) ops.U_op.mat -= p.mu * ops.N_op.mat;
  return ops;
}

inline TermList hubbard_h0_terms(const HubbardParams& p) {
  TermList t = hopping_terms(p.L, p.J) + interaction_terms(p.L, p.U);
  if (p.mu != 0.0) t += cplx(-p.mu) * number_terms(p.L);
  return t;
}

// ---------------------------------------------------------------------------
// Two-band ring (band b, site R) -> orbital b*L + R

struct TwoBandChainParams {
  int L = 3;
  double eps1 = 0.0;
  double eps21 = 3.7;
  double t1 = 0.05;
  double t2 = -0.15;
  double U11 = 1.6;
  double U12 = 0.8;
  double g = 0.0;
  double omega = 0.0;

  void validate() const {
    if (L < 2) throw DomainError("TwoBandChainParams: L must be >= 2");
    if (!(eps21 > 0.0)) throw DomainError("TwoBandChainParams: eps21 must be positive");
  }
};

inline int band_orbital(int L, int band, int R) { return band * L + R; }

struct TwoBandOperators {
  SparseOperator H0, dipole;
};

inline TermList two_band_h0_terms(const TwoBandChainParams& p) {
  TermList t;
  const int L = p.L;
  const double eps[2] = {p.eps1, p.eps1 + p.eps21};
  const double hop[2] = {p.t1, p.t2};
  for (int b = 0; b < 2; ++b)
    for (int s = 0; s < 2; ++s)
      for (int R = 0; R < L; ++R) {
        const int o = band_orbital(L, b, R);
        const int o2 = band_orbital(L, b, (R + 1) % L);
        t.add(eps[b], {num(o, s)});
        t.add(hop[b], {cdag(o2, s), ann(o, s)});
        t.add(hop[b], {cdag(o, s), ann(o2, s)});
      }
  for (int R = 0; R < L; ++R) {
    const int l = band_orbital(L, 0, R), u = band_orbital(L, 1, R);
    t.add(p.U11, {num(l, up), num(l, dn)});
    for (int s = 0; s < 2; ++s)
      for (int s2 = 0; s2 < 2; ++s2) t.add(p.U12, {num(l, s), num(u, s2)});
  }
  return t;
}

inline TermList two_band_dipole_terms(int L) {
  TermList t;
  for (int R = 0; R < L; ++R)
    for (int s = 0; s < 2; ++s) {
      t.add(1.0, {cdag(band_orbital(L, 1, R), s), ann(band_orbital(L, 0, R), s)});
      t.add(1.0, {cdag(band_orbital(L, 0, R), s), ann(band_orbital(L, 1, R), s)});
    }
  return t;
}

inline std::uint64_t lower_band_full_pattern(int L) {
  const std::uint64_t lower = (std::uint64_t{1} << L) - 1;
  return lower | (lower << (2 * L));
}

inline TwoBandOperators build_two_band_chain(const TwoBandChainParams& p,
                                             std::shared_ptr<const SectorBasis> b) {
  p.validate();
  if (b->L() != 2 * p.L) throw DomainError("build_two_band_chain: basis must have 2L orbitals");
  if (b->n_up() != p.L || b->n_dn() != p.L)
    throw DomainError("build_two_band_chain: sector does not admit a full lower band");
  return {materialize(two_band_h0_terms(p), b, true),
          materialize(two_band_dipole_terms(p.L), b, true)};
}

}  // namespace ff
