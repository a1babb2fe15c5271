#pragma once

#include "floquet_forge/fock.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <map>
#include <utility>

namespace ff {

struct ResonantDenominator : std::runtime_error {
  std::vector<std::pair<long, long>> pairs;
  ResonantDenominator(const std::string& what, std::vector<std::pair<long, long>> p = {})
      : std::runtime_error(what), pairs(std::move(p)) {}
};

struct UnsupportedOrder : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline double default_tol(double omega) { return 1e-8 * std::abs(omega); }

inline double frobenius(const SpMat& a) { return a.norm(); }
inline double frobenius(const Mat& a) { return a.norm(); }

inline SpMat to_sparse(const Mat& m, double rel_drop = 1e-15) {
  const double cut = rel_drop * std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  SpMat s = m.sparseView(1.0, cut);
  s.makeCompressed();
  return s;
}

// ---------------------------------------------------------------------------
// Harmonic containers

using OrderHarmonic = std::pair<int, int>;  // (order n, harmonic j)

struct HarmonicSeries {
  std::map<OrderHarmonic, SparseOperator> terms;
  double omega = 1.0;

  bool has(int n, int j) const { return terms.count({n, j}) != 0; }
  const SparseOperator* get(int n, int j) const {
    auto it = terms.find({n, j});
    return it == terms.end() ? nullptr : &it->second;
  }

  /// Sum over all orders of the component at harmonic j.
  SpMat harmonic(int j, long dim) const {
    SpMat out(dim, dim);
    for (const auto& [key, op] : terms)
      if (key.second == j) out += op.mat;
    return out;
  }

  int jmax() const {
    int m = 0;
    for (const auto& [key, op] : terms) m = std::max(m, std::abs(key.second));
    return m;
  }

  /// H(t) = sum_j H_j exp(i j omega t)
  SpMat at(double t, long dim) const {
    SpMat out(dim, dim);
    for (const auto& [key, op] : terms) {
      const cplx ph = std::exp(cplx(0.0, key.second * omega * t));
      out += ph * op.mat;
    }
    return out;
  }

  double hermiticity_defect() const {
    double worst = 0.0;
    for (const auto& [key, op] : terms) {
      const auto* partner = get(key.first, -key.second);
      if (!partner) return std::numeric_limits<double>::infinity();
      worst = std::max(worst, max_abs(SpMat(op.mat - SpMat(partner->mat.adjoint()))));
    }
    return worst;
  }
};

struct MicroMotion {
  std::map<OrderHarmonic, SparseOperator> terms;
  double omega = 1.0;

  const SparseOperator& at(int n, int j) const {
    auto it = terms.find({n, j});
    if (it == terms.end()) throw std::out_of_range("MicroMotion: missing entry");
    return it->second;
  }
  bool has(int n, int j) const { return terms.count({n, j}) != 0; }

  /// Insert f_j and its partner f_{-j} = -(f_j)^dagger.
  void set_pair(int n, int j, SparseOperator f) {
    if (j == 0) throw DomainError("MicroMotion: no static component");
    SparseOperator partner{f.basis, SpMat(-SpMat(f.mat.adjoint())), false};
    terms[{n, -j}] = std::move(partner);
    terms[{n, j}] = std::move(f);
  }

  double antihermiticity_defect() const {
    double worst = 0.0;
    for (const auto& [key, op] : terms) {
      auto it = terms.find({key.first, -key.second});
      if (it == terms.end()) return std::numeric_limits<double>::infinity();
      worst = std::max(worst, max_abs(SpMat(op.mat + SpMat(it->second.mat.adjoint()))));
    }
    return worst;
  }
};

// ---------------------------------------------------------------------------
// Dense eigenbasis route

class DenseSylvester {
 public:
  explicit DenseSylvester(const SpMat& H0) : DenseSylvester(Mat(H0)) {}
  explicit DenseSylvester(const Mat& H0) {
    Eigen::SelfAdjointEigenSolver<Mat> es(H0);
    if (es.info() != Eigen::Success) throw std::runtime_error("DenseSylvester: eigensolver failed");
    eval_ = es.eigenvalues();
    evec_ = es.eigenvectors();
  }

  const Eigen::VectorXd& energies() const { return eval_; }
  const Mat& vectors() const { return evec_; }

  /// Solves source + [f, H0] - shift f = 0.
  Mat solve(const Mat& source, double shift, double tol) const {
    Mat s = evec_.adjoint() * source * evec_;
    const double scale = std::max(s.cwiseAbs().maxCoeff(), 1e-300);
    std::vector<std::pair<long, long>> bad;
    const long n = s.rows();
    for (long b = 0; b < n; ++b)
      for (long a = 0; a < n; ++a) {
        const double den = shift - (eval_(b) - eval_(a));
        if (std::abs(den) < tol) {
          if (std::abs(s(a, b)) > 1e-12 * scale) bad.emplace_back(a, b);
          s(a, b) = 0.0;
        } else {
          s(a, b) /= den;
        }
      }
    if (!bad.empty()) {
      std::ostringstream os;
      os << "resonant denominator at shift " << shift << " for " << bad.size()
         << " level pair(s), first (" << bad.front().first << ',' << bad.front().second << ')';
      throw ResonantDenominator(os.str(), std::move(bad));
    }
    return evec_ * s * evec_.adjoint();
  }

 private:
  Eigen::VectorXd eval_;
  Mat evec_;
};

inline SparseOperator solve_dense(const SparseOperator& H0, const SparseOperator& source,
                                  double shift, double tol = -1.0) {
  if (tol < 0) tol = default_tol(shift);
  DenseSylvester ds(H0.mat);
  return {H0.basis, to_sparse(ds.solve(Mat(source.mat), shift, tol)), false};
}

inline double sylvester_residual(const SpMat& f, const SpMat& H0, const SpMat& source,
                                 double shift) {
  SpMat r = source + SpMat(f * H0) - SpMat(H0 * f) - shift * f;
  return r.norm();
}

inline double sylvester_residual(const SparseOperator& f, const SparseOperator& H0,
                                 const SparseOperator& source, double shift) {
  return sylvester_residual(f.mat, H0.mat, source.mat, shift);
}

// ---------------------------------------------------------------------------
// Green-function rule for quadratic diagonal H0 = sum_i eps_i n_i

inline cplx green_rule_solve(const std::vector<double>& mode_energies,
                             const std::vector<int>& created, const std::vector<int>& annihilated,
                             double shift, double tol = -1.0) {
  if (tol < 0) tol = default_tol(shift);
  double den = shift;
  for (int i : created) den += mode_energies.at(static_cast<std::size_t>(i));
  for (int j : annihilated) den -= mode_energies.at(static_cast<std::size_t>(j));
  if (std::abs(den) < tol) throw ResonantDenominator("green_rule_solve: vanishing denominator");
  return 1.0 / den;
}

// ---------------------------------------------------------------------------
// Hopping-order expansion: H0 = h + U with U diagonal in the occupation basis.

/// Solves source + [x, U] - shift x = 0 entrywise for diagonal U.
inline SpMat solve_diagonal(const SpMat& source, const Eigen::VectorXd& Udiag, double shift,
                            double tol) {
  SpMat x = source;
  for (int k = 0; k < x.outerSize(); ++k)
    for (SpMat::InnerIterator it(x, k); it; ++it) {
      const double den = shift - Udiag(it.col()) + Udiag(it.row());
      if (std::abs(den) < tol)
        throw ResonantDenominator("hop-order expansion: resonant denominator",
                                  {{static_cast<long>(it.row()), static_cast<long>(it.col())}});
      it.valueRef() /= den;
    }
  return x;
}

inline Eigen::VectorXd diagonal_of(const SpMat& U) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(U.rows());
  for (int k = 0; k < U.outerSize(); ++k)
    for (SpMat::InnerIterator it(U, k); it; ++it) {
      if (it.row() != it.col() && std::abs(it.value()) > 0)
        throw DomainError("hop-order expansion: U must be diagonal");
      if (it.row() == it.col()) d(it.row()) = it.value().real();
    }
  return d;
}

/// Returns y_0..y_max with y_n ~ J^n solving source + [f, h + U] - shift f = 0 order by order.
inline std::vector<SpMat> hop_order_solve(const SpMat& h, const SpMat& U, const SpMat& source,
                                          double shift, int max_order, double tol = -1.0) {
  if (tol < 0) tol = default_tol(shift);
  const auto d = diagonal_of(U);
  std::vector<SpMat> y;
  SpMat s = source;
  for (int n = 0; n <= max_order; ++n) {
    y.push_back(solve_diagonal(s, d, shift, tol));
    s = commutator(y.back(), h);
  }
  return y;
}

/// Hop-order expansion of f^(2)_2: sources (1/2)[y_n, H1] + [z_{n-1}, h] at shift 2 omega.
inline std::vector<SpMat> hop_order_solve_z(const SpMat& h, const SpMat& U, const SpMat& H1,
                                            const std::vector<SpMat>& y, double omega,
                                            double tol = -1.0) {
  if (tol < 0) tol = default_tol(omega);
  const auto d = diagonal_of(U);
  std::vector<SpMat> z;
  for (std::size_t n = 0; n < y.size(); ++n) {
    SpMat s = 0.5 * commutator(y[n], H1);
    if (n > 0) s += commutator(z.back(), h);
    z.push_back(solve_diagonal(s, d, 2.0 * omega, tol));
  }
  return z;
}

// ---------------------------------------------------------------------------
// Analytic micro-motion of the driven Hubbard chain

/// Polynomial c0 + ca a + cb b + cab ab in two commuting projectors (a^2 = a, b^2 = b).
struct Poly4 {
  double c0 = 0, ca = 0, cb = 0, cab = 0;
  friend Poly4 operator*(const Poly4& p, const Poly4& q) {
    return {p.c0 * q.c0, p.c0 * q.ca + p.ca * q.c0 + p.ca * q.ca,
            p.c0 * q.cb + p.cb * q.c0 + p.cb * q.cb,
            p.c0 * q.cab + p.cab * q.c0 + p.ca * q.cb + p.cb * q.ca + p.ca * q.cab +
                p.cab * q.ca + p.cb * q.cab + p.cab * q.cb + p.cab * q.cab};
  }
  friend Poly4 operator*(double s, Poly4 p) { return {s * p.c0, s * p.ca, s * p.cb, s * p.cab}; }
  friend Poly4 operator+(Poly4 p, const Poly4& q) {
    return {p.c0 + q.c0, p.ca + q.ca, p.cb + q.cb, p.cab + q.cab};
  }
};

struct HopExpansionCoeffs {
  double beta = 0, gamma = 0, delta = 0;     // primed
  double beta_pp = 0, gamma_pp = 0, delta_pp = 0;  // omega -> 2 omega
  double beta2 = 0, gamma2 = 0, delta2 = 0;
  double c3 = 0, beta3 = 0, gamma3 = 0, delta3 = 0;
  double beta4 = 0, gamma4 = 0, delta4 = 0;

  Poly4 p1() const { return {1, beta, gamma, delta}; }
  Poly4 p2() const { return {1, beta2, gamma2, delta2}; }
  Poly4 p3() const { return {c3, beta3, gamma3, delta3}; }
};

inline HopExpansionCoeffs hop_coeffs(double U, double omega) {
  HopExpansionCoeffs c;
  c.beta = -U / (omega + U);
  c.gamma = U / (omega - U);
  c.delta = -c.beta - c.gamma;
  c.beta_pp = -U / (2 * omega + U);
  c.gamma_pp = U / (2 * omega - U);
  c.delta_pp = -c.beta_pp - c.gamma_pp;
  const Poly4 p1{1, c.beta, c.gamma, c.delta};
  const Poly4 pp{1, c.beta_pp, c.gamma_pp, c.delta_pp};
  const Poly4 p2 = p1 * pp;
  c.beta2 = p2.ca;
  c.gamma2 = p2.cb;
  c.delta2 = p2.cab;
  const Poly4 psym{1, 0.5 * (c.beta + c.gamma), 0.5 * (c.beta + c.gamma), c.delta};
  const Poly4 p3 = p1 * ((1.0 / 8.0) * p2 + (1.0 / 12.0) * p1 + (-2.0 / 3.0) * psym);
  c.c3 = p3.c0;
  c.beta3 = p3.ca;
  c.gamma3 = p3.cb;
  c.delta3 = p3.cab;
  c.beta4 = c.beta3 + c.beta2 / 24 + c.beta / 6;
  c.gamma4 = c.gamma3 + c.gamma2 / 24 + c.gamma / 6;
  c.delta4 = c.delta3 + c.delta2 / 24 + c.delta / 6;
  return c;
}

/// Throws when omega sits on a multi-photon doublon resonance U = m omega, m = 1..max_multiple.
inline void check_doublon_resonance(double U, double omega, int max_multiple, double tol = -1.0) {
  if (tol < 0) tol = default_tol(omega);
  for (int m = 1; m <= max_multiple; ++m)
    if (std::abs(m * omega - U) < tol)
      throw ResonantDenominator("drive is resonant with doublon energy: U = " +
                                std::to_string(m) + " omega");
}

namespace detail {

inline TermList N(int i, int s) { return TermList::single(1.0, {num(i, s)}); }
inline TermList one() { return TermList::scalar(1.0); }
inline TermList ops(std::vector<Op> o) { return TermList::single(1.0, std::move(o)); }
inline TermList hop(int a, int b, int s) { return ops({cdag(a, s), ann(b, s)}); }

/// c_dag(j,s) c(i,s) (c0 + ca n(j,sb) + cb n(i,sb) + cab n(j,sb) n(i,sb))
inline TermList correlated_hop(int j, int i, int s, const Poly4& p) {
  const int sb = flip(s);
  TermList t;
  t.add(p.c0, {cdag(j, s), ann(i, s)});
  t.add(p.ca, {cdag(j, s), ann(i, s), num(j, sb)});
  t.add(p.cb, {cdag(j, s), ann(i, s), num(i, sb)});
  t.add(p.cab, {cdag(j, s), ann(i, s), num(j, sb), num(i, sb)});
  return t;
}

/// sum_s sum_bonds [ c_dag(j) c(j+1) P(j, j+1) + sign * c_dag(j+1) c(j) P(j+1, j) ]
inline TermList bond_family(int L, const Poly4& p, double sign) {
  TermList t;
  for (int s = 0; s < 2; ++s)
    for (int j = 0; j + 1 < L; ++j) {
      t += correlated_hop(j, j + 1, s, p);
      t += cplx(sign) * correlated_hop(j + 1, j, s, p);
    }
  return t;
}

}  // namespace detail

inline TermList hubbard_y0_terms(const HubbardParams& p) {
  return cplx(1.0 / p.omega) * drive_terms(p.L, p.g);
}

inline TermList hubbard_y1_terms(const HubbardParams& p) {
  const auto c = hop_coeffs(p.U, p.omega);
  return cplx(p.J * p.g / (p.omega * p.omega)) * detail::bond_family(p.L, c.p1(), -1.0);
}

inline TermList hubbard_y2_terms(const HubbardParams& p) {
  using namespace detail;
  const auto c = hop_coeffs(p.U, p.omega);
  const double b = c.beta, g = c.gamma, d = c.delta, w = p.omega, U = p.U;
  const int L = p.L;
  TermList two;
  for (int j = 0; j + 1 < L; ++j) {
    const int k = j + 1;
    TermList nj = N(j, up) + N(j, dn), nk = N(k, up) + N(k, dn);
    two += cplx(b - g) * (ops({cdag(j, up), cdag(j, dn), ann(k, up), ann(k, dn)}) +
                          cplx(-1.0) * ops({cdag(k, up), cdag(k, dn), ann(j, up), ann(j, dn)}));
    two += cplx(-1.0) * nj + nk;
    two += cplx(b + g) * (N(k, up) * N(k, dn) * (one() + cplx(-1.0) * nj) +
                          cplx(-1.0) * N(j, up) * N(j, dn) * (one() + cplx(-1.0) * nk));
  }
  TermList three;
  for (int m = 1; m + 1 < L; ++m) {
    const int l = m - 1, r = m + 1;
    for (int s = 0; s < 2; ++s) {
      const int sb = flip(s);
      auto dens = [&](double cm, double cl, double cr) {
        return cplx(cm) * N(m, sb) + cplx(cl) * N(l, sb) + cplx(cr) * N(r, sb) +
               cplx(-d) * N(m, sb) * (N(l, sb) + cplx(-1.0) * N(r, sb));
      };
      auto dress = [&](const TermList& a, const TermList& bb) {
        return one() + cplx(b) * a + cplx(g) * bb + cplx(d) * a * bb;
      };
      three += hop(l, r, s) * dens(b - g, -b, g) * dress(N(l, sb), N(r, sb));
      three += hop(r, l, s) * dens(g - b, -g, b) * dress(N(r, sb), N(l, sb));

      const TermList nls = N(l, s), nrb = N(r, sb);
      const TermList diff = nls + cplx(-1.0) * nrb;
      three += ops({cdag(m, s), cdag(l, sb), ann(m, sb), ann(r, s)}) *
               (cplx(b - g) * one() + cplx(-d) * diff) * dress(nls, nrb);
      three += ops({cdag(r, s), cdag(m, sb), ann(l, sb), ann(m, s)}) *
               (cplx(g - b) * one() + cplx(-d) * diff) * dress(nrb, nls);
      three += ops({cdag(m, s), cdag(m, sb), ann(l, sb), ann(r, s)}) * (cplx(d) * diff) *
               (cplx(w / (w + U)) * one() + cplx(-b) * (nls + nrb) + cplx(-d) * nls * nrb);
      three += ops({cdag(r, s), cdag(l, sb), ann(m, sb), ann(m, s)}) * (cplx(d) * diff) *
               (cplx(w / (w - U)) * one() + cplx(-g) * (nls + nrb) + cplx(-d) * nls * nrb);
    }
  }
  const double pre = p.J * p.J * p.g / (w * w * w);
  return cplx(2.0 * pre) * two + cplx(pre) * three;
}

inline TermList hubbard_z1_terms(const HubbardParams& p) {
  const auto c = hop_coeffs(p.U, p.omega);
  const double w = p.omega;
  return cplx(p.J * p.g * p.g / (4 * w * w * w)) * detail::bond_family(p.L, c.p2(), 1.0);
}

inline TermList hubbard_f31_terms(const HubbardParams& p) {
  const auto c = hop_coeffs(p.U, p.omega);
  const double w = p.omega;
  return cplx(p.J * p.g * p.g * p.g / (w * w * w * w)) * detail::bond_family(p.L, c.p3(), -1.0);
}

/// Term lists keyed by (order, harmonic) for positive harmonics.
inline std::map<OrderHarmonic, TermList> hubbard_micromotion_terms(const HubbardParams& p,
                                                                   int max_hop_order,
                                                                   int fswt_order) {
  p.validate();
  if (max_hop_order < 0 || max_hop_order > 2)
    throw UnsupportedOrder("hubbard_micromotion: max_hop_order must be 0..2");
  if (fswt_order < 1 || fswt_order > 3)
    throw UnsupportedOrder("hubbard_micromotion: fswt_order must be 1..3");
  check_doublon_resonance(p.U, p.omega, fswt_order);
  std::map<OrderHarmonic, TermList> out;
  TermList f1 = hubbard_y0_terms(p);
  if (max_hop_order >= 1) f1 += hubbard_y1_terms(p);
  if (max_hop_order >= 2) f1 += hubbard_y2_terms(p);
  out[{1, 1}] = f1;
  if (fswt_order >= 2) {
    out[{2, 1}] = TermList{};
    out[{2, 2}] = hubbard_z1_terms(p);
  }
  if (fswt_order >= 3) {
    out[{3, 1}] = hubbard_f31_terms(p);
    out[{3, 2}] = TermList{};
  }
  return out;
}

inline MicroMotion hubbard_micromotion(const HubbardParams& p, std::shared_ptr<const SectorBasis> b,
                                       int max_hop_order, int fswt_order) {
  MicroMotion mm;
  mm.omega = p.omega;
  for (const auto& [key, tl] : hubbard_micromotion_terms(p, max_hop_order, fswt_order))
    mm.set_pair(key.first, key.second, materialize(tl, b));
  return mm;
}

inline HarmonicSeries hubbard_series(const HubbardParams& p, std::shared_ptr<const SectorBasis> b) {
  auto ops = build_hubbard_operators(p, b);
  HarmonicSeries hs;
  hs.omega = p.omega;
  hs.terms[{0, 0}] = ops.H0();
  hs.terms[{1, 1}] = ops.drive;
  hs.terms[{1, -1}] = ops.drive;
  return hs;
}

/// Order-2 micro-motion at harmonic j from a complete order-1 micro-motion.
inline SparseOperator solve_order2(const SparseOperator& H0, const HarmonicSeries& H,
                                   const MicroMotion& f1, int j, double tol = -1.0) {
  if (j == 0) throw DomainError("solve_order2: harmonic must be nonzero");
  const long n = static_cast<long>(H0.dim());
  SpMat src(n, n);
  if (const auto* h2 = H.get(2, j)) src += h2->mat;
  SpMat h10(n, n);
  if (const auto* h = H.get(1, 0)) h10 = h->mat;
  for (const auto& [key, f] : f1.terms) {
    if (key.first != 1) continue;
    const int jp = key.second;
    if (const auto* h = H.get(1, j - jp)) src += 0.5 * commutator(f.mat, h->mat);
  }
  if (f1.has(1, j)) src += 0.5 * commutator(f1.at(1, j).mat, h10);
  const double shift = j * H.omega;
  if (tol < 0) tol = default_tol(H.omega);
  if (src.nonZeros() == 0 || max_abs(src) == 0.0) return {H0.basis, SpMat(n, n), false};
  DenseSylvester ds(H0.mat);
  return {H0.basis, to_sparse(ds.solve(Mat(src), shift, tol)), false};
}

}  // namespace ff
