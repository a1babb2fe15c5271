#pragma once

#include "floquet_forge/sylvester.hpp"

#include <cstdio>
#include <set>

namespace ff {

// ---------------------------------------------------------------------------
// Term-list presentation

/// Moves densities that commute with the whole operator string to the end,
/// drops repeated densities (n^2 = n) and sorts them. Fermionic content is untouched.
inline TermList tidy_densities(const TermList& tl) {
  TermList out;
  for (const auto& t : tl.terms()) {
    std::set<std::pair<int, int>> ladder;
    for (const auto& o : t.ops)
      if (o.kind != Op::N) ladder.insert({o.site, o.spin});
    std::vector<Op> head;
    std::set<std::pair<int, int>> tail;
    for (const auto& o : t.ops) {
      if (o.kind == Op::N && !ladder.count({o.site, o.spin})) tail.insert({o.site, o.spin});
      else head.push_back(o);
    }
    for (const auto& [site, spin] : tail) head.push_back(num(site, spin));
    out.add(t.coeff, std::move(head));
  }
  return out.canonical();
}

inline std::string format_terms(const TermList& tl) {
  std::string out;
  char buf[64];
  const TermList tidy = tidy_densities(tl);
  for (const auto& t : tidy.terms()) {
    const double re = t.coeff.real() == 0.0 ? 0.0 : t.coeff.real();
    const double im = t.coeff.imag() == 0.0 ? 0.0 : t.coeff.imag();
    std::snprintf(buf, sizeof buf, "%.15e %.15e ", re, im);
    out += buf;
    out += op_string(t.ops);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Driven Hubbard chain: analytic Floquet Hamiltonians

/// sum_s sum_j (c_dag(j) c(j+1) + h.c.) ((n(j,sb) + n(j+1,sb))/2 - n(j,sb) n(j+1,sb))
inline TermList correlated_hopping_terms(int L) {
  TermList t;
  const Poly4 p{0.0, 0.5, 0.5, -1.0};
  for (int s = 0; s < 2; ++s)
    for (int j = 0; j + 1 < L; ++j) {
      t += detail::correlated_hop(j, j + 1, s, p);
      t += detail::correlated_hop(j + 1, j, s, p);
    }
  return t;
}

inline double correlated_hopping_coeff(double J, double U, double g, double omega) {
  return -J * (g * g * U / (omega * omega)) * (1.0 / (U - omega) + 1.0 / (omega + U));
}

inline TermList floquet_h2_J2_terms(const HubbardParams& p) {
  using namespace detail;
  const auto c = hop_coeffs(p.U, p.omega);
  const double bg = c.beta - c.gamma, d = c.delta;
  const double pre = p.J * p.J * p.g * p.g / (p.omega * p.omega * p.omega);
  const int L = p.L;
  TermList t;
  for (int j = 0; j + 1 < L; ++j) {
    const int k = j + 1;
    t += cplx(4 * pre * bg) * (ops({cdag(j, up), cdag(j, dn), ann(k, up), ann(k, dn)}) +
                               ops({cdag(k, up), cdag(k, dn), ann(j, up), ann(j, dn)}));
  }
  for (int m = 1; m + 1 < L; ++m) {
    const int l = m - 1, r = m + 1;
    for (int s = 0; s < 2; ++s) {
      const int sb = flip(s);
      TermList hops = hop(l, r, s) + hop(r, l, s);
      TermList dens = cplx(2.0) * N(m, sb) + cplx(-1.0) * N(l, sb) + cplx(-1.0) * N(r, sb) +
                      cplx(d) * (one() + cplx(-2.0) * N(m, sb)) *
                          (N(l, sb) + N(r, sb) + cplx(-2.0) * N(l, sb) * N(r, sb));
      t += cplx(pre * bg) * hops * dens;
      TermList pair = ops({cdag(m, s), cdag(l, sb), ann(m, sb), ann(r, s)}) +
                      ops({cdag(r, s), cdag(m, sb), ann(l, sb), ann(m, s)});
      TermList w = one() + cplx(-d) * N(l, s) + cplx(-d) * N(r, sb) +
                   cplx(2.0 * d) * N(l, s) * N(r, sb);
      t += cplx(2.0 * pre * bg) * pair * w;
    }
  }
  return t;
}

/// H^(0) + H'^(2) of the driven chain as a term list.
inline TermList floquet_h2_terms(const HubbardParams& p, bool include_J2) {
  p.validate();
  check_doublon_resonance(p.U, p.omega, 1);
  const double w = p.omega;
  TermList t = hopping_terms(p.L, p.J * (1.0 - p.g * p.g / (w * w)));
  t += interaction_terms(p.L, p.U);
  if (p.mu != 0.0) t += cplx(-p.mu) * number_terms(p.L);
  t += cplx(correlated_hopping_coeff(p.J, p.U, p.g, w)) * correlated_hopping_terms(p.L);
  if (include_J2) t += floquet_h2_J2_terms(p);
  return t;
}

inline SparseOperator floquet_h2(const HubbardParams& p, std::shared_ptr<const SectorBasis> b,
                                 bool include_J2) {
  return materialize(floquet_h2_terms(p, include_J2), b, true);
}

/// H^(0) + (1/2)([f, H_{-1}] + h.c.) with f from the dense eigenbasis solver.
inline SparseOperator floquet_h2_dense(const HubbardParams& p, std::shared_ptr<const SectorBasis> b,
                                       double tol = -1.0) {
  auto ops = build_hubbard_operators(p, b);
  auto H0 = ops.H0();
  auto f = solve_dense(H0, ops.drive, p.omega, tol);
  SpMat c = commutator(f.mat, ops.drive.mat);
  SpMat h = H0.mat + 0.5 * (c + SpMat(c.adjoint()));
  return {b, h, true};
}

/// H'^(2) alone from an arbitrary micro-motion f_1 (order 1) and H_{-1}.
inline SpMat h2_from_micromotion(const SpMat& f1, const SpMat& Hm1) {
  SpMat c = commutator(f1, Hm1);
  return 0.5 * (c + SpMat(c.adjoint()));
}

inline TermList floquet_h4_terms(const HubbardParams& p) {
  p.validate();
  check_doublon_resonance(p.U, p.omega, 2);
  const auto c = hop_coeffs(p.U, p.omega);
  const double w2 = p.omega * p.omega;
  const double pre = p.g * p.g * p.g * p.g * p.J / (w2 * w2);
  const Poly4 poly{-0.25, 0.5 * (c.beta4 + c.gamma4), 0.5 * (c.beta4 + c.gamma4), c.delta4};
  TermList t;
  for (int s = 0; s < 2; ++s)
    for (int j = 0; j + 1 < p.L; ++j) {
      t += detail::correlated_hop(j, j + 1, s, poly);
      t += detail::correlated_hop(j + 1, j, s, poly);
    }
  return cplx(pre) * t;
}

inline SparseOperator floquet_h4(const HubbardParams& p, std::shared_ptr<const SectorBasis> b) {
  return materialize(floquet_h4_terms(p), b, true);
}

/// Order-g^4 Floquet correction assembled from dense micro-motions f1, f2_2, f3_1.
inline SparseOperator floquet_h4_dense(const HubbardParams& p,
                                       std::shared_ptr<const SectorBasis> b, double tol = -1.0) {
  auto ops = build_hubbard_operators(p, b);
  const Mat H0 = Mat(ops.H0().mat);
  const Mat D = Mat(ops.drive.mat);
  if (tol < 0) tol = default_tol(p.omega);
  DenseSylvester ds(H0);
  const Mat f1 = ds.solve(D, p.omega, tol);
  const Mat fm1 = -f1.adjoint();
  Mat c = commutator(f1, D);
  const Mat H2 = 0.5 * (c + c.adjoint());
  const Mat f22 = ds.solve(0.5 * commutator(f1, D), 2 * p.omega, tol);
  const Mat s31 = 0.5 * commutator(f22, D) + (1.0 / 12) * commutator(fm1, commutator(f1, D)) +
                  (2.0 / 3) * commutator(f1, H2);
  const Mat f31 = ds.solve(s31, p.omega, tol);
  Mat h4 = 0.5 * commutator(f31, D) + (1.0 / 12) * commutator(f22, commutator(fm1, D)) +
           (1.0 / 12) * commutator(fm1, commutator(f22, D)) -
           (1.0 / 12) * commutator(f1, commutator(fm1, H2));
  h4 = h4 + Mat(h4.adjoint());
  return {b, to_sparse(h4), true};
}

// ---------------------------------------------------------------------------
// High-frequency expansion comparator

/// order 1: terms through omega^-2; order 2 adds the leading omega^-4 correlated hopping.
inline TermList hfe_terms(const HubbardParams& p, int order) {
  p.validate();
  if (order < 1 || order > 2) throw UnsupportedOrder("hfe_h: order must be 1 or 2");
  const double w = p.omega;
  TermList t = hopping_terms(p.L, p.J * (1.0 - p.g * p.g / (w * w)));
  t += interaction_terms(p.L, p.U);
  if (p.mu != 0.0) t += cplx(-p.mu) * number_terms(p.L);
  if (order == 2)
    t += cplx(2.0 * p.J * p.g * p.g * p.U * p.U / (w * w * w * w)) *
         correlated_hopping_terms(p.L);
  return t;
}

inline SparseOperator hfe_h(const HubbardParams& p, std::shared_ptr<const SectorBasis> b,
                            int order) {
  return materialize(hfe_terms(p, order), b, true);
}

/// Van Vleck high-frequency result for a single-frequency series, built from matrices.
inline SpMat hfe_from_series(const HarmonicSeries& H, long dim) {
  const double w = H.omega;
  SpMat H0p = H.harmonic(0, dim);
  SpMat H1 = H.harmonic(1, dim), Hm1 = H.harmonic(-1, dim);
  SpMat out = H0p + (1.0 / w) * commutator(H1, Hm1);
  out += (1.0 / (2 * w * w)) * commutator(commutator(H1, H0p), Hm1);
  out += (1.0 / (2 * w * w)) * commutator(commutator(Hm1, H0p), H1);
  return out;
}

// ---------------------------------------------------------------------------
// Large-U spin exchange

inline double spin_exchange(double U, double J, double g, double omega) {
  if (std::abs(U - omega) < default_tol(omega))
    throw ResonantDenominator("spin_exchange: omega = U");
  const double r = g * g / (omega * omega);
  return (4 * J * J / U) * (1 - 2 * r) + 4 * r * J * J * (1 / (U - omega) + 1 / (omega + U));
}

// ---------------------------------------------------------------------------
// Bessel functions of the first kind, integer order

/// J_0..J_nmax at x by downward recurrence normalised with J_0 + 2 sum J_2k = 1.
inline std::vector<double> bessel_table(int nmax, double x) {
  if (nmax < 0) throw DomainError("bessel_table: nmax must be >= 0");
  std::vector<double> out(static_cast<std::size_t>(nmax) + 1, 0.0);
  if (x == 0.0) {
    out[0] = 1.0;
    return out;
  }
  const double ax = std::abs(x);
  const int top = std::max(nmax, static_cast<int>(ax)) + 40 +
                  static_cast<int>(std::sqrt(40.0 * std::max(nmax, static_cast<int>(ax) + 1)));
  const int start = top + (top % 2);
  std::vector<double> j(static_cast<std::size_t>(start) + 2, 0.0);
  j[static_cast<std::size_t>(start) + 1] = 0.0;
  j[static_cast<std::size_t>(start)] = 1e-300;
  for (int k = start; k >= 1; --k) {
    j[static_cast<std::size_t>(k) - 1] = (2.0 * k / ax) * j[k] - j[static_cast<std::size_t>(k) + 1];
    if (std::abs(j[static_cast<std::size_t>(k) - 1]) > 1e250)
      for (int m = k - 1; m <= start + 1; ++m) j[static_cast<std::size_t>(m)] *= 1e-250;
  }
  double norm = j[0];
  for (int k = 2; k <= start; k += 2) norm += 2.0 * j[static_cast<std::size_t>(k)];
  for (int n = 0; n <= nmax; ++n) {
    double v = j[static_cast<std::size_t>(n)] / norm;
    if (x < 0 && (n % 2)) v = -v;
    out[static_cast<std::size_t>(n)] = v;
  }
  return out;
}

inline double bessel_j(int n, double x) {
  const int an = std::abs(n);
  double v = bessel_table(an, x)[static_cast<std::size_t>(an)];
  return (n < 0 && (an % 2)) ? -v : v;
}

/// sum over |n| > jmax of J_n(A)^2, summed over the tail directly
inline double bessel_truncation_error(double A, int jmax) {
  if (jmax < 0) throw DomainError("bessel_truncation_error: jmax must be >= 0");
  const int top = jmax + 40 + static_cast<int>(2.0 * std::abs(A));
  const auto t = bessel_table(top, A);
  double s = 0.0;
  for (int n = top; n > jmax; --n) s += 2.0 * t[static_cast<std::size_t>(n)] * t[static_cast<std::size_t>(n)];
  return s;
}

// ---------------------------------------------------------------------------
// Strong-driving rotating frame

struct StrongDriveParams {
  int L = 2;
  double J = 1.0;
  double U = 0.0;
  double g = 0.0;
  double omega = 1.0;
  std::vector<double> eps;             // on-site energies, default zero
  std::vector<cplx> phi;               // drive profile, default phi_j = j
  std::vector<std::vector<double>> r;  // r[j][i] hop amplitudes, default nearest neighbour

  void fill_defaults() {
    if (eps.empty()) eps.assign(static_cast<std::size_t>(L), 0.0);
    if (phi.empty())
      for (int j = 0; j < L; ++j) phi.emplace_back(j + 1.0, 0.0);
    if (r.empty()) {
      r.assign(static_cast<std::size_t>(L), std::vector<double>(static_cast<std::size_t>(L), 0.0));
      for (int j = 0; j + 1 < L; ++j) r[j][j + 1] = r[j + 1][j] = 1.0;
    }
  }
};

/// alpha^[n]_{j,i} = exp(i n B) J_n(A) r_{j,i}
inline cplx strong_drive_alpha(const StrongDriveParams& p, int n, int j, int i) {
  const cplx d = p.phi[static_cast<std::size_t>(j)] - p.phi[static_cast<std::size_t>(i)];
  const double A = 2.0 * p.g / p.omega * std::abs(d);
  const double B = std::abs(d) > 0 ? std::arg(d) : 0.0;
  return std::exp(cplx(0.0, n * B)) * bessel_j(n, A) * p.r[j][i];
}

inline TermList strong_drive_h0_terms(const StrongDriveParams& p) {
  TermList t;
  for (int j = 0; j < p.L; ++j) {
    for (int s = 0; s < 2; ++s) t.add(p.eps[static_cast<std::size_t>(j)], {num(j, s)});
    t.add(p.U, {num(j, up), num(j, dn)});
  }
  return t;
}

inline TermList strong_drive_harmonic_terms(const StrongDriveParams& p, int n) {
  TermList t;
  for (int j = 0; j < p.L; ++j)
    for (int i = 0; i < p.L; ++i) {
      if (i == j || p.r[j][i] == 0.0) continue;
      const cplx a = strong_drive_alpha(p, n, j, i);
      for (int s = 0; s < 2; ++s) t.add(-p.J * a, {cdag(j, s), ann(i, s)});
    }
  return t;
}

inline HarmonicSeries strong_drive_harmonics(StrongDriveParams p, int jmax,
                                             std::shared_ptr<const SectorBasis> b) {
  if (jmax < 1) throw DomainError("strong_drive_harmonics: jmax must be >= 1");
  if (p.L < 2 || !(p.omega > 0)) throw DomainError("strong_drive_harmonics: invalid parameters");
  p.fill_defaults();
  if (b->L() != p.L) throw DomainError("strong_drive_harmonics: basis does not match L");
  HarmonicSeries hs;
  hs.omega = p.omega;
  hs.terms[{0, 0}] = materialize(strong_drive_h0_terms(p), b, true);
  for (int n = -jmax; n <= jmax; ++n)
    hs.terms[{1, n}] = materialize(strong_drive_harmonic_terms(p, n), b, n == 0);
  return hs;
}

/// H^(0) + H^(1)_0 + (1/2) sum_{j>=1} ([f_j, H_{-j}] + h.c.) with dense micro-motions.
inline SparseOperator floquet_from_series_dense(const HarmonicSeries& H,
                                                std::shared_ptr<const SectorBasis> b,
                                                double tol = -1.0) {
  const SpMat H0 = H.get(0, 0)->mat;
  SpMat out = H0;
  if (const auto* h = H.get(1, 0)) out += h->mat;
  if (tol < 0) tol = default_tol(H.omega);
  DenseSylvester ds(H0);
  for (int j = 1; j <= H.jmax(); ++j) {
    const auto* hj = H.get(1, j);
    const auto* hmj = H.get(1, -j);
    if (!hj || !hmj) continue;
    Mat f = ds.solve(Mat(hj->mat), j * H.omega, tol);
    Mat c = commutator(f, Mat(hmj->mat));
    out += to_sparse(0.5 * (c + c.adjoint()));
  }
  return {b, out, true};
}

}  // namespace ff
