#pragma once

#include "floquet_forge/sylvester.hpp"

#include <functional>
#include <numbers>

namespace ff {

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::string generator_tag;
};

// ---------------------------------------------------------------------------
// Initial states

/// Doublons on sites 1, 3, 5, ... (counted from 1).
inline Vec cdw_state(const SectorBasis& b) {
  const int L = b.L();
  const int nd = (L + 1) / 2;
  if (b.n_up() != nd || b.n_dn() != nd)
    throw DomainError("cdw_state: sector must hold ceil(L/2) particles per spin");
  std::uint64_t pat = 0;
  for (int j = 0; j < L; j += 2) pat |= (std::uint64_t{1} << j) | (std::uint64_t{1} << (L + j));
  const long idx = b.index(pat);
  Vec v = Vec::Zero(static_cast<long>(b.dim()));
  v(idx) = 1.0;
  return v;
}

// ---------------------------------------------------------------------------
// Krylov exponential

using MatVec = std::function<void(const Vec& in, Vec& out)>;

struct KrylovOptions {
  double tol = 1e-10;
  int max_dim = 40;
  int max_halvings = 30;
};

namespace detail {

/// One Lanczos attempt for exp(-i tau A) v; returns false when the error estimate fails.
inline bool lanczos_expm(const MatVec& A, const Vec& v, double tau, const KrylovOptions& opt,
                         Vec& out) {
  const long n = v.size();
  const double nv = v.norm();
  if (nv == 0.0) {
    out = v;
    return true;
  }
  const int mmax = static_cast<int>(std::min<long>(opt.max_dim, n));
  Mat V(n, mmax + 1);
  std::vector<double> alpha, beta;
  V.col(0) = v / nv;
  Vec w(n);
  for (int j = 0; j < mmax; ++j) {
    A(V.col(j), w);
    const double a = V.col(j).dot(w).real();
    alpha.push_back(a);
    // full reorthogonalisation, two passes
    for (int pass = 0; pass < 2; ++pass) w -= V.leftCols(j + 1) * (V.leftCols(j + 1).adjoint() * w);
    const double b = w.norm();
    const int m = j + 1;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int k = 0; k < m; ++k) T(k, k) = alpha[static_cast<std::size_t>(k)];
    for (int k = 0; k + 1 < m; ++k) T(k, k + 1) = T(k + 1, k) = beta[static_cast<std::size_t>(k)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const Eigen::MatrixXd& U = es.eigenvectors();
    Vec c(m);
    for (int k = 0; k < m; ++k) c(k) = U(0, k) * std::exp(cplx(0.0, -tau * ev(k)));
    Vec y = U.cast<cplx>() * c;
    const double err = b * std::abs(y(m - 1)) * nv;
    if (b < 1e-14 * std::max(1.0, std::abs(a)) || err < opt.tol * nv || m == n) {
      out = nv * (V.leftCols(m) * y);
      return true;
    }
    if (j + 1 == mmax) return false;
    beta.push_back(b);
    V.col(j + 1) = w / b;
  }
  return false;
}

}  // namespace detail

/// exp(-i tau A) v with adaptive substepping when the Krylov estimate does not converge.
inline Vec expm_krylov(const MatVec& A, const Vec& v, double tau, const KrylovOptions& opt = {}) {
  int pieces = 1;
  for (int h = 0; h <= opt.max_halvings; ++h, pieces *= 2) {
    Vec cur = v, nxt;
    bool ok = true;
    for (int k = 0; k < pieces && ok; ++k) {
      ok = detail::lanczos_expm(A, cur, tau / pieces, opt, nxt);
      cur = nxt;
    }
    if (ok) return cur;
  }
  throw NumericError("expm_krylov: no convergence after " + std::to_string(opt.max_halvings) +
                     " step halvings at tau=" + std::to_string(tau));
}

inline Vec expm_krylov(const SpMat& H, const Vec& v, double tau, const KrylovOptions& opt = {}) {
  MatVec mv = [&H](const Vec& in, Vec& out) { out.noalias() = H * in; };
  return expm_krylov(mv, v, tau, opt);
}

// ---------------------------------------------------------------------------
// Propagation

struct EvolveOptions {
  double dt = 1e-3;
  double sample_every = 0.1;
  KrylovOptions krylov{};
};

/// Midpoint exponential stepping of H(t) = sum_j H_j exp(i j omega t).
inline Trajectory evolve_exact(const HarmonicSeries& H, const Vec& psi0, double t_final,
                               const EvolveOptions& opt = {}) {
  const double dt = opt.dt;
  if (!(dt > 0)) throw DomainError("evolve_exact: dt must be positive");
  if (dt > 2 * std::numbers::pi / (20 * H.omega) * (1 + 1e-12))
    throw DomainError("evolve_exact: dt exceeds 2 pi / (20 omega)");
  const long dim = psi0.size();
  std::vector<std::pair<int, SpMat>> comps;
  for (int j = -H.jmax(); j <= H.jmax(); ++j) {
    SpMat hj = H.harmonic(j, dim);
    if (hj.nonZeros()) comps.emplace_back(j, std::move(hj));
  }
  const long steps_per_sample = std::max<long>(1, std::lround(opt.sample_every / dt));
  const long nsamples = std::lround(t_final / (steps_per_sample * dt));
  Trajectory tr;
  tr.generator_tag = "exact";
  tr.times.push_back(0.0);
  tr.states.push_back(psi0);
  Vec psi = psi0, tmp(dim);
  long step = 0;
  for (long s = 1; s <= nsamples; ++s) {
    for (long k = 0; k < steps_per_sample; ++k, ++step) {
      const double tm = (step + 0.5) * dt;
      std::vector<cplx> ph;
      for (const auto& c : comps) ph.push_back(std::exp(cplx(0.0, c.first * H.omega * tm)));
      MatVec mv = [&](const Vec& in, Vec& out) {
        out.setZero(in.size());
        for (std::size_t q = 0; q < comps.size(); ++q) {
          tmp.noalias() = comps[q].second * in;
          out += ph[q] * tmp;
        }
      };
      psi = expm_krylov(mv, psi, dt, opt.krylov);
    }
    tr.times.push_back(step * dt);
    tr.states.push_back(psi);
  }
  return tr;
}

inline Trajectory evolve_static(const SparseOperator& H, const Vec& psi0,
                                const std::vector<double>& times, const KrylovOptions& opt = {}) {
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw DomainError("evolve_static: times must increase");
  Trajectory tr;
  tr.generator_tag = "static";
  Vec psi = psi0;
  double t = 0.0;
  for (double tk : times) {
    if (tk != t) psi = expm_krylov(H.mat, psi, tk - t, opt);
    t = tk;
    tr.times.push_back(tk);
    tr.states.push_back(psi);
  }
  return tr;
}

inline std::vector<double> uniform_times(double t_final, double step) {
  std::vector<double> t;
  const long n = std::lround(t_final / step);
  for (long k = 0; k <= n; ++k) t.push_back(k * step);
  return t;
}

inline std::vector<double> return_rate(const Trajectory& tr, const Vec& psi0) {
  std::vector<double> out;
  out.reserve(tr.states.size());
  for (const auto& s : tr.states) out.push_back(std::norm(psi0.dot(s)));
  return out;
}

/// sqrt(<(L - L_ex)^2>) / <L_ex> with time averages by the trapezoidal rule.
inline double nrmse(const std::vector<double>& approx, const std::vector<double>& exact,
                    const std::vector<double>& times) {
  if (approx.size() != exact.size() || exact.size() != times.size() || times.size() < 2)
    throw DomainError("nrmse: inputs must share a time grid of at least two points");
  double se = 0.0, me = 0.0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double h = times[k] - times[k - 1];
    const double d0 = approx[k - 1] - exact[k - 1], d1 = approx[k] - exact[k];
    se += 0.5 * h * (d0 * d0 + d1 * d1);
    me += 0.5 * h * (exact[k - 1] + exact[k]);
  }
  const double T = times.back() - times.front();
  if (me / T == 0.0) throw DomainError("nrmse: exact signal has zero mean");
  return std::sqrt(se / T) / (me / T);
}

// ---------------------------------------------------------------------------
// Absorbance of the two-band chain

struct DipoleExcitation {
  double energy;  // E_n - E_G
  double weight;  // |<n|dipole|G>|^2
};

/// Eigen-decomposition of the single-pair block reached by the dipole from the full lower band.
inline std::vector<DipoleExcitation> dipole_excitations(const TwoBandChainParams& p) {
  p.validate();
  auto b = build_sector_basis(2 * p.L, p.L, p.L);
  auto ops = build_two_band_chain(p, b);
  const std::uint64_t lower_mask = (std::uint64_t{1} << p.L) - 1;
  const std::uint64_t upper_mask = lower_mask << p.L;
  const std::uint64_t upper_both = upper_mask | (upper_mask << (2 * p.L));
  std::vector<long> idx;
  for (std::size_t k = 0; k < b->dim(); ++k)
    if (std::popcount(b->state(k) & upper_both) == 1) idx.push_back(static_cast<long>(k));
  const long g = b->index(lower_band_full_pattern(p.L));
  const Mat H = Mat(ops.H0.mat);
  const double EG = H(g, g).real();
  const long m = static_cast<long>(idx.size());
  Mat Hp(m, m);
  Vec d(m);
  const Vec dG = ops.dipole.mat * Vec::Unit(static_cast<long>(b->dim()), g);
  for (long a = 0; a < m; ++a) {
    d(a) = dG(idx[a]);
    for (long c = 0; c < m; ++c) Hp(a, c) = H(idx[a], idx[c]);
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(Hp);
  std::vector<DipoleExcitation> out;
  for (long n = 0; n < m; ++n) {
    const double w = std::norm(es.eigenvectors().col(n).dot(d));
    out.push_back({es.eigenvalues()(n) - EG, w});
  }
  return out;
}

/// alpha(omega) = -(1/pi) Im sum_n w_n / (omega - (E_n - E_G) + i gamma)
inline std::vector<double> absorbance_from(const std::vector<DipoleExcitation>& ex,
                                           const std::vector<double>& omega_grid, double gamma) {
  if (!(gamma > 0)) throw DomainError("absorbance_ed: broadening must be positive");
  std::vector<double> a;
  for (double w : omega_grid) {
    cplx s = 0.0;
    for (const auto& e : ex) s += e.weight / cplx(w - e.energy, gamma);
    a.push_back(-s.imag() / std::numbers::pi);
  }
  return a;
}

inline std::vector<double> absorbance_ed(const TwoBandChainParams& p,
                                         const std::vector<double>& omega_grid, double gamma) {
  if (!(gamma > 0)) throw DomainError("absorbance_ed: broadening must be positive");
  return absorbance_from(dipole_excitations(p), omega_grid, gamma);
}

/// Lowest excitation carrying dipole weight above the relative threshold.
inline double lowest_bright_excitation(const std::vector<DipoleExcitation>& ex,
                                       double rel_threshold = 1e-10) {
  double wmax = 0.0;
  for (const auto& e : ex) wmax = std::max(wmax, e.weight);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : ex)
    if (e.weight > rel_threshold * wmax) best = std::min(best, e.energy);
  return best;
}

/// Location of the lowest local maximum of a sampled spectrum.
inline double lowest_peak(const std::vector<double>& omega, const std::vector<double>& alpha) {
  for (std::size_t k = 1; k + 1 < alpha.size(); ++k)
    if (alpha[k] >= alpha[k - 1] && alpha[k] > alpha[k + 1]) return omega[k];
  throw DomainError("lowest_peak: no interior maximum");
}

}  // namespace ff
