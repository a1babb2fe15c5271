#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "floquet_forge/kspace.hpp"

namespace ff {

using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

/// Interband interaction V_q over the grid and the coupling J^12_{k,s}.
struct InteractionProfile {
  std::vector<double> Vq;
  std::vector<cplx> J[2];

  const std::vector<cplx>& coupling(int s) const { return J[s]; }

  void validate(const BandGrid& grid) const {
    const auto N = static_cast<std::size_t>(grid.size());
    if (Vq.size() != N || J[0].size() != N || J[1].size() != N)
      throw DomainError("InteractionProfile: size does not match the grid");
    for (int q = 0; q < grid.size(); ++q)
      if (std::abs(Vq[q] - Vq[grid.neg(q)]) > 1e-12 * (1.0 + std::abs(Vq[q])))
        throw DomainError("InteractionProfile: V_q must equal V_-q");
    for (int s = 0; s < 2; ++s)
      for (const cplx& j : J[s])
        if (std::abs(j) > 1.0 + 1e-12) throw DomainError("InteractionProfile: |J| must not exceed 1");
  }
};

namespace detail {

inline double centred_k(double k) {
  k = std::fmod(k, 2.0 * std::numbers::pi);
  if (k < 0) k += 2.0 * std::numbers::pi;
  return k > std::numbers::pi ? k - 2.0 * std::numbers::pi : k;
}

/// Minimum-image displacement k - K.
inline std::pair<double, double> displacement(const BandGrid& grid, int k, int K) {
  const int d = grid.sub(k, K);
  return {centred_k(grid.kx(d)), grid.Ny() > 1 ? centred_k(grid.ky(d)) : 0.0};
}

}  // namespace detail

inline InteractionProfile uniform_profile(const BandGrid& grid, double U) {
  InteractionProfile p;
  p.Vq.assign(grid.size(), U);
  p.J[0].assign(grid.size(), cplx(1.0));
  p.J[1] = p.J[0];
  return p;
}

/// V_q = V0 / (1 + |q|^2 / kappa^2) with J = 1.
inline InteractionProfile screened_profile(const BandGrid& grid, double V0, double kappa) {
  InteractionProfile p = uniform_profile(grid, 0.0);
  for (int q = 0; q < grid.size(); ++q) {
    const auto [a, b] = detail::displacement(grid, q, 0);
    p.Vq[q] = V0 / (1.0 + (a * a + b * b) / (kappa * kappa));
  }
  return p;
}

/// |J_k| = 1 - exp(-|k-K|^2 / (2 w^2)), vanishing exactly at the valley K.
inline void apply_valley_dip(InteractionProfile& p, const BandGrid& grid, int K, double width) {
  for (int k = 0; k < grid.size(); ++k) {
    const auto [a, b] = detail::displacement(grid, k, K);
    const double m = k == K ? 0.0 : 1.0 - std::exp(-(a * a + b * b) / (2.0 * width * width));
    for (int s = 0; s < 2; ++s) p.J[s][k] *= m;
  }
}

/// J_k -> |J_k| exp(i arg((k-K')_x + i (k-K')_y)).
inline void apply_phase_winding(InteractionProfile& p, const BandGrid& grid, int Kp) {
  for (int k = 0; k < grid.size(); ++k) {
    const auto [a, b] = detail::displacement(grid, k, Kp);
    const double phi = k == Kp ? 0.0 : std::atan2(b, a);
    for (int s = 0; s < 2; ++s) p.J[s][k] = std::abs(p.J[s][k]) * std::polar(1.0, phi);
  }
}

struct GammaMatrix {
  int k = 0, q = 0;
  double omega = 0.0;
  RMat entries;
};

/// Sum over q' != 0 of V_q'/N.
inline double exchange_sum(const BandGrid& grid, const InteractionProfile& prof) {
  std::vector<double> w;
  w.reserve(grid.size());
  for (int q = 1; q < grid.size(); ++q) w.push_back(prof.Vq[q]);
  return pairwise_sum(w) / grid.size();
}

/// Diagonal pair energies omega + eps_{k,1} - eps_{k+q,1} + eps_{q+p',1} - eps_{p',2}.
inline RVec pair_propagator_inverse(const BandGrid& grid, int k, int q, double omega) {
  const int N = grid.size();
  RVec d(N);
  const int kq = grid.add(k, q);
  for (int p = 0; p < N; ++p) d(p) = omega + grid.eps1(k) - grid.eps1(kq) + grid.eps1(grid.add(q, p)) - grid.eps2(p);
  return d;
}

/// RPA kernel eta with Gamma = G^-1 - eta.
inline RMat rpa_kernel(const BandGrid& grid, const InteractionProfile& prof) {
  const int N = grid.size();
  const double x = exchange_sum(grid, prof);
  RMat eta(N, N);
  for (int p = 0; p < N; ++p)
    for (int pp = 0; pp < N; ++pp) eta(p, pp) = p == pp ? x : -prof.Vq[grid.sub(p, pp)] / N;
  return eta;
}

inline GammaMatrix gamma_matrix(const BandGrid& grid, const InteractionProfile& prof, int k, int q,
                                double omega) {
  prof.validate(grid);
  GammaMatrix gm{k, q, omega, -rpa_kernel(grid, prof)};
  gm.entries.diagonal() += pair_propagator_inverse(grid, k, q, omega);
  return gm;
}

inline GammaMatrix gamma_mf(const BandGrid& grid, const InteractionProfile& prof, double omega) {
  return gamma_matrix(grid, prof, 0, 0, omega);
}

/// Gamma^-1, raising BandResonance when Gamma is numerically singular.
inline RMat gamma_inverse(const GammaMatrix& gm, double rcond_min = 1e-13) {
  Eigen::PartialPivLU<RMat> lu(gm.entries);
  if (!(lu.rcond() > rcond_min))
    throw BandResonance("Gamma matrix singular: drive resonant with a pair state");
  return lu.inverse();
}

struct SeriesComparison {
  RMat series_sum, inverse;
  double max_dev = 0.0;
  double spectral_radius = 0.0;
  bool convergent = false;
};

/// sum_{n < n_terms} (G eta)^n G against (G^-1 - eta)^-1.
inline SeriesComparison series_vs_inverse(const BandGrid& grid, const InteractionProfile& prof, int k, int q,
                                          double omega, int n_terms) {
  const RVec ginv = pair_propagator_inverse(grid, k, q, omega);
  const RMat eta = rpa_kernel(grid, prof);
  const RVec G = ginv.cwiseInverse();
  const RMat Geta = G.asDiagonal() * eta;
  SeriesComparison out;
  out.spectral_radius = Geta.eigenvalues().cwiseAbs().maxCoeff();
  out.convergent = out.spectral_radius < 1.0;
  RMat term = RMat(G.asDiagonal());
  out.series_sum = term;
  for (int n = 1; n < n_terms; ++n) {
    term = Geta * term;
    out.series_sum += term;
  }
  out.inverse = gamma_inverse(gamma_matrix(grid, prof, k, q, omega));
  out.max_dev = (out.series_sum - out.inverse).cwiseAbs().maxCoeff();
  return out;
}

/// V^{ss'}_{k,k1,q}
inline cplx scattering_strength(const BandGrid& grid, const InteractionProfile& prof, double g, double omega,
                                int k, int k1, int q, int s, int /*sp*/, const RMat* gamma_inv = nullptr) {
  RMat local;
  if (!gamma_inv) {
    local = gamma_inverse(gamma_matrix(grid, prof, k, q, omega));
    gamma_inv = &local;
  }
  const auto& J = prof.coupling(s);
  const int N = grid.size();
  const cplx ref = J[k] / (omega + grid.eps1(k) - grid.eps2(k));
  cplx sum = 0.0;
  for (int kp = 0; kp < N; ++kp) {
    const cplx diff = J[kp] / (omega + grid.eps1(kp) - grid.eps2(kp)) - ref;
    sum += diff * (prof.Vq[grid.sub(kp, k)] / N) * (*gamma_inv)(kp, k1);
  }
  return g * g * sum;
}

/// (1/2)(V_{k,k1,q} J*_{k1} + J_k V*_{k1,k,q})
inline cplx interaction_weight(const BandGrid& grid, const InteractionProfile& prof, double g, double omega,
                               int k, int k1, int q, int s, int sp) {
  const auto& J = prof.coupling(s);
  const cplx a = scattering_strength(grid, prof, g, omega, k, k1, q, s, sp);
  const cplx b = scattering_strength(grid, prof, g, omega, k1, k, q, s, sp);
  return 0.5 * (a * std::conj(J[k1]) + J[k] * std::conj(b));
}

struct EigenResonances {
  RVec E;        // ascending
  RMat vectors;  // columns phi_j
  double completeness_defect = 0.0;
};

/// Gamma(omega) = sum_j (omega - E_j) phi_j phi_j^T.
inline EigenResonances eigen_sign_analysis(const GammaMatrix& gm) {
  const long N = gm.entries.rows();
  if ((gm.entries - gm.entries.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + gm.entries.cwiseAbs().maxCoeff()))
    throw DomainError("eigen_sign_analysis: Gamma must be symmetric");
  const RMat M = gm.omega * RMat::Identity(N, N) - gm.entries;
  Eigen::SelfAdjointEigenSolver<RMat> es(M);
  EigenResonances r{es.eigenvalues(), es.eigenvectors(), 0.0};
  r.completeness_defect = (r.vectors * r.vectors.transpose() - RMat::Identity(N, N)).cwiseAbs().maxCoeff();
  return r;
}

/// Relative error of the single-pole fit c/(omega - E_j) for [Gamma^-1]_{a,b} on a window around E_j.
inline double pole_fit_error(const BandGrid& grid, const InteractionProfile& prof, int k, int q,
                             const EigenResonances& res, int j, int a, int b, int samples = 8) {
  const long n = res.E.size();
  double gap = std::numeric_limits<double>::infinity();
  for (long i = 0; i < n; ++i)
    if (i != j) gap = std::min(gap, std::abs(res.E(i) - res.E(j)));
  const double half = 1e-3 * gap;
  std::vector<double> x, y;
  for (int m = 0; m < samples; ++m) {
    const double d = half * (m + 1) / samples * (m % 2 ? 1.0 : -1.0);
    const RMat inv = gamma_inverse(gamma_matrix(grid, prof, k, q, res.E(j) + d), 0.0);
    x.push_back(d);
    y.push_back(inv(a, b));
  }
  double num = 0.0, den = 0.0;
  for (std::size_t m = 0; m < x.size(); ++m) {
    num += y[m] / x[m];
    den += 1.0 / (x[m] * x[m]);
  }
  const double c = num / den;
  double err = 0.0, scale = 0.0;
  for (std::size_t m = 0; m < x.size(); ++m) {
    err = std::max(err, std::abs(y[m] - c / x[m]));
    scale = std::max(scale, std::abs(y[m]));
  }
  return err / scale;
}

/// 1/Delta_kf = sum_k J_{k,s} [Gamma_MF^-1]_{k,kf}
inline std::vector<cplx> mf_screened_denominator(const BandGrid& grid, const InteractionProfile& prof,
                                                 double omega, int s = up) {
  const RMat inv = gamma_inverse(gamma_mf(grid, prof, omega));
  const auto& J = prof.coupling(s);
  const int N = grid.size();
  std::vector<cplx> out(N);
  for (int kf = 0; kf < N; ++kf) {
    cplx acc = 0.0;
    for (int k = 0; k < N; ++k) acc += J[k] * inv(k, kf);
    out[kf] = 1.0 / acc;
  }
  return out;
}

/// U^{ss'}_{kf,kf'}
inline double cavity_global_interaction(const BandGrid& grid, const InteractionProfile& prof,
                                        const CavitySpec& cav, double omega, int kf, int kfp, int s, int sp) {
  if (cav.delta_c == 0.0) throw DomainError("cavity_global_interaction: delta_c must be nonzero");
  const RMat inv = gamma_inverse(gamma_mf(grid, prof, omega));
  const auto& Js = prof.coupling(s);
  const cplx Jref = std::conj(prof.coupling(sp)[kfp]);
  const int N = grid.size();
  double a = 0.0, b = 0.0;
  for (int k = 0; k < N; ++k) a += inv(k, kf) * (Js[k] * Jref).real();
  for (int kp = 0; kp < N; ++kp) b += inv(kp, kfp);
  return -(cav.g * cav.g * cav.gc0 * cav.gc0) / (N * cav.delta_c) * a * b;
}

/// Sigma_K = sum_k Re[V_{k,k,K-k} J*_k]
inline double coulomb_mix_selfenergy(const BandGrid& grid, const InteractionProfile& prof, double g,
                                     double omega, int K, int s = up) {
  const auto& J = prof.coupling(s);
  double sum = 0.0;
  for (int k = 0; k < grid.size(); ++k) {
    if (J[k] == cplx(0.0)) continue;
    const int q = grid.sub(K, k);
    const RMat inv = gamma_inverse(gamma_matrix(grid, prof, k, q, omega));
    sum += (scattering_strength(grid, prof, g, omega, k, k, q, s, s, &inv) * std::conj(J[k])).real();
  }
  return sum;
}

/// Lower-band uncorrelated Stark shift g^2 |J^12_k|^2 / (omega + eps_{k,12}).
inline double uncorrelated_stark_shift(const BandGrid& grid, const InteractionProfile& prof, double g,
                                       double omega, int k, int s = up) {
  return g * g * std::norm(prof.coupling(s)[k]) / (omega + grid.eps1(k) - grid.eps2(k));
}

}  // namespace ff
