#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "floquet_forge/fock.hpp"

namespace ff {

struct BandResonance : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoExciton : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Pairwise summation with a fixed split order.
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

inline double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

struct BandParams {
  double eps1 = 0.0;
  double eps21 = 3.7;
  double t1 = 0.05;
  double t2 = -0.15;
  double U11 = 1.6;
  double U12 = 0.8;
};

enum class Occupation { full, fermi_hole };

/// Lower-band occupation model: completely filled, or emptied inside |k| < kF around Gamma.
struct OccupationSpec {
  Occupation kind = Occupation::full;
  double kF = 0.0;
};

/// Periodic k-grid with cosine bands. Ny = 1 gives a one-dimensional chain.
class BandGrid {
 public:
  BandGrid(int Nx, int Ny, const BandParams& bp, const OccupationSpec& occ = {})
      : Nx_(Nx), Ny_(Ny), bp_(bp), occ_(occ) {
    if (Nx < 1 || Ny < 1) throw DomainError("BandGrid: grid sizes must be positive");
    const int N = Nx * Ny;
    eps1_.resize(N);
    eps2_.resize(N);
    for (int i = 0; i < N; ++i) {
      eps1_[i] = band_energy(0, kx(i), ky(i));
      eps2_[i] = band_energy(1, kx(i), ky(i));
    }
    set_occupation(occ);
    check_bands();
  }

  static BandGrid square(int N, const BandParams& bp, const OccupationSpec& occ = {}) {
    return BandGrid(N, N, bp, occ);
  }
  static BandGrid chain(int N, const BandParams& bp, const OccupationSpec& occ = {}) {
    return BandGrid(N, 1, bp, occ);
  }

  /// Replace the band energies by tabulated values; off-grid evaluation is then unavailable.
  void set_tables(std::vector<double> eps1, std::vector<double> eps2) {
    if (eps1.size() != static_cast<std::size_t>(size()) || eps2.size() != eps1.size())
      throw DomainError("BandGrid: table size does not match the grid");
    eps1_ = std::move(eps1);
    eps2_ = std::move(eps2);
    tabulated_ = true;
    check_bands();
  }

  /// Occupations n(k, s) for both spins, each in [0, 1].
  void set_occupation_tables(std::vector<double> n_up, std::vector<double> n_dn) {
    if (n_up.size() != static_cast<std::size_t>(size()) || n_dn.size() != n_up.size())
      throw DomainError("BandGrid: occupation table size does not match the grid");
    for (auto* v : {&n_up, &n_dn})
      for (double x : *v)
        if (x < 0.0 || x > 1.0) throw DomainError("BandGrid: occupations must lie in [0,1]");
    n_[0] = std::move(n_up);
    n_[1] = std::move(n_dn);
    update_fillings();
  }

  void set_occupation(const OccupationSpec& occ) {
    occ_ = occ;
    const int N = size();
    std::vector<double> n(N, 1.0);
    if (occ.kind == Occupation::fermi_hole) {
      if (!(occ.kF > 0.0)) throw DomainError("BandGrid: kF must be positive for hole doping");
      for (int i = 0; i < N; ++i) {
        const double a = centred(kx(i)), b = Ny_ > 1 ? centred(ky(i)) : 0.0;
        if (a * a + b * b < occ.kF * occ.kF) n[i] = 0.0;
      }
    }
    n_[0] = n;
    n_[1] = n;
    update_fillings();
  }

  int Nx() const { return Nx_; }
  int Ny() const { return Ny_; }
  int size() const { return Nx_ * Ny_; }
  int dims() const { return Ny_ > 1 ? 2 : 1; }
  bool tabulated() const { return tabulated_; }
  const BandParams& params() const { return bp_; }
  const OccupationSpec& occupation() const { return occ_; }

  int index(int ix, int iy) const {
    ix = ((ix % Nx_) + Nx_) % Nx_;
    iy = ((iy % Ny_) + Ny_) % Ny_;
    return iy * Nx_ + ix;
  }
  int ix(int i) const { return i % Nx_; }
  int iy(int i) const { return i / Nx_; }
  double kx(int i) const { return 2.0 * std::numbers::pi * ix(i) / Nx_; }
  double ky(int i) const { return 2.0 * std::numbers::pi * iy(i) / Ny_; }
  /// Index of k + q with wrap-around.
  int add(int k, int q) const { return index(ix(k) + ix(q), iy(k) + iy(q)); }
  int sub(int k, int q) const { return index(ix(k) - ix(q), iy(k) - iy(q)); }
  int neg(int k) const { return index(-ix(k), -iy(k)); }

  double eps1(int i) const { return eps1_[i]; }
  double eps2(int i) const { return eps2_[i]; }
  double n_occ(int i, int s) const { return n_[s][i]; }
  const std::vector<double>& n_occ(int s) const { return n_[s]; }
  double nu(int s) const { return nu_[s]; }
  double U11() const { return bp_.U11; }
  double U12() const { return bp_.U12; }

  void set_interactions(double U11, double U12) {
    bp_.U11 = U11;
    bp_.U12 = U12;
  }

  double band_energy(int band, double kx, double ky) const {
    const double e = band == 0 ? bp_.eps1 : bp_.eps1 + bp_.eps21;
    const double t = band == 0 ? bp_.t1 : bp_.t2;
    const double c = Ny_ > 1 ? std::cos(kx) + std::cos(ky) : std::cos(kx);
    return e + 2.0 * t * c;
  }

  /// Hartree shift entering every screened denominator.
  double hartree(int s) const { return -bp_.U11 * nu_[flip(s)] + bp_.U12 * (nu_[0] + nu_[1]); }

 private:
  static double centred(double k) { return k > std::numbers::pi ? k - 2.0 * std::numbers::pi : k; }

  void update_fillings() {
    for (int s = 0; s < 2; ++s) nu_[s] = pairwise_sum(n_[s]) / size();
  }

  void check_bands() const {
    for (int i = 0; i < size(); ++i)
      if (!(eps2_[i] > eps1_[i])) throw DomainError("BandGrid: upper band must lie above the lower band");
  }

  int Nx_, Ny_;
  BandParams bp_;
  OccupationSpec occ_;
  bool tabulated_ = false;
  std::vector<double> eps1_, eps2_;
  std::vector<double> n_[2];
  double nu_[2] = {1.0, 1.0};
};

struct CavitySpec {
  double g = 0.0;
  double gc0 = 0.0;
  double delta_c = 0.0;
};

using Field = std::vector<double>;

inline Field bare_detuning(const BandGrid& grid, double omega) {
  Field d(grid.size());
  for (int i = 0; i < grid.size(); ++i) d[i] = grid.eps2(i) - grid.eps1(i) - omega;
  return d;
}

namespace detail {

inline double resonance_tol(const BandGrid& grid) {
  return 1e-12 * std::max(1.0, std::abs(grid.params().eps21));
}

/// A_k with the Hartree shift, for the given bare detuning field.
inline Field hartree_detuning(const BandGrid& grid, const Field& d0, int s) {
  Field A(d0.size());
  const double h = grid.hartree(s);
  const double tol = resonance_tol(grid);
  for (std::size_t i = 0; i < d0.size(); ++i) {
    A[i] = d0[i] + h;
    if (std::abs(A[i]) <= tol)
      throw BandResonance("laser resonant with the interband transition at k index " + std::to_string(i));
  }
  return A;
}

/// (U12/N) sum_k n(k,s) / A_k
inline double exciton_sum(const BandGrid& grid, const Field& A, int s) {
  Field terms(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) terms[i] = grid.n_occ(static_cast<int>(i), s) / A[i];
  return grid.U12() * pairwise_sum(terms) / grid.size();
}

inline Field screen(const BandGrid& grid, const Field& d0, int s) {
  Field A = hartree_detuning(grid, d0, s);
  const double S = exciton_sum(grid, A, s);
  for (double& a : A) a *= (1.0 - S);
  return A;
}

}  // namespace detail

/// Delta_{k,s} = A_k (1 - (U12/N) sum_k' n(k',s)/A_k').
inline Field screened_detuning(const BandGrid& grid, double omega, int s) {
  return detail::screen(grid, bare_detuning(grid, omega), s);
}

inline Field bs_detuning(const BandGrid& grid, double omega, int s) {
  Field d0 = bare_detuning(grid, omega);
  for (double& x : d0) x += 2.0 * omega;
  return detail::screen(grid, d0, s);
}

/// Screening factor 1 - S(omega) shared by every k; zero at the exciton resonance.
inline double screening_factor(const BandGrid& grid, double omega, int s) {
  const Field A = detail::hartree_detuning(grid, bare_detuning(grid, omega), s);
  return 1.0 - detail::exciton_sum(grid, A, s);
}

/// Electron-hole ladder factor T = 1 / (1 - S).
inline double t_matrix(const BandGrid& grid, double omega, int s) {
  const double f = screening_factor(grid, omega, s);
  if (std::abs(f) <= 1e-14) throw BandResonance("t-matrix diverges at the exciton resonance");
  return 1.0 / f;
}

/// Frequency at which A_k first vanishes for some k.
inline double band_edge_frequency(const BandGrid& grid, int s) {
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid.size(); ++i) m = std::min(m, grid.eps2(i) - grid.eps1(i));
  return m + grid.hartree(s);
}

inline double exciton_frequency(const BandGrid& grid, int s = up, double tol = 1e-10) {
  if (!(grid.U12() > 0.0)) throw NoExciton("exciton_frequency: U12 must be positive");
  double lo = 0.0;
  double hi = band_edge_frequency(grid, s) - 1e-9;
  if (!(hi > lo)) throw NoExciton("exciton_frequency: band edge below zero frequency");
  auto f = [&](double w) { return screening_factor(grid, w, s); };
  if (f(lo) <= 0.0) throw NoExciton("exciton_frequency: no root above zero frequency");
  if (f(hi) > 0.0) throw NoExciton("exciton_frequency: U12 too weak to bind an exciton on this grid");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  const double w = 0.5 * (lo + hi);
  const Field d = screened_detuning(grid, w, s);
  double dmax = 0.0;
  for (double x : d) dmax = std::max(dmax, std::abs(x));
  if (dmax > 1e-6 * grid.U12())
    throw NumericError("exciton_frequency: screened detuning not uniformly zero at the root");
  return w;
}

struct FloquetBand {
  Field eps;
  double t_eff;
};

namespace detail {

/// eps1(k) - g^2/Delta_k - g^2/Delta^BS_k at an arbitrary k, using grid sums for the screening.
inline std::function<double(double, double)> floquet_dispersion(const BandGrid& grid, double omega,
                                                                double g, int s) {
  if (grid.tabulated()) throw DomainError("floquet_band: off-grid evaluation needs analytic bands");
  const double fs = screening_factor(grid, omega, s);
  const double fb = [&] {
    Field d0 = bare_detuning(grid, omega);
    for (double& x : d0) x += 2.0 * omega;
    return 1.0 - exciton_sum(grid, hartree_detuning(grid, d0, s), s);
  }();
  const double h = grid.hartree(s);
  return [&grid, omega, g, fs, fb, h](double kx, double ky) {
    const double e1 = grid.band_energy(0, kx, ky);
    const double A = grid.band_energy(1, kx, ky) - e1 - omega + h;
    return e1 - g * g / (A * fs) - g * g / ((A + 2.0 * omega) * fb);
  };
}

}  // namespace detail

/// t from the curvature at Gamma along kx: eps ~ const - t k^2.
inline double curvature_hopping(const std::function<double(double, double)>& e, double h = 1e-3) {
  return -(e(h, 0.0) - 2.0 * e(0.0, 0.0) + e(-h, 0.0)) / (2.0 * h * h);
}

inline FloquetBand floquet_band(const BandGrid& grid, double omega, double g, int s = up) {
  const Field D = screened_detuning(grid, omega, s);
  const Field B = bs_detuning(grid, omega, s);
  FloquetBand fb;
  fb.eps.resize(grid.size());
  for (int i = 0; i < grid.size(); ++i) fb.eps[i] = grid.eps1(i) - g * g / D[i] - g * g / B[i];
  if (grid.tabulated()) {
    // Discrete Laplacian at Gamma on the grid itself.
    const double hx = 2.0 * std::numbers::pi / grid.Nx();
    const double lap = (fb.eps[grid.index(1, 0)] - 2.0 * fb.eps[0] + fb.eps[grid.index(-1, 0)]) / (hx * hx);
    fb.t_eff = -0.5 * lap;
  } else {
    fb.t_eff = curvature_hopping(detail::floquet_dispersion(grid, omega, g, s));
  }
  return fb;
}

/// Bare lower-band hopping extracted the same way as the Floquet one.
inline double bare_hopping(const BandGrid& grid) {
  return curvature_hopping([&grid](double kx, double ky) { return grid.band_energy(0, kx, ky); });
}

struct StarkBsRatio {
  Field r;
  double tla;
};

/// r_k = Delta^BS_k / Delta_k. The two-level value (omega + omega_ex)/(omega_ex - omega) is
/// reported with the sign flipped so that both are positive below resonance.
inline StarkBsRatio stark_bs_ratio(const BandGrid& grid, double omega, int s = up) {
  const Field D = screened_detuning(grid, omega, s);
  const Field B = bs_detuning(grid, omega, s);
  StarkBsRatio out;
  out.r.resize(D.size());
  for (std::size_t i = 0; i < D.size(); ++i) out.r[i] = B[i] / D[i];
  const double wex = exciton_frequency(grid, s);
  out.tla = (omega + wex) / (wex - omega);
  return out;
}

/// -|g gc0|^2 / (N Delta_c Delta_{k',s'} Delta_{k,s})
inline double cavity_forward_interaction(const BandGrid& grid, const CavitySpec& cav, double omega,
                                         int k, int kp, int s, int sp) {
  if (cav.delta_c == 0.0) throw DomainError("cavity_forward_interaction: delta_c must be nonzero");
  const Field Ds = screened_detuning(grid, omega, s);
  const Field Dsp = sp == s ? Ds : screened_detuning(grid, omega, sp);
  const double gg = cav.g * cav.gc0;
  return -gg * gg / (grid.size() * cav.delta_c * Dsp[kp] * Ds[k]);
}

/// (1/pi^2)(|gc0|^2/Delta_c) times the Brillouin-zone integral of 1/Delta_{k,s}.
inline double pomeranchuk_eta(const BandGrid& grid, const CavitySpec& cav, double omega, int s = up) {
  if (cav.delta_c == 0.0) throw DomainError("pomeranchuk_eta: delta_c must be nonzero");
  const Field D = screened_detuning(grid, omega, s);
  Field inv(D.size());
  for (std::size_t i = 0; i < D.size(); ++i) inv[i] = 1.0 / D[i];
  const double mean = pairwise_sum(inv) / grid.size();
  const double bz_area = grid.dims() == 2 ? 4.0 * std::numbers::pi * std::numbers::pi : 2.0 * std::numbers::pi;
  return cav.gc0 * cav.gc0 / cav.delta_c * bz_area * mean / (std::numbers::pi * std::numbers::pi);
}

struct PomeranchukResult {
  double lhs, rhs, eta, t_eff, t_bare;
  bool triggered;
};

inline PomeranchukResult pomeranchuk_check(const BandGrid& grid, const CavitySpec& cav, double omega,
                                           int s = up) {
  PomeranchukResult r{};
  const Field D = screened_detuning(grid, omega, s);
  const double gg = cav.g * cav.gc0;
  if (cav.delta_c == 0.0) throw DomainError("pomeranchuk_check: delta_c must be nonzero");
  r.lhs = gg * gg / (std::numbers::pi * cav.delta_c * D[0] * D[0]);
  r.eta = pomeranchuk_eta(grid, cav, omega, s);
  r.t_eff = floquet_band(grid, omega, cav.g, s).t_eff;
  r.t_bare = bare_hopping(grid);
  r.rhs = r.t_eff - r.eta * (r.t_bare - r.t_eff);
  r.triggered = r.lhs > r.rhs;
  return r;
}

}  // namespace ff
