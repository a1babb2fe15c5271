#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdarg>
#include <cstring>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "floquet_forge/dynamics.hpp"
#include "floquet_forge/fswt.hpp"
#include "floquet_forge/gamma.hpp"
#include "floquet_forge/kspace.hpp"
#include "floquet_forge/sylvester.hpp"

using namespace ff;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const char* fmt, ...) __attribute__((format(printf, 3, 4))) {
    char buf[256];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    if (!detail.empty()) detail += "; ";
    detail += buf;
    if (!ok) {
      pass = false;
      detail += " [x]";
    }
  }
};

struct Bench {
  double fswt;
  double hfe;
};

Bench return_rate_errors(double omega) {
  HubbardParams p;
  p.L = 6;
  p.U = 3.0;
  p.omega = omega;
  p.g = omega / 4.0;
  auto b = build_sector_basis(6, 3, 3);
  const Vec psi0 = cdw_state(*b);
  EvolveOptions opt;
  opt.dt = 2e-3;
  opt.sample_every = 0.1;
  const double tf = 60.0;
  const auto times = uniform_times(tf, opt.sample_every);
  const auto exact = return_rate(evolve_exact(hubbard_series(p, b), psi0, tf, opt), psi0);
  const auto fswt = return_rate(evolve_static(floquet_h2(p, b, true), psi0, times), psi0);
  const auto hfe = return_rate(evolve_static(hfe_h(p, b, 1), psi0, times), psi0);
  return {nrmse(fswt, exact, times), nrmse(hfe, exact, times)};
}

Outcome criterion1() {
  Outcome o;
  const auto t0 = Clock::now();
  for (double w : {9.0, 10.0, 12.0, 14.0, 16.0, 20.0}) {
    const auto e = return_rate_errors(w);
    o.check(e.fswt <= 0.25 * e.hfe, "w=%g E_fswt=%.4f E_hfe=%.4f", w, e.fswt, e.hfe);
    if (w >= 12.0) o.check(e.fswt <= 0.05, "w=%g E_fswt<=0.05", w);
  }
  const double secs = seconds_since(t0);
  o.check(secs <= 600.0, "runtime %.0f s", secs);
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto e = return_rate_errors(8.5);
  o.check(e.fswt >= 0.1 && e.fswt <= 0.3, "E_fswt=%.4f", e.fswt);
  return o;
}

Outcome criterion3() {
  Outcome o;
  const auto t0 = Clock::now();
  const double wex = exciton_frequency(BandGrid::square(64, BandParams{}));
  const double secs = seconds_since(t0);
  o.check(std::abs(wex - 2.71) <= 0.02, "omega_ex=%.6f eV", wex);
  o.check(secs <= 1.0, "runtime %.3f s", secs);
  return o;
}

Outcome criterion4() {
  Outcome o;
  double worst = 0.0;
  for (double g : {1.0, 2.0, 3.0}) {
    HubbardParams p;
    p.L = 3;
    p.J = 0.7;
    p.U = 0.0;
    p.omega = 10.0;
    p.g = g;
    for (const auto& t : floquet_h4_terms(p).terms())
      worst = std::max(worst, std::abs(t.coeff.real() / -p.J - std::pow(g / p.omega, 4) / 4.0));
  }
  o.check(worst <= 1e-12, "g4 hopping dev=%.2e", worst);
  StrongDriveParams s;
  s.L = 3;
  s.J = 1.0;
  s.g = 3.0;
  s.omega = 12.0;
  s.fill_defaults();
  const cplx a = -s.J * strong_drive_alpha(s, 0, 0, 1);
  const double dev = std::abs(a - cplx(-s.J * std::cyl_bessel_j(0.0, 2.0 * s.g / s.omega)));
  o.check(dev <= 1e-12, "strong-drive j=0 dev=%.2e", dev);
  return o;
}

Outcome criterion5() {
  Outcome o;
  HubbardParams p;
  p.L = 2;
  p.U = 40.0;
  p.omega = 12.0;
  p.g = 3.0;
  auto b = build_sector_basis(2, 1, 1);
  Eigen::SelfAdjointEigenSolver<Mat> es{Mat(floquet_h2(p, b, true).mat)};
  const double gap = es.eigenvalues()(1) - es.eigenvalues()(0);
  const double jex = spin_exchange(p.U, p.J, p.g, p.omega);
  o.check(std::abs(gap - jex) <= 0.1 * jex, "gap=%.6f J_ex=%.6f", gap, jex);
  return o;
}

double mf_gap(int N) {
  BandParams bp;
  bp.U11 = bp.U12 = 0.8;
  auto g = BandGrid::chain(N, bp);
  auto prof = uniform_profile(g, 0.8);
  const double w = exciton_frequency(g) - 0.1;
  const auto D = screened_detuning(g, w, up);
  const auto Dk = mf_screened_denominator(g, prof, w);
  double dev = 0.0;
  for (int i = 0; i < g.size(); ++i) dev = std::max(dev, std::abs(std::abs(Dk[i]) - std::abs(D[i])));
  return dev;
}

Outcome criterion6() {
  Outcome o;
  {
    auto g = BandGrid::square(16, BandParams{}, {Occupation::fermi_hole, 0.5});
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> wdist(0.5, 2.6);
    std::uniform_int_distribution<int> kdist(0, g.size() - 1);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      const double w = wdist(rng);
      const int k = kdist(rng), s = trial % 2;
      const double A = g.eps2(k) - g.eps1(k) - w + g.hartree(s);
      worst = std::max(worst, std::abs(screened_detuning(g, w, s)[k] * t_matrix(g, w, s) - A) / std::abs(A));
    }
    o.check(worst <= 1e-12, "Delta*T=A rel dev=%.2e", worst);
  }
  {
    auto g = BandGrid::square(32, BandParams{});
    const double edge = band_edge_frequency(g, up);
    int flips = 0;
    double prev = screened_detuning(g, 0.5, up)[0];
    for (int i = 1; i <= 2000; ++i) {
      const double d = screened_detuning(g, 0.5 + (edge - 1e-6 - 0.5) * i / 2000.0, up)[0];
      flips += (d > 0) != (prev > 0);
      prev = d;
    }
    o.check(flips == 1, "sign flips=%d", flips);
  }
  {
    BandParams bp;
    bp.U11 = bp.U12 = 0.8;
    auto g = BandGrid::chain(32, bp);
    auto prof = uniform_profile(g, 0.8);
    const auto probe = series_vs_inverse(g, prof, 0, 0, 2.0, 1);
    const double rho = probe.spectral_radius;
    const int n = static_cast<int>(std::ceil(std::log(1e-11 * (1.0 - rho)) / std::log(rho))) + 1;
    const auto sv = series_vs_inverse(g, prof, 0, 0, 2.0, n);
    o.check(rho <= 0.9 && sv.max_dev <= 1e-8, "series rho=%.3f terms=%d dev=%.2e", rho, n, sv.max_dev);
  }
  {
    const double d1 = mf_gap(16), d2 = mf_gap(32);
    o.check(d2 <= std::max(0.5 * d1, 1e-12), "|Dk|-|D| gap N=16 %.2e N=32 %.2e", d1, d2);
  }
  {
    auto g = BandGrid::square(8, BandParams{});
    auto prof = screened_profile(g, 0.8, 1.0);
    double asym = 0.0, defect = 0.0;
    for (int q : {0, 5, 17}) {
      const auto gm = gamma_matrix(g, prof, 3, q, 2.4);
      asym = std::max(asym, (gm.entries - gm.entries.transpose()).cwiseAbs().maxCoeff());
      defect = std::max(defect, eigen_sign_analysis(gm).completeness_defect);
    }
    o.check(asym <= 1e-10 && defect <= 1e-10, "Gamma asym=%.2e completeness=%.2e", asym, defect);
  }
  return o;
}

Outcome criterion7() {
  Outcome o;
  auto chain = [](double J, int L) {
    HubbardParams p;
    p.L = L;
    p.J = J;
    p.U = 3.0;
    p.g = 2.5;
    p.omega = 10.0;
    return p;
  };
  double worst = 0.0;
  for (int L : {3, 4, 5}) {
    auto p = chain(1.0, L);
    auto b = build_sector_basis(L, (L + 1) / 2, L / 2);
    auto ops = build_hubbard_operators(p, b);
    auto f = solve_dense(ops.H0(), ops.drive, p.omega);
    worst = std::max(worst, sylvester_residual(f, ops.H0(), ops.drive, p.omega) / frobenius(ops.drive.mat));
  }
  o.check(worst <= 1e-10, "dense residual/|src|=%.2e", worst);
  auto residual = [&](double J, int m) {
    auto p = chain(J, 4);
    auto b = build_sector_basis(4, 2, 2);
    auto ops = build_hubbard_operators(p, b);
    return sylvester_residual(hubbard_micromotion(p, b, m, 1).at(1, 1), ops.H0(), ops.drive, p.omega);
  };
  for (int m = 0; m <= 2; ++m) {
    const double ratio = residual(0.2, m) / residual(0.1, m);
    const double expect = std::pow(2.0, m + 1);
    o.check(std::abs(ratio - expect) <= 0.2 * expect, "m=%d ratio=%.3f", m, ratio);
  }
  auto p = chain(0.7, 5);
  const double ah = hubbard_micromotion(p, build_sector_basis(5, 3, 2), 2, 3).antihermiticity_defect();
  o.check(ah <= 1e-12, "anti-Hermiticity=%.2e", ah);
  return o;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> w;
  for (int i = 0; i < n; ++i) w.push_back(a + (b - a) * i / (n - 1));
  return w;
}

Outcome criterion8() {
  Outcome o;
  {
    TwoBandChainParams p;
    p.t1 = p.t2 = 0.0;
    const double gamma = 0.02;
    const auto w = linspace(2.0, 4.5, 2501);
    const auto a = absorbance_ed(p, w, gamma);
    int maxima = 0;
    for (std::size_t k = 1; k + 1 < a.size(); ++k) maxima += a[k] >= a[k - 1] && a[k] > a[k + 1];
    const double peak = lowest_peak(w, a), expect = p.eps21 - p.U11 + p.U12;
    o.check(maxima == 1 && std::abs(peak - expect) <= gamma, "flat peak=%.4f expect=%.4f maxima=%d", peak, expect,
            maxima);
  }
  {
    TwoBandChainParams p, p0;
    p0.U12 = 0.0;
    BandParams bp0;
    bp0.U12 = 0.0;
    const double offset =
        lowest_bright_excitation(dipole_excitations(p0)) - band_edge_frequency(BandGrid::chain(p.L, bp0), up);
    const double gamma = 0.01;
    const auto w = linspace(2.5, 3.3, 1601);
    const double peak = lowest_peak(w, absorbance_ed(p, w, gamma));
    const double root = exciton_frequency(BandGrid::chain(p.L, BandParams{}));
    o.check(std::abs(peak - root) <= gamma + std::abs(offset), "L=%d peak=%.4f root=%.4f offset=%.1e", p.L, peak,
            root, offset);
  }
  return o;
}

Outcome criterion9() {
  Outcome o;
  auto g = BandGrid::square(12, BandParams{});
  const int K = g.index(4, 4), Kp = g.index(8, 8);
  auto base = screened_profile(g, 0.8, 0.5);
  apply_valley_dip(base, g, K, 1.0);
  auto wind = base;
  apply_phase_winding(wind, g, Kp);
  const double w = eigen_sign_analysis(gamma_mf(g, base, 0.0)).E(0) - 0.05;
  const double stark = uncorrelated_stark_shift(g, base, 0.05, w, K);
  const double sc = coulomb_mix_selfenergy(g, base, 0.05, w, K);
  const double sw = coulomb_mix_selfenergy(g, wind, 0.05, w, K);
  o.check(stark == 0.0, "Stark_K=%g", stark);
  o.check(std::abs(sc) > 0.0, "|Sigma_K| const=%.3e", std::abs(sc));
  o.check(std::abs(sw) < std::abs(sc), "|Sigma_K| wind=%.3e", std::abs(sw));
  return o;
}

Outcome criterion10() {
  Outcome o;
  auto g = BandGrid::square(64, BandParams{}, {Occupation::fermi_hole, std::numbers::pi / 30.0});
  const double w = exciton_frequency(g) - 0.14;
  const auto on = pomeranchuk_check(g, CavitySpec{0.05, 0.1, 0.25}, w);
  const auto off = pomeranchuk_check(g, CavitySpec{0.05, 0.0, 0.25}, w);
  o.check(on.triggered, "gc0=0.1 lhs=%.4e rhs=%.4e", on.lhs, on.rhs);
  o.check(!off.triggered, "gc0=0 triggered=%s", off.triggered ? "true" : "false");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
  const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                           criterion5, criterion6, criterion7, criterion8,
                                                           criterion9, criterion10};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("criterion %zu: %s (%s)\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria pass\n", criteria.size() - failed, criteria.size());
  return strict && failed ? 1 : 0;
}
