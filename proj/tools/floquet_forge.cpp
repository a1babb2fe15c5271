#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "floquet_forge/config.hpp"
#include "floquet_forge/dynamics.hpp"
#include "floquet_forge/fswt.hpp"
#include "floquet_forge/gamma.hpp"
#include "floquet_forge/kspace.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string num(double x) {
  if (x == 0.0) x = 0.0;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15e", x);
  return buf;
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::string out;
  char b[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(b, sizeof b, "%02x", md[i]);
    out += b;
  }
  return out;
}

class Emitter {
 public:
  explicit Emitter(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir_ / name).string());
    f << content;
    files_.push_back({{"name", name}, {"bytes", content.size()}, {"sha256", sha256_hex(content)}});
  }

  void csv(const std::string& name, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& rows) {
    std::string s;
    for (std::size_t i = 0; i < header.size(); ++i) s += (i ? "," : "") + header[i];
    s += "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + num(r[i]);
      s += "\n";
    }
    write(name, s);
  }

  void kv(const std::string& name, const std::vector<std::pair<std::string, std::string>>& items) {
    std::string s;
    for (const auto& [k, v] : items) s += k + " = " + v + "\n";
    write(name, s);
  }

  void manifest(const ff::ScenarioConfig& cfg, const ordered_json& grid) {
    ordered_json m;
    m["tool"] = "floquet-forge";
    m["version"] = FLOQUET_FORGE_VERSION;
    m["scenario"] = cfg.scenario();
    m["inputs"] = ordered_json::object();
    for (const auto& [k, v] : cfg.values()) m["inputs"][k] = v;
    m["grid"] = grid;
    m["files"] = files_;
    std::ofstream f(dir_ / "manifest.json", std::ios::binary);
    f << m.dump(2) << "\n";
  }

 private:
  fs::path dir_;
  ordered_json files_ = ordered_json::array();
};

/// Runs f(i) for i in [0, n) on up to `threads` workers; results keep index order.
template <class F>
auto parallel_map(int n, int threads, F f) -> std::vector<decltype(f(0))> {
  std::vector<decltype(f(0))> out(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errs(static_cast<std::size_t>(n));
  auto worker = [&] {
    for (int i; (i = next++) < n;) {
      try {
        out[static_cast<std::size_t>(i)] = f(i);
      } catch (...) {
        errs[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::max(1, std::min(threads, n)); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

ff::HubbardParams hubbard_params(const ff::ScenarioConfig& c) {
  ff::HubbardParams p;
  p.L = c.integer("L");
  p.J = c.num("J");
  p.U = c.num("U");
  p.mu = c.num("mu");
  p.g = c.num("g");
  p.omega = c.positive("omega");
  try {
    p.validate();
  } catch (const ff::DomainError& e) {
    throw ff::ConfigError(e.what());
  }
  return p;
}

ff::BandParams band_params(const ff::ScenarioConfig& c) {
  ff::BandParams b;
  b.eps1 = c.num("eps1");
  b.eps21 = c.num("eps21");
  b.t1 = c.num("t1");
  b.t2 = c.num("t2");
  b.U11 = c.num("U11");
  b.U12 = c.num("U12");
  return b;
}

ff::BandGrid band_grid(const ff::ScenarioConfig& c) {
  const int N = c.integer("N"), dims = c.integer("dims");
  if (N < 1) throw ff::ConfigError("key 'N': must be positive");
  if (dims != 1 && dims != 2) throw ff::ConfigError("key 'dims': must be 1 or 2");
  ff::OccupationSpec occ;
  const std::string& o = c.str("occupation");
  if (o == "hole") {
    occ = {ff::Occupation::fermi_hole, c.positive("kF")};
  } else if (o != "full") {
    throw ff::ConfigError("key 'occupation': expected full or hole");
  }
  try {
    return ff::BandGrid(N, dims == 2 ? N : 1, band_params(c), occ);
  } catch (const ff::DomainError& e) {
    throw ff::ConfigError(e.what());
  }
}

ordered_json grid_json(const ff::BandGrid& g) {
  return {{"Nx", g.Nx()}, {"Ny", g.Ny()}, {"occupation", g.occupation().kind == ff::Occupation::full ? "full" : "hole"}};
}

void run_bench(const ff::ScenarioConfig& c, Emitter& out, int threads) {
  auto p = hubbard_params(c);
  const double tf = c.positive("tf");
  const int n_up = (p.L + 1) / 2, n_dn = n_up;
  auto b = ff::build_sector_basis(p.L, n_up, n_dn);
  const ff::Vec psi0 = ff::cdw_state(*b);
  ff::EvolveOptions opt;
  opt.dt = c.positive("dt");
  opt.sample_every = c.positive("sample_every");
  const auto times = ff::uniform_times(tf, opt.sample_every);
  const int hfe_order = c.integer("hfe_order");
  const bool j2 = c.flag("include_J2");
  auto rates = parallel_map(3, threads, [&](int i) {
    if (i == 0) return ff::return_rate(ff::evolve_exact(ff::hubbard_series(p, b), psi0, tf, opt), psi0);
    const auto H = i == 1 ? ff::floquet_h2(p, b, j2) : ff::hfe_h(p, b, hfe_order);
    return ff::return_rate(ff::evolve_static(H, psi0, times), psi0);
  });
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < times.size(); ++i) rows.push_back({times[i], rates[0][i], rates[1][i], rates[2][i]});
  out.csv("return_rate.csv", {"t", "L_exact", "L_fswt", "L_hfe"}, rows);
  out.kv("nrmse.txt", {{"nrmse_fswt", num(ff::nrmse(rates[1], rates[0], times))},
                       {"nrmse_hfe", num(ff::nrmse(rates[2], rates[0], times))}});
  out.manifest(c, {{"L", p.L}, {"dim", b->dim()}, {"samples", times.size()}});
}

void run_derive(const ff::ScenarioConfig& c, Emitter& out, int) {
  auto p = hubbard_params(c);
  const std::string& method = c.str("method");
  ff::TermList t;
  if (method == "fswt") {
    ff::check_doublon_resonance(p.U, p.omega, 2);
    t = ff::floquet_h2_terms(p, c.flag("include_J2"));
    if (c.flag("include_g4")) t += ff::floquet_h4_terms(p);
  } else if (method == "hfe1" || method == "hfe2") {
    t = ff::hfe_terms(p, method == "hfe1" ? 1 : 2);
  } else {
    throw ff::ConfigError("key 'method': expected fswt, hfe1 or hfe2");
  }
  out.write("hamiltonian.txt", ff::format_terms(t));
  out.manifest(c, {{"L", p.L}});
}

void run_strong(const ff::ScenarioConfig& c, Emitter& out, int) {
  ff::StrongDriveParams p;
  p.L = c.integer("L");
  p.J = c.num("J");
  p.U = c.num("U");
  p.g = c.num("g");
  p.omega = c.positive("omega");
  const int jmax = c.integer("jmax");
  if (p.L < 2 || p.L > 12) throw ff::ConfigError("key 'L': must lie in [2, 12]");
  if (jmax < 1) throw ff::ConfigError("key 'jmax': must be >= 1");
  int n_up = c.integer("n_up"), n_dn = c.integer("n_dn");
  if (n_up < 0) n_up = (p.L + 1) / 2;
  if (n_dn < 0) n_dn = p.L / 2;
  if (n_up > p.L || n_dn > p.L) throw ff::ConfigError("particle numbers exceed L");
  p.fill_defaults();
  auto b = ff::build_sector_basis(p.L, n_up, n_dn);
  std::vector<std::vector<double>> hop;
  for (int n = -jmax; n <= jmax; ++n) {
    const ff::cplx a = -p.J * ff::strong_drive_alpha(p, n, 0, 1);
    hop.push_back({double(n), a.real(), a.imag()});
  }
  out.csv("harmonics.csv", {"n", "re", "im"}, hop);
  const auto H = ff::floquet_from_series_dense(ff::strong_drive_harmonics(p, jmax, b), b);
  Eigen::SelfAdjointEigenSolver<ff::Mat> es{ff::Mat(H.mat)};
  std::vector<std::vector<double>> spec;
  for (long i = 0; i < es.eigenvalues().size(); ++i) spec.push_back({double(i), es.eigenvalues()(i)});
  out.csv("spectrum.csv", {"index", "energy"}, spec);
  out.kv("bessel.txt", {{"A", num(2.0 * p.g / p.omega)},
                        {"truncation_error", num(ff::bessel_truncation_error(2.0 * p.g / p.omega, jmax))}});
  out.manifest(c, {{"L", p.L}, {"dim", b->dim()}, {"jmax", jmax}});
}

void run_kspace(const ff::ScenarioConfig& c, Emitter& out, int) {
  const auto g = band_grid(c);
  const double w = c.num("omega"), gd = c.num("g");
  const int s = c.spin();
  const auto D = ff::screened_detuning(g, w, s);
  const auto B = ff::bs_detuning(g, w, s);
  const auto fb = ff::floquet_band(g, w, gd, s);
  auto map = [&](const ff::Field& f) {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < g.size(); ++i) rows.push_back({g.kx(i), g.ky(i), f[i]});
    return rows;
  };
  out.csv("detuning.csv", {"kx", "ky", "value"}, map(D));
  out.csv("bs_detuning.csv", {"kx", "ky", "value"}, map(B));
  out.csv("floquet_band.csv", {"kx", "ky", "value"}, map(fb.eps));
  out.kv("kspace.txt", {{"t_matrix", num(ff::t_matrix(g, w, s))},
                        {"t_eff", num(fb.t_eff)},
                        {"nu_up", num(g.nu(0))},
                        {"nu_dn", num(g.nu(1))}});
  out.manifest(c, grid_json(g));
}

void run_exciton(const ff::ScenarioConfig& c, Emitter& out, int) {
  const auto g = band_grid(c);
  const int s = c.spin();
  const double wex = ff::exciton_frequency(g, s);
  const double edge = ff::band_edge_frequency(g, s);
  out.kv("exciton.txt", {{"omega_ex_eV", num(wex)}, {"band_edge_eV", num(edge)}, {"binding_energy_eV", num(edge - wex)}});
  out.manifest(c, grid_json(g));
}

void run_gamma(const ff::ScenarioConfig& c, Emitter& out, int threads) {
  const auto g = band_grid(c);
  const double V = c.num("V"), kappa = c.num("kappa"), gd = c.num("g");
  const auto prof = kappa > 0 ? ff::screened_profile(g, V, kappa) : ff::uniform_profile(g, V);
  const int k = c.integer("k"), q = c.integer("q"), n = c.integer("n_omega");
  if (k < 0 || k >= g.size() || q < 0 || q >= g.size()) throw ff::ConfigError("keys 'k', 'q': index outside the grid");
  if (n < 1) throw ff::ConfigError("key 'n_omega': must be positive");
  const double w0 = c.num("omega_min"), w1 = c.num("omega_max");
  const auto res = ff::eigen_sign_analysis(ff::gamma_matrix(g, prof, k, q, w0));
  std::vector<std::vector<double>> rl;
  for (long j = 0; j < res.E.size(); ++j) rl.push_back({double(j), res.E(j)});
  out.csv("resonances.csv", {"j", "E_j"}, rl);
  auto scan = parallel_map(n, threads, [&](int i) {
    const double w = n == 1 ? w0 : w0 + (w1 - w0) * i / (n - 1);
    const ff::cplx v = ff::scattering_strength(g, prof, gd, w, k, k, q, ff::up, ff::up);
    return std::vector<double>{w, v.real(), v.imag()};
  });
  out.csv("scan.csv", {"omega", "re", "im"}, scan);
  const ff::RMat inv = ff::gamma_inverse(ff::gamma_matrix(g, prof, k, q, w0));
  std::vector<std::vector<double>> sl;
  for (int k1 = 0; k1 < g.size(); ++k1) {
    const ff::cplx v = ff::scattering_strength(g, prof, gd, w0, k, k1, q, ff::up, ff::up, &inv);
    sl.push_back({double(k), double(k1), v.real(), v.imag()});
  }
  out.csv("scattering.csv", {"k_index", "k1_index", "re", "im"}, sl);
  out.manifest(c, grid_json(g));
}

void run_absorbance(const ff::ScenarioConfig& c, Emitter& out, int) {
  ff::TwoBandChainParams p;
  const auto bp = band_params(c);
  p.L = c.integer("L");
  if (p.L < 2 || p.L > 4) throw ff::ConfigError("key 'L': must lie in [2, 4]");
  p.eps1 = bp.eps1;
  p.eps21 = bp.eps21;
  p.t1 = bp.t1;
  p.t2 = bp.t2;
  p.U11 = bp.U11;
  p.U12 = bp.U12;
  const double gamma = c.num("gamma");
  if (!(gamma > 0)) throw ff::ConfigError("key 'gamma': broadening must be positive");
  const int n = c.integer("n_omega");
  if (n < 3) throw ff::ConfigError("key 'n_omega': need at least 3 points");
  const double w0 = c.num("omega_min"), w1 = c.num("omega_max");
  std::vector<double> ws;
  for (int i = 0; i < n; ++i) ws.push_back(w0 + (w1 - w0) * i / (n - 1));
  const auto ex = ff::dipole_excitations(p);
  const auto a = ff::absorbance_from(ex, ws, gamma);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < n; ++i) rows.push_back({ws[i], a[i]});
  out.csv("absorbance.csv", {"omega", "alpha"}, rows);
  std::vector<std::pair<std::string, std::string>> kv = {{"lowest_bright_excitation", num(ff::lowest_bright_excitation(ex))}};
  try {
    kv.push_back({"lowest_peak", num(ff::lowest_peak(ws, a))});
  } catch (const ff::DomainError&) {
    kv.push_back({"lowest_peak", "none"});
  }
  ff::BandGrid chain = ff::BandGrid::chain(p.L, bp);
  try {
    kv.push_back({"wannier_root", num(ff::exciton_frequency(chain))});
  } catch (const ff::NoExciton&) {
    kv.push_back({"wannier_root", "none"});
  }
  out.kv("peaks.txt", kv);
  out.manifest(c, {{"L", p.L}});
}

void run_pomeranchuk(const ff::ScenarioConfig& c, Emitter& out, int) {
  const auto g = band_grid(c);
  const int s = c.spin();
  const ff::CavitySpec cav{c.num("g"), c.num("gc0"), c.num("delta_c")};
  if (cav.delta_c == 0.0) throw ff::ConfigError("key 'delta_c': must be nonzero");
  const double wex = ff::exciton_frequency(g, s);
  const double w = wex - c.num("delta_ex");
  const auto r = ff::pomeranchuk_check(g, cav, w, s);
  out.kv("pomeranchuk.txt", {{"omega_ex", num(wex)},
                             {"omega", num(w)},
                             {"lhs", num(r.lhs)},
                             {"rhs", num(r.rhs)},
                             {"eta", num(r.eta)},
                             {"t_eff", num(r.t_eff)},
                             {"t_bare", num(r.t_bare)},
                             {"triggered", r.triggered ? "true" : "false"}});
  out.manifest(c, grid_json(g));
}

int resolve_threads(int cli) {
  if (cli > 0) return cli;
  if (const char* e = std::getenv("FF_THREADS")) {
    const int v = std::atoi(e);
    if (v > 0) return v;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"floquet-forge: Floquet effective Hamiltonians, dynamics benchmarks and screening"};
  std::string scenario, config, out_dir = "out";
  int threads = 0;
  app.add_option("scenario", scenario, "Scenario name")
      ->required()
      ->check(CLI::IsMember(ff::scenario_names()));
  app.add_option("--config", config, "Flat key = value configuration file")->required();
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--threads", threads, "Worker threads (falls back to FF_THREADS)")->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  try {
    const auto cfg = ff::ScenarioConfig::from_file(scenario, config);
    Emitter out(out_dir);
    const int nt = resolve_threads(threads);
    if (scenario == "bench-return-rate") run_bench(cfg, out, nt);
    else if (scenario == "derive-hamiltonian") run_derive(cfg, out, nt);
    else if (scenario == "strong-drive") run_strong(cfg, out, nt);
    else if (scenario == "kspace-map") run_kspace(cfg, out, nt);
    else if (scenario == "exciton") run_exciton(cfg, out, nt);
    else if (scenario == "gamma-scan") run_gamma(cfg, out, nt);
    else if (scenario == "absorbance-ed") run_absorbance(cfg, out, nt);
    else if (scenario == "pomeranchuk") run_pomeranchuk(cfg, out, nt);
    return 0;
  } catch (const ff::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ff::DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ff::ResonantDenominator& e) {
    std::cerr << "physics error: resonance: " << e.what() << "\n";
    return 2;
  } catch (const ff::BandResonance& e) {
    std::cerr << "physics error: resonance: " << e.what() << "\n";
    return 2;
  } catch (const ff::NoExciton& e) {
    std::cerr << "physics error: no exciton: " << e.what() << "\n";
    return 2;
  } catch (const ff::NumericError& e) {
    std::cerr << "physics error: numeric: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
