// rcslab: verification campaigns and simulations for the rotating
// low-Mach compressible system.
//
// Exit codes: 0 all checks passed, 2 a check failed, 1 usage or config error.

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "manifest.hpp"
#include "rcs/dispersion_lab.hpp"
#include "rcs/errors.hpp"
#include "rcs/nsc_solver.hpp"
#include "rcs/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rcs;
using namespace rcs::cli;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitCheck = 2;

struct Common {
  std::string config;
  std::string out = "rcslab_out";
  std::uint64_t seed = 1;
  int threads = 1;
};

void add_common(CLI::App* sub, Common& common) {
  sub->add_option("--config", common.config, "JSON config file; flags override its keys");
  sub->add_option("--out", common.out, "output directory")->capture_default_str();
  sub->add_option("--seed", common.seed, "random seed")->capture_default_str();
  sub->add_option("--threads", common.threads, "worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

json load_config(const Common& common) {
  return common.config.empty() ? json::object() : read_json_file(common.config);
}

std::string out_path(const Common& common, const std::string& name) {
  fs::create_directories(common.out);
  return (fs::path(common.out) / name).string();
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      values.push_back(std::stod(item));
    } catch (const std::logic_error&) {
      throw ConfigError("list: cannot parse '" + text + "'");
    }
  }
  if (values.empty()) throw ConfigError("list: empty");
  return values;
}

std::pair<double, double> parse_qr(const std::string& text) {
  const auto v = parse_list(text);
  if (v.size() != 2) throw ConfigError("--qr expects q,r");
  return {v[0], v[1]};
}

std::vector<Sign> parse_signs(const std::string& text) {
  if (text == "plus") return {Sign::plus};
  if (text == "minus") return {Sign::minus};
  if (text == "both") return {Sign::minus, Sign::plus};
  throw ConfigError("--sign must be plus, minus or both");
}

const char* sign_name(Sign s) { return s == Sign::plus ? "plus" : "minus"; }

// verify-symbol --------------------------------------------------------------

struct VerifySymbolArgs {
  int draws = 10000;
  double tolerance = 1e-10;
};

int run_verify_symbol(const Common& common, const VerifySymbolArgs& args, const json& cfg) {
  RunManifest manifest("verify-symbol", common.out);
  manifest.set_config(cfg);
  if (args.draws <= 0) throw ConfigError("--draws must be positive");
  std::mt19937_64 rng(common.seed);
  std::uniform_real_distribution<double> mu_d(0.05, 1.0), eps_d(0.05, 1.0), omega_d(-8.0, 8.0);
  std::normal_distribution<double> xi_d(0.0, 1.5);
  double coeff_err = 0.0, eig_err = 0.0;
  for (int k = 0; k < args.draws; ++k) {
    const Params p = Params::rescaled(mu_d(rng), eps_d(rng), omega_d(rng));
    const Vec3 xi{xi_d(rng), xi_d(rng), xi_d(rng)};
    const auto quartic = eigen_quartic_coeffs(xi, p);
    const auto charpoly =
        characteristic_polynomial(double(kQuarticOrientation) * viscous_symbol(xi, p).entries);
    double scale = 0.0;
    for (double c : quartic) scale = std::max(scale, std::abs(c));
    for (int i = 0; i < 4; ++i) {
      coeff_err = std::max(coeff_err, std::abs(charpoly[i] - quartic[i]) / scale);
    }
    // Numerical spectrum of the inviscid symbol against {+-i lambda^+, +-i lambda^-}.
    Eigen::ComplexEigenSolver<Matrix4c> es(inviscid_symbol(xi).entries, false);
    std::array<double, 4> got{}, want{};
    double real_part = 0.0;
    for (int i = 0; i < 4; ++i) {
      got[i] = es.eigenvalues()(i).imag();
      real_part = std::max(real_part, std::abs(es.eigenvalues()(i).real()));
    }
    const double lp = lambda_pm(xi, Sign::plus), lm = lambda_pm(xi, Sign::minus);
    want = {lp, -lp, lm, -lm};
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    double e = real_part / lp;
    for (int i = 0; i < 4; ++i) e = std::max(e, std::abs(got[i] - want[i]) / lp);
    eig_err = std::max(eig_err, e);
  }
  const json report{{"draws", args.draws},
                    {"seed", common.seed},
                    {"max_rel_coefficient_error", coeff_err},
                    {"max_rel_eigenvalue_error", eig_err},
                    {"tolerance", args.tolerance}};
  const std::string path = out_path(common, "verify_symbol.json");
  write_json_file(path, report);
  manifest.add_output(path);
  manifest.add_check("quartic_coefficients", coeff_err < args.tolerance);
  manifest.add_check("inviscid_eigenvalues", eig_err < args.tolerance);
  manifest.commit();
  std::cout << report.dump(2) << '\n';
  return manifest.all_passed() ? kExitOk : kExitCheck;
}

// decay ----------------------------------------------------------------------

struct DecayArgs {
  std::string j = "-2..2";
  std::string sign = "both";
  double clock_lo = 5.0;
  double clock_hi = 80.0;
  int samples = 5;
  double resolution = 1.0;
  bool convergence = false;
  double tolerance = 0.15;
};

int run_decay(const Common& common, const DecayArgs& args, const json& cfg) {
  RunManifest manifest("decay", common.out);
  manifest.set_config(cfg);
  const auto [j_lo, j_hi] = parse_int_range(args.j);
  const auto signs = parse_signs(args.sign);
  const std::string csv_path = out_path(common, "decay.csv");
  std::ofstream csv(csv_path);
  csv << "j,sign,clock,t,sup\n";
  json fits = json::array();
  for (int j = j_lo; j <= j_hi; ++j) {
    for (Sign s : signs) {
      const double scale = std::min(1.0, std::ldexp(1.0, 3 * j));
      const DecayFit fit = sup_decay_fit(j, s, {args.clock_lo / scale, args.clock_hi / scale},
                                         args.samples, args.convergence, args.resolution);
      char line[256];
      for (const auto& [clock, sup] : fit.samples) {
        std::snprintf(line, sizeof line, "%d,%s,%.17g,%.17g,%.17g\n", j, sign_name(s), clock,
                      clock / scale, sup);
        csv << line;
      }
      const bool ok = std::abs(fit.exponent + 1.0) <= args.tolerance &&
                      (!args.convergence || fit.self_convergence < 0.01);
      manifest.add_check("exponent_j" + std::to_string(j) + "_" + sign_name(s), ok);
      fits.push_back(to_json(fit));
    }
  }
  csv.close();
  const std::string fit_path = out_path(common, "decay_fit.json");
  write_json_file(fit_path, json{{"target_exponent", -1.0}, {"tolerance", args.tolerance}, {"fits", fits}});
  manifest.add_output(csv_path);
  manifest.add_output(fit_path);
  manifest.commit();
  for (const auto& f : fits) {
    std::printf("j=%d %s exponent %.4f\n", f.at("j").get<int>(), f.at("sign").get<std::string>().c_str(),
                f.at("exponent").get<double>());
  }
  return manifest.all_passed() ? kExitOk : kExitCheck;
}

// strichartz -----------------------------------------------------------------

struct StrichartzArgs {
  std::string band = "high";
  int j = 0;
  int n = 64;
  double period = 100.0;
  std::string omega = "8,16,32,64";
  std::string eps;
  double kappa = 0.5;
  std::string qr = "4,4";
  double T = 0.38;
  double travel = 0.0;
  double samples_per_period = 4.0;
  double mu = 0.5;
};

int run_strichartz(const Common& common, const StrichartzArgs& args, const json& cfg) {
  RunManifest manifest("strichartz", common.out);
  manifest.set_config(cfg);
  if (args.band != "high" && args.band != "low") throw ConfigError("--band must be high or low");
  const auto [q, r] = parse_qr(args.qr);
  const auto omegas = parse_list(args.omega);
  std::vector<double> epss;
  if (args.eps.empty()) {
    for (double o : omegas) epss.push_back(args.kappa / o);
  } else {
    epss = parse_list(args.eps);
    if (epss.size() == 1) epss.assign(omegas.size(), epss.front());
    if (epss.size() != omegas.size()) throw ConfigError("--eps needs one value per --omega");
  }
  const Grid grid(args.n, args.period);
  const SpectralState data = point_mass_data(grid);
  const std::string csv_path = out_path(common, "strichartz.csv");
  std::ofstream csv(csv_path);
  csv << "omega,eps,T,samples,value\n";
  std::vector<std::vector<double>> rows;
  std::vector<double> values;
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    const double omega = omegas[i], eps = epss[i], kappa = std::abs(omega) * eps;
    const double T = args.travel > 0.0 ? args.travel * kappa / std::abs(omega) : args.T;
    const auto samples =
        std::size_t(args.samples_per_period * std::abs(omega) * T / kappa) + 1;
    const Params p = Params::rescaled(args.mu, eps, omega);
    const double v = strichartz_block_norm(data, args.j, q, r, p, T, samples).value;
    char line[256];
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%zu,%.17g\n", omega, eps, T, samples, v);
    csv << line;
    rows.push_back({omega, eps});
    values.push_back(v);
  }
  csv.close();
  json fit;
  if (args.band == "high") {
    const ScalingFit f = scaling_fit(omegas, values);
    fit = {{"band", "high"}, {"slope", f.slope}, {"r2", f.r2}, {"target", -1.0 / r}, {"tolerance", 0.04}};
    manifest.add_check("high_band_slope", std::abs(f.slope + 1.0 / r) <= 0.04);
  } else {
    const JointFit f = joint_scaling_fit(rows, values);
    fit = {{"band", "low"},
           {"exponent_omega", f.exponents[0]},
           {"exponent_eps", f.exponents[1]},
           {"r2", f.r2},
           {"target_omega", 2.0 / r},
           {"target_eps", 3.0 / r},
           {"relative_tolerance", 0.15}};
    manifest.add_check("low_band_omega", std::abs(f.exponents[0] - 2.0 / r) <= 0.15 * 2.0 / r);
    manifest.add_check("low_band_eps", std::abs(f.exponents[1] - 3.0 / r) <= 0.15 * 3.0 / r);
  }
  const std::string fit_path = out_path(common, "strichartz_fit.json");
  write_json_file(fit_path, fit);
  manifest.add_output(csv_path);
  manifest.add_output(fit_path);
  manifest.commit();
  std::cout << fit.dump(2) << '\n';
  return manifest.all_passed() ? kExitOk : kExitCheck;
}

// simulation config with flag overrides --------------------------------------

struct SimArgs {
  int n = 32;
  double period = 6.283185307179586;
  double mu = 0.5;
  double eps = 0.5;
  double omega = 1.0;
  double gamma = 2.0;
  std::string profile = "taylor_green";
  double amplitude = 0.1;
  int k0 = 2;
  int j_lo = 1;
  int j_hi = 3;
  std::string snapshot;
  double T = 1.0;
  double dt = 1e-3;
  int monitor_every = 10;
  int snapshot_every = 0;
  std::string qr = "4,4";
  double alpha = 1.0;
  double beta0 = 0.0;
  bool linear = false;
};

void add_sim_options(CLI::App* sub, SimArgs& a) {
  sub->add_option("--n", a.n, "grid points per axis");
  sub->add_option("--period", a.period, "box period");
  sub->add_option("--mu", a.mu, "shear viscosity (mu' = 1 - 2 mu)");
  sub->add_option("--eps", a.eps, "Mach number");
  sub->add_option("--omega", a.omega, "rotation speed");
  sub->add_option("--gamma", a.gamma, "pressure exponent");
  sub->add_option("--profile", a.profile, "taylor_green, random_band or snapshot");
  sub->add_option("--amplitude", a.amplitude, "initial amplitude");
  sub->add_option("--k0", a.k0, "Taylor-Green wavenumber index");
  sub->add_option("--j-lo", a.j_lo, "random_band lowest block");
  sub->add_option("--j-hi", a.j_hi, "random_band highest block");
  sub->add_option("--snapshot", a.snapshot, "snapshot file for profile=snapshot");
  sub->add_option("--T", a.T, "final time");
  sub->add_option("--dt", a.dt, "time step");
  sub->add_option("--monitor-every", a.monitor_every, "steps between monitor samples");
  sub->add_option("--snapshot-every", a.snapshot_every, "monitor samples between snapshots");
  sub->add_option("--qr", a.qr, "Strichartz pair q,r of the A norm");
  sub->add_option("--alpha", a.alpha, "low-band cutoff");
  sub->add_option("--beta0", a.beta0, "high-band constant (<= 0 calibrates)");
  sub->add_flag("--linear", a.linear, "drop the nonlinear terms");
}

/// Config file values, overridden by every flag given on the command line.
SimulationConfig resolve_sim_config(CLI::App* sub, const SimArgs& a, const json& file,
                                    std::uint64_t seed, bool seed_given) {
  json js = file;
  auto set = [&](const char* flag, const char* section, const char* key, const json& v) {
    if (sub->count(flag) > 0) js[section][key] = v;
  };
  set("--n", "grid", "n", a.n);
  set("--period", "grid", "period", a.period);
  set("--mu", "params", "mu", a.mu);
  set("--eps", "params", "eps", a.eps);
  set("--omega", "params", "omega", a.omega);
  set("--gamma", "params", "gamma", a.gamma);
  set("--profile", "ic", "profile", a.profile);
  set("--amplitude", "ic", "amplitude", a.amplitude);
  set("--k0", "ic", "k0", a.k0);
  set("--j-lo", "ic", "j_lo", a.j_lo);
  set("--j-hi", "ic", "j_hi", a.j_hi);
  set("--snapshot", "ic", "snapshot", a.snapshot);
  set("--T", "time", "T", a.T);
  set("--dt", "time", "dt", a.dt);
  set("--monitor-every", "time", "monitor_every", a.monitor_every);
  set("--snapshot-every", "time", "snapshot_every", a.snapshot_every);
  if (sub->count("--qr") > 0) {
    const auto [q, r] = parse_qr(a.qr);
    js["monitors"]["q"] = q;
    js["monitors"]["r"] = r;
  }
  set("--alpha", "monitors", "alpha", a.alpha);
  set("--beta0", "monitors", "beta0", a.beta0);
  if (sub->count("--linear") > 0) js["linear"] = a.linear;
  if (seed_given) js["ic"]["seed"] = seed;
  SimulationConfig c = config_from_json(js);
  c.validate();
  return c;
}

// energy ---------------------------------------------------------------------

struct EnergyArgs {
  int samples = 400;
  double sample_dt = 5e-4;
  double tolerance = 1e-6;
};

int run_energy(const Common& common, const SimulationConfig& config, const EnergyArgs& args) {
  RunManifest manifest("energy", common.out);
  manifest.set_config(to_json(config));
  if (args.samples < 4 || !(args.sample_dt > 0.0)) throw ConfigError("energy: bad sampling");
  const SpectralState s0 = make_initial_data(config);
  const ModePropagator prop(s0.grid(), config.params, args.sample_dt, LinearModel::viscous);
  std::vector<SpectralState> traj{s0};
  for (int k = 0; k < args.samples; ++k) {
    SpectralState s = traj.back();
    prop.apply(s);
    traj.push_back(s);
  }
  const double beta0 = config.resolved_beta0();
  const EnergyReport rep =
      energy_monitors(traj, {}, config.params, choose_delta(config.params.mu, beta0), beta0);
  json blocks = json::array();
  bool identity_ok = true, vj_ok = true;
  for (const auto& b : rep.blocks) {
    blocks.push_back({{"j", b.j},
                      {"band", b.band},
                      {"identity_residual", b.identity_residual},
                      {"inequality_slack", b.inequality_slack},
                      {"vj_min", b.vj_min},
                      {"vj_max", b.vj_max},
                      {"high_ratio", b.high_ratio}});
    identity_ok = identity_ok && b.identity_residual <= args.tolerance;
    if (b.band == "mid") vj_ok = vj_ok && b.vj_min >= 0.5 && b.vj_max <= 1.5;
  }
  const json report{{"delta", rep.delta},
                    {"beta0", rep.beta0},
                    {"high_constant", rep.high_constant},
                    {"blocks", blocks}};
  const std::string path = out_path(common, "energy.json");
  write_json_file(path, report);
  manifest.add_output(path);
  manifest.add_check("identity_residual", identity_ok);
  manifest.add_check("vj_sandwich", vj_ok);
  manifest.commit();
  std::cout << report.dump(2) << '\n';
  return manifest.all_passed() ? kExitOk : kExitCheck;
}

// simulate -------------------------------------------------------------------

int run_simulate(const Common& common, const SimulationConfig& config) {
  RunManifest manifest("simulate", common.out);
  manifest.set_config(to_json(config));
  const SimulationResult result = simulate(config, common.out);
  for (const auto& f : result.files) manifest.add_output(f);
  manifest.add_check("completed", result.classification == Classification::completed);
  manifest.add_check("mass_conservation", result.mass_drift <= 1e-10);
  manifest.commit();
  std::cout << summary_json(result).dump(2) << '\n';
  return manifest.all_passed() ? kExitOk : kExitCheck;
}

// sweep ----------------------------------------------------------------------

int run_sweep(const Common& common, const SimulationConfig& config, const std::string& omega_list) {
  RunManifest manifest("sweep", common.out);
  json cfg = to_json(config);
  cfg["omegas"] = omega_list;
  manifest.set_config(cfg);
  const auto omegas = parse_list(omega_list);
  const auto rows = omega_sweep(config, omegas, common.out);
  const std::string csv_path = out_path(common, "sweep.csv");
  std::ofstream csv(csv_path);
  csv << "omega,eps,max_calA,max_A,max_E,blowup,classification\n";
  bool monotone = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& r = rows[i];
    char line[320];
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%d,%s\n", r.omega, r.eps,
                  r.max_calA, r.max_a_qr, r.max_e_eps, r.blowup ? 1 : 0,
                  to_string(r.classification).c_str());
    csv << line;
    if (i > 0 && r.max_a_qr > 1.1 * rows[i - 1].max_a_qr) monotone = false;
  }
  csv.close();
  manifest.add_output(csv_path);
  for (double omega : omegas) {
    char dir[64];
    std::snprintf(dir, sizeof dir, "omega_%g", omega);
    const fs::path sub = fs::path(common.out) / dir;
    for (const char* f : {"monitors.csv", "summary.json"}) {
      if (fs::exists(sub / f)) manifest.add_output((sub / f).string());
    }
  }
  manifest.add_check("A_nonincreasing", monotone);
  manifest.add_check("bounded_at_largest_omega", !rows.empty() && !rows.back().blowup);
  manifest.commit();
  std::ifstream echo(csv_path);
  std::cout << echo.rdbuf();
  return manifest.all_passed() ? kExitOk : kExitCheck;
}

// report ---------------------------------------------------------------------

int run_report(const Common& common) {
  const fs::path path = fs::path(common.out) / "manifest.jsonl";
  std::ifstream in(path);
  if (!in) throw ConfigError("report: no manifest at " + path.string());
  json runs = json::array();
  int failed = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("report: bad manifest line: ") + e.what());
    }
    bool pass = true;
    for (const auto& [name, ok] : rec.at("checks").items()) pass = pass && ok.get<bool>();
    failed += pass ? 0 : 1;
    std::printf("%-14s %s %s %8.2f s\n", rec.at("subcommand").get<std::string>().c_str(),
                rec.at("config_hash").get<std::string>().c_str(), pass ? "PASS" : "FAIL",
                rec.at("wall_seconds").get<double>());
    runs.push_back({{"subcommand", rec.at("subcommand")},
                    {"config_hash", rec.at("config_hash")},
                    {"pass", pass},
                    {"checks", rec.at("checks")},
                    {"outputs", rec.at("outputs")}});
  }
  // The report is itself a run and gets its own manifest line.
  RunManifest manifest("report", common.out);
  manifest.set_config(json{{"manifest", path.string()}});
  const std::string report_path = out_path(common, "report.json");
  write_json_file(report_path, json{{"runs", runs}, {"failed", failed}});
  manifest.add_output(report_path);
  manifest.add_check("all_runs_passed", failed == 0);
  manifest.commit();
  return failed == 0 ? kExitOk : kExitCheck;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rcslab: rotating compressible flow verification and simulation"};
  app.require_subcommand(1);

  Common common;

  auto* verify = app.add_subcommand("verify-symbol", "check quartic coefficients and inviscid spectrum");
  add_common(verify, common);
  VerifySymbolArgs verify_args;
  OptionBinder verify_bind(verify);
  verify_bind.bind("draws", verify_args.draws, "random draws");
  verify_bind.bind("tolerance", verify_args.tolerance, "max relative error");

  auto* decay = app.add_subcommand("decay", "fit sup-norm decay exponents of frequency-localized waves");
  add_common(decay, common);
  DecayArgs decay_args;
  OptionBinder decay_bind(decay);
  decay_bind.bind("j", decay_args.j, "block range lo..hi");
  decay_bind.bind("sign", decay_args.sign, "plus, minus or both");
  decay_bind.bind("clock-lo", decay_args.clock_lo, "window start in min(2^3j,1) t");
  decay_bind.bind("clock-hi", decay_args.clock_hi, "window end");
  decay_bind.bind("samples", decay_args.samples, "geometric samples in the window");
  decay_bind.bind("resolution", decay_args.resolution, "quadrature resolution factor");
  decay_bind.flag("convergence", decay_args.convergence, "recheck every sample at twice the resolution");
  decay_bind.bind("tolerance", decay_args.tolerance, "allowed |exponent + 1|");

  auto* strich = app.add_subcommand("strichartz", "block Strichartz norms and their scaling fits");
  add_common(strich, common);
  StrichartzArgs strich_args;
  OptionBinder strich_bind(strich);
  strich_bind.bind("band", strich_args.band, "high (slope in Omega) or low (joint fit)");
  strich_bind.bind("j", strich_args.j, "dyadic block");
  strich_bind.bind("n", strich_args.n, "grid points per axis");
  strich_bind.bind("period", strich_args.period, "box period");
  strich_bind.bind("omega", strich_args.omega, "comma-separated rotation speeds");
  strich_bind.bind("eps", strich_args.eps, "comma-separated Mach numbers (default kappa / Omega)");
  strich_bind.bind("kappa", strich_args.kappa, "Omega eps when --eps is absent");
  strich_bind.bind("qr", strich_args.qr, "Strichartz pair q,r");
  strich_bind.bind("T", strich_args.T, "time horizon");
  strich_bind.bind("travel", strich_args.travel, "if > 0, T = travel * Omega eps / Omega");
  strich_bind.bind("samples-per-period", strich_args.samples_per_period, "time samples per rotation period");
  strich_bind.bind("mu", strich_args.mu, "viscosity of the parameter set");

  auto* energy = app.add_subcommand("energy", "per-block energy identity and V_j sandwich on a linear run");
  add_common(energy, common);
  SimArgs energy_sim;
  add_sim_options(energy, energy_sim);
  EnergyArgs energy_args;
  energy->add_option("--samples", energy_args.samples, "trajectory samples")->capture_default_str();
  energy->add_option("--sample-dt", energy_args.sample_dt, "sample spacing")->capture_default_str();
  energy->add_option("--tolerance", energy_args.tolerance, "identity residual bound")->capture_default_str();

  auto* sim = app.add_subcommand("simulate", "run the nonlinear solver");
  add_common(sim, common);
  SimArgs sim_args;
  add_sim_options(sim, sim_args);

  auto* sweep = app.add_subcommand("sweep", "Omega sweep with eps = 1 / Omega");
  add_common(sweep, common);
  SimArgs sweep_args;
  add_sim_options(sweep, sweep_args);
  std::string sweep_omegas = "4,8,16,32";
  sweep->add_option("--omegas", sweep_omegas, "comma-separated Omega values")->capture_default_str();

  auto* report = app.add_subcommand("report", "summarize the manifest of an output directory");
  report->add_option("--out", common.out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    set_worker_threads(common.threads);
    auto* chosen = app.get_subcommands().front();
    const bool seed_given = chosen != report && chosen->count("--seed") > 0;
    if (chosen == verify) {
      const json cfg = load_config(common);
      verify_bind.apply(cfg);
      return run_verify_symbol(common, verify_args,
                               {{"draws", verify_args.draws}, {"tolerance", verify_args.tolerance}, {"seed", common.seed}});
    }
    if (chosen == decay) {
      decay_bind.apply(load_config(common));
      const json cfg{{"j", decay_args.j},           {"sign", decay_args.sign},
                     {"clock_lo", decay_args.clock_lo}, {"clock_hi", decay_args.clock_hi},
                     {"samples", decay_args.samples}, {"resolution", decay_args.resolution},
                     {"convergence", decay_args.convergence}, {"tolerance", decay_args.tolerance}};
      return run_decay(common, decay_args, cfg);
    }
    if (chosen == strich) {
      strich_bind.apply(load_config(common));
      const json cfg{{"band", strich_args.band}, {"j", strich_args.j},       {"n", strich_args.n},
                     {"period", strich_args.period}, {"omega", strich_args.omega}, {"eps", strich_args.eps},
                     {"kappa", strich_args.kappa}, {"qr", strich_args.qr},     {"T", strich_args.T},
                     {"travel", strich_args.travel}, {"samples_per_period", strich_args.samples_per_period},
                     {"mu", strich_args.mu}};
      return run_strichartz(common, strich_args, cfg);
    }
    if (chosen == energy) {
      const SimulationConfig c =
          resolve_sim_config(energy, energy_sim, load_config(common), common.seed, seed_given);
      return run_energy(common, c, energy_args);
    }
    if (chosen == sim) {
      return run_simulate(common,
                          resolve_sim_config(sim, sim_args, load_config(common), common.seed, seed_given));
    }
    if (chosen == sweep) {
      return run_sweep(common,
                       resolve_sim_config(sweep, sweep_args, load_config(common), common.seed, seed_given),
                       sweep_omegas);
    }
    return run_report(common);
  } catch (const rcs::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
