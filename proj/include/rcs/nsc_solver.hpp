#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rcs/lp_besov.hpp"
#include "rcs/propagator.hpp"

namespace rcs {

struct InitialDataSpec {
  /// "taylor_green", "random_band" or "snapshot".
  std::string profile = "taylor_green";
  double amplitude = 0.1;
  std::uint64_t seed = 1;
  /// taylor_green: velocity wavenumber index k0 (|xi| = k0 / L per axis);
  /// the density bump has width `bump_width` times the period.
  int k0 = 2;
  double bump_width = 0.1;
  /// random_band: blocks j_lo..j_hi with block L2 weights 2^(-s j).
  int j_lo = 1;
  int j_hi = 3;
  double s = 0.5;
  std::string snapshot;
};

struct SimulationConfig {
  int n = 32;
  double period = 6.283185307179586;
  Params params;
  InitialDataSpec ic;
  double T = 1.0;
  double dt = 1e-3;
  /// Monitor sample every `monitor_every` steps (uniform in time).
  int monitor_every = 10;
  /// Snapshot every `snapshot_every` monitor samples; 0 disables.
  int snapshot_every = 0;
  double q = 4.0;
  double r = 4.0;
  double alpha = 1.0;
  /// <= 0 means calibrate with calibrate_beta0.
  double beta0 = 0.0;
  double min_density = 0.05;
  double energy_growth = 1e6;
  /// Drop the nonlinear terms (linearized run).
  bool linear = false;

  /// ConfigError on dt <= 0, T < dt, bad grid or params, alpha > beta0 / eps.
  void validate() const;
  double resolved_beta0() const;
};

SimulationConfig config_from_json(const nlohmann::json& js);
nlohmann::json to_json(const SimulationConfig& config);

/// Builds dealiased initial data. Throws ConfigError unless 1 + eps a0 > 0 at
/// every grid point.
SpectralState make_initial_data(const SimulationConfig& config);

/// Spectral right-hand sides (-div(a u), -N_eps[a, u]) with
///   N_eps = (u . grad) u + J(eps a) L u + eps^-1 K(eps a) grad a,
/// products formed in physical space and dealiased by the two-thirds rule.
/// Throws ModelBreakdownError when eps a <= -1/2 at any grid point.
SpectralState nonlinearity(const SpectralState& state, const Params& params);

/// Largest dt allowed by the guard
///   dt <= 0.5 min(dx / (max|u| + eps^-1 max|K(eps a)|), 1 / (max|J(eps a)| nu k_max^2)),
/// infinite for the zero state.
double stability_limit(const SpectralState& state, const Params& params);

/// Time-dependent extra forcing added to both right-hand sides.
using Forcing = std::function<SpectralState(double)>;

/// ETDRK2 (Cox-Matthews) with exp(hG), phi_1(hG), phi_2(hG) cached per mode:
///   A = E U + h phi_1 N(U),  U' = A + h phi_2 (N(A) - N(U)).
class EtdStepper {
 public:
  EtdStepper(const Grid& grid, const Params& params, double dt,
             LinearModel model = LinearModel::viscous, bool linear = false);

  double dt() const noexcept { return dt_; }
  /// Throws BlowUpError (time of `state`) on non-finite output.
  SpectralState step(const SpectralState& state, const Forcing& forcing = {}) const;

 private:
  SpectralState rhs(const SpectralState& state, const Forcing& forcing, double t) const;

  Grid grid_;
  Params params_;
  double dt_;
  bool linear_;
  std::vector<Matrix4c> e_, phi1_, phi2_;
};

/// Block ledgers of a trajectory: L2 and L^q norms of a and u separately.
struct TrajectoryLedger {
  BlockLedger a2, u2, aq, uq;

  TrajectoryLedger(double q);
  void append(const SpectralState& state, const DyadicDecomposition& dyadic);
  std::size_t size() const noexcept { return a2.times.size(); }
  /// Copy holding the first `count` samples.
  TrajectoryLedger prefix(std::size_t count) const;
};

struct NormFramework {
  double d_eps = 0.0;
  double e_eps = 0.0;
  double a_qr = 0.0;
  double calA = 0.0;
};

struct NormParams {
  double eps = 1.0;
  double alpha = 1.0;
  double beta0 = 4.0;
  double q = 4.0;
  double r = 4.0;

  /// ConfigError unless alpha > 0, eps < beta0 / alpha, 1 <= q, r <= inf.
  void validate() const;
};

/// D_eps of the data; the pair norm is the sum of the component norms.
double data_norm(const SpectralState& data, const NormParams& np);
/// E_eps(t) and A^{q,r}_{eps,alpha}(t) over all ledger samples, and
/// calA = alpha eps E + A + E^((r-2)/(r-1)) A^(1/(r-1)).
NormFramework norms_framework(const TrajectoryLedger& ledger, const NormParams& np);
double auxiliary_norm(double e, double a, const NormParams& np);

struct MonitorRecord {
  double t = 0.0;
  double e_eps = 0.0;
  double a_qr = 0.0;
  double calA = 0.0;
  double min_density = 1.0;
  double max_speed = 0.0;
  double energy = 0.0;
  double mass = 0.0;
  /// V_j^2 / ||Delta_j (a, u)||^2 on the mid-band blocks at this time.
  std::vector<std::pair<int, double>> vj_ratio;
};

struct MonitorSeries {
  double d_eps = 0.0;
  std::vector<MonitorRecord> records;
};

/// Per-block energy checks along a trajectory sampled on a uniform time grid.
struct BlockEnergyCheck {
  int j = 0;
  std::string band;
  /// max_t |1/2 E_j(t) + int D_j - 1/2 E_j(0) - int P_j| / (1/2 max_t E_j).
  double identity_residual = 0.0;
  /// max_t of LHS - RHS of the integrated inequality with mu_ = min(mu, 1);
  /// nonpositive when it holds.
  double inequality_slack = 0.0;
  /// Range of V_j^2 / ||Delta_j (a, u)||^2 (mid band only, else 1).
  double vj_min = 1.0;
  double vj_max = 1.0;
  /// High band: (2^j eps ||a_j||_inf + 2^j eps^-1 ||a_j||_1 + ||u_j||_inf +
  /// 4^j ||u_j||_1) / (2^j eps ||a_j(0)|| + ||u_j(0)|| + forcing terms).
  double high_ratio = 0.0;
};

struct EnergyReport {
  double delta = 0.0;
  double beta0 = 0.0;
  std::vector<BlockEnergyCheck> blocks;
  /// Fitted high-band constant: largest high_ratio.
  double high_constant = 0.0;
};

/// `forcing` is empty (f = g = 0) or holds one state per trajectory sample.
EnergyReport energy_monitors(const std::vector<SpectralState>& trajectory,
                             const std::vector<SpectralState>& forcing, const Params& params,
                             double delta, double beta0);

/// Integral of `values` from times[0] to every sample, by piecewise cubic
/// interpolation on a uniform grid (trapezoid when fewer than 4 samples).
std::vector<double> cumulative_integral(const std::vector<double>& times,
                                        const std::vector<double>& values);

enum class Classification { completed, nan, vacuum, energy_growth, model_breakdown, unstable_dt };
std::string to_string(Classification c);

struct SimulationResult {
  double final_time = 0.0;
  Classification classification = Classification::completed;
  double blowup_time = -1.0;
  double mass_drift = 0.0;
  MonitorSeries monitors;
  double peak_calA = 0.0;
  double peak_a_qr = 0.0;
  double peak_e_eps = 0.0;
  SpectralState final_state;
  std::vector<std::string> files;

  explicit SimulationResult(const Grid& grid) : final_state(grid) {}
};

/// Runs the configured simulation. With a non-empty `out_dir` writes
/// monitors.csv, summary.json and snapshots there.
SimulationResult simulate(const SimulationConfig& config, const std::string& out_dir = "");
/// Same, from explicit initial data.
SimulationResult simulate(const SimulationConfig& config, const SpectralState& initial,
                          const std::string& out_dir = "");

nlohmann::json summary_json(const SimulationResult& result);
void write_monitor_csv(const std::string& path, const MonitorSeries& series);

struct SweepRow {
  double omega = 0.0;
  double eps = 0.0;
  double max_calA = 0.0;
  double max_a_qr = 0.0;
  double max_e_eps = 0.0;
  bool blowup = false;
  Classification classification = Classification::completed;
};

/// Runs `base` for each Omega with eps = 1 / Omega.
std::vector<SweepRow> omega_sweep(const SimulationConfig& base, const std::vector<double>& omegas,
                                  const std::string& out_dir = "");

}  // namespace rcs
