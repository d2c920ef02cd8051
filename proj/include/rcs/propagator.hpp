#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "rcs/grid.hpp"
#include "rcs/symbol.hpp"

namespace rcs {

/// Spectral pair (a_hat, u_hat) on a grid plus a time stamp. Component 0 is
/// the density perturbation, components 1..3 the velocity.
class SpectralState {
 public:
  explicit SpectralState(const Grid& grid, double time = 0.0);
  /// Takes a 4-component spectral field; throws BlowUpError on NaN/Inf.
  SpectralState(Field data, double time);

  const Grid& grid() const noexcept { return data_.grid(); }
  double time() const noexcept { return time_; }
  void set_time(double t) noexcept { time_ = t; }
  Field& data() noexcept { return data_; }
  const Field& data() const noexcept { return data_; }

  Complex& a(std::size_t m) { return data_(0, m); }
  Complex a(std::size_t m) const { return data_(0, m); }
  Complex& u(int c, std::size_t m) { return data_(1 + c, m); }
  Complex u(int c, std::size_t m) const { return data_(1 + c, m); }

  Vector4c mode(std::size_t m) const;
  void set_mode(std::size_t m, const Vector4c& v);

  bool finite() const noexcept;
  /// Throws BlowUpError (with this state's time) if any value is NaN/Inf.
  void require_finite(const char* where) const;

  /// Density as a 1-component spectral field, velocity as 3 components.
  Field density() const;
  Field velocity() const;

 private:
  Field data_;
  double time_;
};

/// Which linear generator a propagator uses.
enum class LinearModel {
  /// mu = mu' = 0 with Omega and eps kept: the rescaled inviscid group.
  inviscid,
  /// Full viscous generator -M(xi).
  viscous,
};

/// Inviscid generator with Omega and eps folded in. For Omega != 0 this is the
/// scaling transform Omega * A(xi / (Omega eps)); for Omega = 0 it is the pure
/// acoustic generator with off-diagonal entries -i xi / eps.
Matrix4c scaled_inviscid_generator(const Vec3& xi, double omega, double eps);

/// Per-mode generator G with d/dt (a, u) = G (a, u).
Matrix4c linear_generator(const Vec3& xi, const Params& params, LinearModel model);

/// exp(t G(xi)) for a single mode.
Matrix4c mode_propagator(const Vec3& xi, double t, const Params& params, LinearModel model);

/// Cached exp(h G(xi)) for every non-Nyquist mode of a grid. Nyquist modes are
/// zeroed on application. The cache is built once and applied many times, so
/// repeated steps cost one 4x4 matrix-vector product per mode.
class ModePropagator {
 public:
  ModePropagator(const Grid& grid, const Params& params, double h, LinearModel model);

  double step() const noexcept { return h_; }
  /// Advance `state` by h in place; throws BlowUpError on non-finite output.
  void apply(SpectralState& state) const;
  const Matrix4c& matrix(std::size_t mode) const { return cache_[mode]; }

 private:
  Grid grid_;
  double h_;
  std::vector<Matrix4c> cache_;
};

/// Exact inviscid evolution to time state.time() + t.
SpectralState evolve_inviscid(const SpectralState& state, double t, double omega, double eps);

/// Exact viscous evolution to time state.time() + t; t < 0 throws DomainError.
SpectralState evolve_viscous(const SpectralState& state, double t, const Params& params);

/// Smallest eigenvalue of the Hermitian part of M(xi); nonnegative for a
/// dissipative generator.
double dissipativity_margin(const Vec3& xi, const Params& params);

/// Duhamel trajectory u' = G u + F on a uniform grid t_grid (t_grid[0] is
/// the time of state0) with the exponential midpoint rule
///   u_(k+1) = E(h) u_k + h E(h/2) (F_k + F_(k+1)) / 2.
/// forcing[k] is F at t_grid[k]. Second order in h.
std::vector<SpectralState> duhamel(const SpectralState& state0,
                                   const std::vector<SpectralState>& forcing,
                                   const std::vector<double>& t_grid, const Params& params,
                                   LinearModel model = LinearModel::viscous);

/// Effective velocity w_hat = u_hat + eps^-1 (i xi / |xi|^2) a_hat, so that
/// div w = div u - a / eps. The zero mode carries no correction.
Field effective_velocity(const SpectralState& state, double eps);

/// ||Delta_j (a, u)||_{L^2}^2.
double block_energy(const SpectralState& state, int j);
/// mu ||grad Delta_j u||^2 + (mu + mu') ||div Delta_j u||^2.
double block_dissipation(const SpectralState& state, int j, const Params& params);
/// Re <Delta_j (f, g), Delta_j (a, u)>.
double block_forcing_power(const SpectralState& state, const SpectralState& forcing, int j);
/// Re <eps grad Delta_j a, Delta_j u>.
double block_cross_term(const SpectralState& state, int j, double eps);
/// V_j^2 = ||Delta_j (a, u)||^2 + 2 delta Re <eps grad Delta_j a, Delta_j u>.
double vj_squared(const SpectralState& state, int j, double eps, double delta);

/// delta = 0.1 min(mu, 1), halved until 2 delta beta0 <= 1/2. On the band
/// 2^j <= beta0 / eps this gives 1/2 <= V_j^2 / ||Delta_j (a, u)||^2 <= 3/2,
/// because |eps grad Delta_j a| carries at most eps 2^(j+1) <= 2 beta0.
double choose_delta(double mu, double beta0);

struct Beta0Calibration {
  double beta0 = 8.0;
  bool calibrated = false;
  /// Largest |rate eps^2 - 1| seen above the chosen threshold.
  double worst_relative_error = 0.0;
  /// Threshold used when calibration fails.
  static constexpr double kFallback = 8.0;
};

/// Smallest dyadic beta0 = 2^m (m in [-2, 6]) such that every sampled mode with
/// |xi| eps in [beta0, 2^8 beta0] has a slow density rate within `tolerance`
/// of 1 / eps^2. Falls back to 8 when no threshold qualifies.
Beta0Calibration calibrate_beta0(const Params& params, double tolerance = 0.25);

/// Snapshot files state_<k>.rcsf (4 components, spectral) plus index.json
/// {times, params, files} in `directory`. Returns the written paths.
std::vector<std::string> write_trajectory(const std::string& directory,
                                          const std::vector<SpectralState>& states,
                                          const Params& params);

nlohmann::json to_json(const Params& params);

}  // namespace rcs
