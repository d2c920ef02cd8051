#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rcs/propagator.hpp"
#include "rcs/symbol.hpp"

namespace rcs {

/// Gradient of lambda^(sign): (v+/eta+ +- v-/eta-) / 2.
Vec3 lambda_gradient(const Vec3& xi, Sign sign);

/// integral of phi_j over R^3 = 2^(3j) * 4 pi * integral r^2 phi_0(r) dr,
/// by 400-point Gauss-Legendre on [1/2, 2].
double bump_mass(int j);

/// I_j(t, .) on a cubic x-lattice, from the trapezoid rule on the box
/// [-2^(j+1), 2^(j+1)]^3 with quad_n^3 nodes and a zero-padded inverse
/// transform of size m >= quad_n. The lattice is periodic with period
/// 2 pi / h, h = 2^(j+2) / quad_n, and has spacing dx = period / m.
struct OscillatoryField {
  int j = 0;
  Sign sign = Sign::plus;
  double t = 0.0;
  int quad_n = 0;
  int m = 0;
  double dx = 0.0;
  /// m^3 values, x-lattice index (ix, iy, iz) with x = (i - m/2) dx, flat
  /// index ix + m (iy + m iz).
  std::vector<Complex> values;
  double sup = 0.0;
  /// Sup over lattice points with |x|_inf <= x_extent.
  double sup_in_box = 0.0;
  /// Share of the L^2 mass outside |x|_inf <= x_extent.
  double tail_fraction = 0.0;

  Vec3 x(std::size_t flat) const;
};

/// Box-quadrature evaluation. x_points sets the padded transform size
/// (rounded up to an even count, at least quad_n). Throws ResolutionError
/// with the required quad_n when the shell has fewer than 8 nodes across or
/// when x_extent exceeds half the lattice period.
OscillatoryField eval_oscillatory_block(int j, Sign sign, double t, double x_extent,
                                        int x_points, int quad_n = 96);

/// Direct box quadrature of I_j(t, x) at one point.
Complex oscillatory_point(int j, Sign sign, double t, const Vec3& x, int quad_n = 96);
/// Same value through the substitution xi -> 2^j xi:
/// 2^(3j) * integral exp(i 2^j x . xi) exp(i t lambda(2^j xi)) phi_0(xi) dxi.
Complex oscillatory_point_scaled(int j, Sign sign, double t, const Vec3& x, int quad_n = 96);

/// Sup of |I_j(t, .)| through the axial symmetry of lambda^(+-) and phi_j:
///   I = 2 pi int rho J_0(rho r) int exp(i x3 xi3) exp(i t lambda) phi_j dxi3 drho,
/// Gauss-Legendre in rho and the trapezoid rule in xi3, evaluated on an
/// (r, x3) lattice covering the stationary set x = -t grad lambda plus a
/// margin, then refined around the largest lattice values. `resolution`
/// scales every node and lattice count.
struct AxisymmetricSup {
  double sup = 0.0;
  double r_at = 0.0;
  double x3_at = 0.0;
  /// 1 - (L^2 mass on the lattice) / (2 pi)^3 int phi_j^2.
  double tail_fraction = 0.0;
  int n_rho = 0;
  int n_xi3 = 0;
  int lattice_points = 0;
};

AxisymmetricSup axisymmetric_sup(int j, Sign sign, double t, double resolution = 1.0);

/// Decay clock min(2^(3j), 1) * t.
double decay_clock(int j, double t);

struct DecayFit {
  int j = 0;
  Sign sign = Sign::plus;
  std::string band;
  std::vector<std::pair<double, double>> samples;
  double exponent = 0.0;
  double prefactor = 0.0;
  /// Largest |log(sample) - log(fit)| over the fit window.
  double residual = 0.0;
  /// Largest tail fraction seen over the samples.
  double tail_fraction = 0.0;
  /// Largest relative change of the sup under resolution doubling, when
  /// checked (negative otherwise).
  double self_convergence = -1.0;
};

/// Least-squares slope of log sup|I_j| against log(min(2^(3j), 1) t) over
/// n_samples geometric times in t_range, keeping those with clock >= 5.
/// Throws InsufficientDataError with fewer than 3 samples in the window and
/// DataError when a sample's tail fraction exceeds 2%. With
/// check_convergence every sample is recomputed at twice the resolution.
DecayFit sup_decay_fit(int j, Sign sign, std::pair<double, double> t_range, int n_samples,
                       bool check_convergence = false, double resolution = 1.0);

nlohmann::json to_json(const DecayFit& fit);

/// Lattice of numerical ranks of hess lambda^(sign).
struct RankMap {
  std::vector<Vec3> nodes;
  std::vector<int> ranks;
  std::vector<double> dets;
  /// histogram[k] = number of nodes with rank k.
  std::array<int, 4> histogram{};
  int skipped = 0;
};

/// Spherical-shell lattice: n_r radii geometric in [r_lo, r_hi], n_theta
/// polar and n_phi azimuthal angles. Nodes within 1e-3 of (0, 0, +-1) are
/// skipped and counted.
struct ShellLattice {
  double r_lo = 0.25;
  double r_hi = 4.0;
  int n_r = 20;
  int n_theta = 20;
  int n_phi = 20;
};

RankMap hessian_rank_map(Sign sign, const ShellLattice& lattice, double rel_tol = 1e-8);
RankMap hessian_rank_map(Sign sign, const std::vector<Vec3>& nodes, double rel_tol = 1e-8);

/// ||Delta_j (a, u)||_{L^r(0, T; L^q)} along the exact linear evolution of
/// `data`, with `samples` uniform times. Requires 2 <= q, r <= inf,
/// 1/q + 1/r <= 1/2 and (q, r) != (inf, 2); otherwise DomainError.
struct StrichartzResult {
  double value = 0.0;
  std::vector<double> times;
  std::vector<double> lq;
  double initial_l2 = 0.0;
};

StrichartzResult strichartz_block_norm(const SpectralState& data, int j, double q, double r,
                                       const Params& params, double T, std::size_t samples,
                                       LinearModel model = LinearModel::inviscid);

/// ||f||_{L^q} of a spectral field by inverse transform and the rectangle
/// rule, with the pointwise Euclidean norm over components.
double spectral_lq_norm(const Field& field, double q);

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares of log y on log x. Needs at least 4 points and
/// positive values (DataError).
ScalingFit scaling_fit(const std::vector<double>& x, const std::vector<double>& y);

struct JointFit {
  std::vector<double> exponents;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// log y = c + sum_k e_k log x_k by least squares; rows of `x` are sweep
/// points. Needs more points than unknowns and positive values.
JointFit joint_scaling_fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y);

/// Localized initial data for Strichartz sweeps: density hat = `amplitude`
/// on every non-Nyquist mode (a point mass at the origin), zero velocity.
SpectralState point_mass_data(const Grid& grid, double amplitude = 1.0);

}  // namespace rcs
