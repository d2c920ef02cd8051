#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "rcs/grid.hpp"

namespace rcs {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// C-infinity step: 0 for x <= 0, 1 for x >= 1, g(x)/(g(x)+g(1-x)) between,
/// with g(x) = exp(-1/x).
double smooth_step(double x) noexcept;

/// Radial dyadic bump phi_0(r) = s(2 - r) - s(2 - 2r).
///
/// Writing psi(r) = s(2 - r) (equal to 1 on r <= 1 and 0 on r >= 2), one has
/// phi_0(r) = psi(r) - psi(2r) and phi_j(r) = phi_0(2^-j r), so partial sums
/// telescope to psi(2^-J r) - psi(2^(1-I) r) and the full sum is 1 on r > 0.
/// Support is [1/2, 2], phi_0(1) = 1, and phi_j = phi_(j+1) = 1/2 at 1.5 * 2^j.
double phi0_radial(double r) noexcept;
double phi_radial(double r, int j) noexcept;
/// phi_j(xi); returns 0 at xi = 0.
double phi_weight(const Vec3& xi, int j) noexcept;

/// Dyadic band selector: block j is included when lo < 2^j <= hi.
///
/// all = (0, inf], low(alpha) = (0, alpha], mid(alpha, beta) = (alpha, beta],
/// high(beta) = (beta, inf].
struct Band {
  double lo = 0.0;
  double hi = kInf;

  static Band all() { return {}; }
  static Band low(double alpha) { return {0.0, alpha}; }
  static Band mid(double alpha, double beta);
  static Band high(double beta) { return {beta, kInf}; }

  bool contains(int j) const noexcept;
  bool operator==(const Band&) const = default;
};

/// Resolved dyadic range of a grid: j_min = ceil(log2(2 / L)) and
/// j_max = floor(log2(xi_max / 2)), where 1/L is the wavenumber spacing.
class DyadicDecomposition {
 public:
  explicit DyadicDecomposition(const Grid& grid);

  int j_min() const noexcept { return j_min_; }
  int j_max() const noexcept { return j_max_; }
  /// Resolved block indices accepted by `band`, ascending.
  std::vector<int> blocks(const Band& band) const;

 private:
  int j_min_;
  int j_max_;
};

/// Delta_j f as a spectral field (pointwise multiplication by phi_j).
Field block_project(const Field& field, int j);

/// ||Delta_j f||_{L^p} with the pointwise Euclidean norm over components.
/// p = 2 uses Parseval; other p use rectangle-rule quadrature of the
/// physical block, p = inf the grid maximum.
double block_lp_norm(const Field& field, int j, double p);

struct BlockContribution {
  int j = 0;
  double contrib = 0.0;
};

struct NormReport {
  double value = 0.0;
  double s = 0.0;
  double p = 2.0;
  double sigma = 1.0;
  Band band;
  /// Time exponent of a Chemin-Lerner norm; 0 for purely spatial norms.
  double r = 0.0;
  bool tilde = true;
  std::vector<BlockContribution> blocks;
  /// Band members outside the resolved range that carry spectral content.
  std::vector<int> excluded;
};

/// l^sigma aggregation of a list of nonnegative numbers.
double lsigma(std::span<const double> values, double sigma);

/// Truncated Besov semi-norm: l^sigma over resolved j in `band` of
/// 2^(s j) ||Delta_j f||_{L^p}. Accepts physical or spectral fields.
NormReport besov_norm(const Field& field, double s, double p, double sigma,
                      const Band& band = Band::all());

/// Per-time, per-block L^p norms of a trajectory on a uniform time grid.
struct BlockLedger {
  int j_min = 0;
  int j_max = -1;
  double p = 2.0;
  std::vector<double> times;
  /// norms[k][j - j_min] = ||Delta_j F(t_k)||_{L^p}.
  std::vector<std::vector<double>> norms;
  /// Per-time union of excluded blocks (see NormReport::excluded).
  std::vector<int> excluded;

  void append(double t, const Field& field, const DyadicDecomposition& dyadic);
};

BlockLedger make_block_ledger(std::span<const double> times, std::span<const Field> fields,
                              double p);

/// Norm in time: (integral |g|^r dt)^(1/r) by composite trapezoid, or max for
/// r = inf. Requires a uniform grid; a single sample with r < inf throws
/// DegenerateQuadratureError.
double time_lr_norm(std::span<const double> times, std::span<const double> values, double r);

/// Chemin-Lerner norm from a ledger. tilde = true gives
/// ||.||_{L~^r(B^s_{p,sigma})} (time norm per block, then l^sigma); tilde =
/// false gives ||.||_{L^r(B^s_{p,sigma})} (Besov per time, then L^r).
NormReport chemin_lerner_from_ledger(const BlockLedger& ledger, double r, double s,
                                     double sigma, const Band& band, bool tilde = true);

NormReport chemin_lerner_norm(std::span<const double> times, std::span<const Field> fields,
                              double r, double s, double p, double sigma,
                              const Band& band = Band::all(), bool tilde = true);

nlohmann::json to_json(const NormReport& report);

}  // namespace rcs
