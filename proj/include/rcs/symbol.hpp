#pragma once

#include <Eigen/Dense>
#include <array>

#include "rcs/grid.hpp"

namespace rcs {

using Matrix4c = Eigen::Matrix<Complex, 4, 4>;
using Vector4c = Eigen::Matrix<Complex, 4, 1>;
using Matrix3 = Eigen::Matrix3d;

enum class Sign : int { plus = 1, minus = -1 };
enum class Regime { high, low };

/// Physical constants of the rescaled system. After rescaling the sound speed
/// and reference density are 1 and nu = 2 mu + mu' = 1.
struct Params {
  double mu = 0.5;
  double mu_prime = 0.0;
  double eps = 1.0;
  double omega = 1.0;
  double gamma = 2.0;

  double nu() const noexcept { return 2.0 * mu + mu_prime; }
  /// Params with mu' chosen so that nu = 1.
  static Params rescaled(double mu, double eps, double omega, double gamma = 2.0);
  /// Throws ConfigError unless mu > 0, |nu - 1| <= 1e-12, eps > 0, gamma > 0.
  void validate() const;

  /// Pressure law P(rho) = rho^gamma / gamma and its derivative.
  double pressure(double rho) const;
  double pressure_derivative(double rho) const;
  /// J(a) = a / (1 + a).
  static double J(double a) noexcept { return a / (1.0 + a); }
  /// K(a) = P'(1 + a) / (1 + a) - 1 = (1 + a)^(gamma - 2) - 1.
  double K(double a) const;
};

enum class GeneratorTag { inviscid, viscous };

struct ModeMatrix {
  Matrix4c entries;
  GeneratorTag tag = GeneratorTag::inviscid;
};

/// eta^(+-)(xi) = sqrt(|xi|^2 +- 2 xi_3 + 1).
double eta(const Vec3& xi, Sign sign) noexcept;

/// lambda^(+-) = (eta^+ +- eta^-) / 2. lambda^- is evaluated as
/// 2 xi_3 / (eta^+ + eta^-) to avoid cancellation; it carries the sign of
/// xi_3, and lambda^+ lambda^- = xi_3.
double lambda_pm(const Vec3& xi, Sign sign) noexcept;

/// Inviscid symbol acting on (b, v):
///   [ 0     -i xi1  -i xi2  -i xi3 ]
///   [ -i xi1  0       1       0    ]
///   [ -i xi2 -1       0       0    ]
///   [ -i xi3  0       0       0    ]
/// It is skew-Hermitian as written, with spectrum {+-i lambda^+, +-i lambda^-}.
ModeMatrix inviscid_symbol(const Vec3& xi);

struct EigenLabel {
  int sigma1 = 1;
  int sigma2 = 1;
};

/// Eigenpairs of the inviscid symbol. Column k of `vectors` pairs with
/// values[k] = i * sigma1 * lambda^(sigma2). When two closed-form
/// eigenvalues are closer than `gap`, `degenerate` is set and the colliding
/// columns form an orthonormal basis of the joint eigenspace instead.
struct EigenSystem {
  std::array<Complex, 4> values;
  Matrix4c vectors;
  std::array<EigenLabel, 4> labels;
  bool degenerate = false;
};

EigenSystem eigensystem_inviscid(const Vec3& xi, double gap = 1e-8);

/// Rank-one projections onto the eigenvectors; they sum to the identity.
std::array<Matrix4c, 4> spectral_projections(const EigenSystem& system);

/// Viscous generator M with d/dt (a, u) = -M (a, u):
///   M = [ 0        i xi^T / eps                                  ]
///       [ i xi/eps  mu |xi|^2 I + (mu + mu') xi xi^T + Omega [e3 x] ]
/// At mu = mu' = 0 and Omega = eps = 1, -M equals the inviscid symbol.
ModeMatrix viscous_symbol(const Vec3& xi, const Params& params);

/// Orientation of the quartic's unknown: its roots are the eigenvalues of
/// kQuarticOrientation * M, i.e. decay rates. Determined once by comparing
/// with the characteristic polynomial of M.
inline constexpr int kQuarticOrientation = +1;

/// (c3, c2, c1, c0) of lambda^4 + c3 lambda^3 + c2 lambda^2 + c1 lambda + c0:
///   c3 = -(4 mu + mu') |xi|^2
///   c2 = |xi|^2/eps^2 + mu (5 mu + 2 mu') |xi|^4 + Omega^2
///   c1 = -(2 mu |xi|^4/eps^2 + mu^2 |xi|^6 + Omega^2 mu |xi|^2 + Omega^2 (mu + mu') xi3^2)
///   c0 = mu^2 |xi|^6/eps^2 + Omega^2 xi3^2/eps^2
/// This is det(lambda - M) when nu = 1 (the c1 term mu^2 |xi|^6 is mu^2 nu |xi|^6
/// in general).
std::array<double, 4> eigen_quartic_coeffs(const Vec3& xi, const Params& params);

/// Characteristic polynomial det(lambda - A) by Faddeev-LeVerrier, returned as
/// (c3, c2, c1, c0) in the same layout as eigen_quartic_coeffs.
std::array<Complex, 4> characteristic_polynomial(const Matrix4c& a);

/// Roots of the quartic (complex, unordered), via the companion matrix.
std::array<Complex, 4> quartic_roots(const std::array<double, 4>& coeffs);

/// Real part of the eigenvalue of M whose eigenvector carries the largest
/// density fraction |a|^2 / |(a, u)|^2. For |xi| eps large this is the slow
/// density relaxation rate, close to 1 / (nu eps^2).
double slow_density_rate(const Vec3& xi, const Params& params);

/// Hessian of eta^(+-): I/eta - v v^T / eta^3 with v = (xi1, xi2, xi3 +- 1).
Matrix3 hessian_eta(const Vec3& xi, Sign sign);
/// Hessian of lambda^(+-) = (hess eta^+ +- hess eta^-) / 2. Throws DomainError
/// when eta^+ or eta^- is below 1e-12.
Matrix3 hessian_lambda(const Vec3& xi, Sign sign);
double hessian_det(const Vec3& xi, Sign sign);
/// Closed forms:
///   det hess lambda^+ = |xi_h|^2 (eta^+ + eta^-) / (2 eta+^4 eta-^4)
///   det hess lambda^- = 2 |xi_h|^2 xi3 / (eta+^4 eta-^4 (eta^+ + eta^-))
/// The minus-sign determinant is positive for xi3 > 0: its sign follows
/// lambda^- = (eta^+ - eta^-)/2 and was confirmed by symbolic expansion.
double hessian_det_closed_form(const Vec3& xi, Sign sign);
/// Central finite-difference Hessian of lambda^(+-) with step h.
Matrix3 hessian_lambda_fd(const Vec3& xi, Sign sign, double h = 1e-5);
/// Number of singular values above rel_tol times the largest.
int numerical_rank(const Matrix3& h, double rel_tol = 1e-8);

/// lambda^(sign)(xi) minus its leading phase:
///   (+, high): |xi|          (-, high): xi3 / |xi|
///   (+, low):  1 + |xi_h|^2/2  (-, low): xi3 - xi3 |xi_h|^2 / 2
/// high requires |xi| >= 4, low requires |xi| <= 1/4.
double phase_remainder(const Vec3& xi, Sign sign, Regime regime);

inline double norm2(const Vec3& v) noexcept { return v[0] * v[0] + v[1] * v[1] + v[2] * v[2]; }

}  // namespace rcs
