#include "rcs/symbol.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rcs/errors.hpp"

namespace rcs {

namespace {
constexpr Complex I{0.0, 1.0};
}

Params Params::rescaled(double mu, double eps, double omega, double gamma) {
  Params p;
  p.mu = mu;
  p.mu_prime = 1.0 - 2.0 * mu;
  p.eps = eps;
  p.omega = omega;
  p.gamma = gamma;
  return p;
}

void Params::validate() const {
  if (!(mu > 0.0)) throw ConfigError("params: mu must be positive");
  if (!(std::abs(nu() - 1.0) <= 1e-12)) {
    throw ConfigError("params: 2 mu + mu' must equal 1 after rescaling");
  }
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("params: eps must be positive");
  if (!std::isfinite(omega)) throw ConfigError("params: omega must be finite");
  if (!(gamma > 0.0)) throw ConfigError("params: gamma must be positive");
}

double Params::pressure(double rho) const { return std::pow(rho, gamma) / gamma; }

double Params::pressure_derivative(double rho) const { return std::pow(rho, gamma - 1.0); }

double Params::K(double a) const { return std::pow(1.0 + a, gamma - 2.0) - 1.0; }

double eta(const Vec3& xi, Sign sign) noexcept {
  const double s = static_cast<double>(static_cast<int>(sign));
  const double z = xi[2] + s;
  return std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + z * z);
}

double lambda_pm(const Vec3& xi, Sign sign) noexcept {
  const double ep = eta(xi, Sign::plus);
  const double em = eta(xi, Sign::minus);
  if (sign == Sign::plus) return 0.5 * (ep + em);
  const double sum = ep + em;
  return sum == 0.0 ? 0.0 : 2.0 * xi[2] / sum;
}

ModeMatrix inviscid_symbol(const Vec3& xi) {
  Matrix4c a = Matrix4c::Zero();
  for (int k = 0; k < 3; ++k) {
    a(0, k + 1) = -I * xi[k];
    a(k + 1, 0) = -I * xi[k];
  }
  a(1, 2) = 1.0;
  a(2, 1) = -1.0;
  return {a, GeneratorTag::inviscid};
}

EigenSystem eigensystem_inviscid(const Vec3& xi, double gap) {
  const Matrix4c a = inviscid_symbol(xi).entries;
  // iA is Hermitian; A v = -i h v for each eigenpair (h, v) of iA.
  const Matrix4c h = I * a;
  Eigen::SelfAdjointEigenSolver<Matrix4c> solver(h);
  if (solver.info() != Eigen::Success) throw DomainError("eigensystem: solver failed");

  const double lp = lambda_pm(xi, Sign::plus);
  const double lm = lambda_pm(xi, Sign::minus);
  struct Target {
    double value;
    EigenLabel label;
  };
  std::array<Target, 4> targets{{{lp, {1, 1}}, {-lp, {-1, 1}}, {lm, {1, -1}}, {-lm, {-1, -1}}}};
  std::sort(targets.begin(), targets.end(),
            [](const Target& x, const Target& y) { return x.value > y.value; });

  EigenSystem out;
  for (int k = 0; k + 1 < 4; ++k) {
    if (targets[k].value - targets[k + 1].value < gap) out.degenerate = true;
  }
  // The solver sorts h ascending, so -h is descending like the targets.
  for (int k = 0; k < 4; ++k) {
    const double imag = -solver.eigenvalues()(k);
    out.values[k] = Complex{0.0, imag};
    out.vectors.col(k) = solver.eigenvectors().col(k);
    out.labels[k] = targets[k].label;
  }
  return out;
}

std::array<Matrix4c, 4> spectral_projections(const EigenSystem& system) {
  std::array<Matrix4c, 4> out;
  for (int k = 0; k < 4; ++k) {
    out[k] = system.vectors.col(k) * system.vectors.col(k).adjoint();
  }
  return out;
}

ModeMatrix viscous_symbol(const Vec3& xi, const Params& params) {
  if (!(params.eps > 0.0)) throw ConfigError("viscous_symbol: eps must be positive");
  const double r2 = norm2(xi);
  Matrix4c m = Matrix4c::Zero();
  for (int k = 0; k < 3; ++k) {
    m(0, k + 1) = I * xi[k] / params.eps;
    m(k + 1, 0) = I * xi[k] / params.eps;
    m(k + 1, k + 1) += params.mu * r2;
    for (int l = 0; l < 3; ++l) m(k + 1, l + 1) += (params.mu + params.mu_prime) * xi[k] * xi[l];
  }
  // Omega e3 x u = Omega (-u2, u1, 0).
  m(1, 2) += -params.omega;
  m(2, 1) += params.omega;
  return {m, GeneratorTag::viscous};
}

std::array<double, 4> eigen_quartic_coeffs(const Vec3& xi, const Params& p) {
  const double r2 = norm2(xi);
  const double r4 = r2 * r2;
  const double r6 = r4 * r2;
  const double e2 = p.eps * p.eps;
  const double o2 = p.omega * p.omega;
  const double x3s = xi[2] * xi[2];
  const double mu = p.mu;
  const double mp = p.mu_prime;
  return {
      -(4.0 * mu + mp) * r2,
      r2 / e2 + mu * (5.0 * mu + 2.0 * mp) * r4 + o2,
      -(2.0 * mu * r4 / e2 + mu * mu * r6 + o2 * mu * r2 + o2 * (mu + mp) * x3s),
      mu * mu * r6 / e2 + o2 * x3s / e2,
  };
}

std::array<Complex, 4> characteristic_polynomial(const Matrix4c& a) {
  // Faddeev-LeVerrier: M_k = A M_(k-1) + c_(n-k+1) I, c_(n-k) = -tr(A M_k) / k.
  std::array<Complex, 5> c{};
  c[4] = 1.0;
  Matrix4c mk = Matrix4c::Zero();
  for (int k = 1; k <= 4; ++k) {
    mk = a * mk + c[4 - k + 1] * Matrix4c::Identity();
    c[4 - k] = -(a * mk).trace() / static_cast<double>(k);
  }
  return {c[3], c[2], c[1], c[0]};
}

std::array<Complex, 4> quartic_roots(const std::array<double, 4>& coeffs) {
  Eigen::Matrix4d companion = Eigen::Matrix4d::Zero();
  for (int k = 1; k < 4; ++k) companion(k, k - 1) = 1.0;
  companion(0, 3) = -coeffs[3];
  companion(1, 3) = -coeffs[2];
  companion(2, 3) = -coeffs[1];
  companion(3, 3) = -coeffs[0];
  Eigen::EigenSolver<Eigen::Matrix4d> solver(companion, false);
  std::array<Complex, 4> out;
  for (int k = 0; k < 4; ++k) out[k] = solver.eigenvalues()(k);
  return out;
}

double slow_density_rate(const Vec3& xi, const Params& params) {
  const Matrix4c m = viscous_symbol(xi, params).entries;
  Eigen::ComplexEigenSolver<Matrix4c> solver(m);
  if (solver.info() != Eigen::Success) throw DomainError("slow_density_rate: solver failed");
  int best = 0;
  double best_fraction = -1.0;
  for (int k = 0; k < 4; ++k) {
    const auto v = solver.eigenvectors().col(k);
    const double fraction = std::norm(v(0)) / v.squaredNorm();
    if (fraction > best_fraction) {
      best_fraction = fraction;
      best = k;
    }
  }
  return solver.eigenvalues()(best).real();
}

Matrix3 hessian_eta(const Vec3& xi, Sign sign) {
  const double e = eta(xi, sign);
  if (e < 1e-12) {
    throw DomainError(std::string("hessian: eta") + (sign == Sign::plus ? "+" : "-") +
                      " vanishes at this xi");
  }
  const double s = static_cast<double>(static_cast<int>(sign));
  const Eigen::Vector3d v(xi[0], xi[1], xi[2] + s);
  return Matrix3::Identity() / e - v * v.transpose() / (e * e * e);
}

Matrix3 hessian_lambda(const Vec3& xi, Sign sign) {
  const Matrix3 hp = hessian_eta(xi, Sign::plus);
  const Matrix3 hm = hessian_eta(xi, Sign::minus);
  if (sign == Sign::plus) return 0.5 * (hp + hm);
  return 0.5 * (hp - hm);
}

double hessian_det(const Vec3& xi, Sign sign) { return hessian_lambda(xi, sign).determinant(); }

double hessian_det_closed_form(const Vec3& xi, Sign sign) {
  const double ep = eta(xi, Sign::plus);
  const double em = eta(xi, Sign::minus);
  if (ep < 1e-12 || em < 1e-12) {
    throw DomainError(std::string("hessian: eta") + (ep < 1e-12 ? "+" : "-") +
                      " vanishes at this xi");
  }
  const double h2 = xi[0] * xi[0] + xi[1] * xi[1];
  const double p4 = std::pow(ep * em, 4);
  if (sign == Sign::plus) return h2 * (ep + em) / (2.0 * p4);
  return 2.0 * h2 * xi[2] / (p4 * (ep + em));
}

namespace {

// eta(xi + d) - eta(xi) without cancellation: the difference of squares is
// 2 v.d + |d|^2, divided by the sum of the two roots.
double eta_increment(const Vec3& xi, const Vec3& d, Sign sign) {
  const double s = static_cast<double>(static_cast<int>(sign));
  const double v[3] = {xi[0], xi[1], xi[2] + s};
  double num = 0.0;
  for (int k = 0; k < 3; ++k) num += 2.0 * v[k] * d[k] + d[k] * d[k];
  const Vec3 shifted{xi[0] + d[0], xi[1] + d[1], xi[2] + d[2]};
  const double den = eta(shifted, sign) + eta(xi, sign);
  return den == 0.0 ? 0.0 : num / den;
}

double lambda_increment(const Vec3& xi, const Vec3& d, Sign sign) {
  const double dp = eta_increment(xi, d, Sign::plus);
  const double dm = eta_increment(xi, d, Sign::minus);
  return sign == Sign::plus ? 0.5 * (dp + dm) : 0.5 * (dp - dm);
}

}  // namespace

Matrix3 hessian_lambda_fd(const Vec3& xi, Sign sign, double h) {
  Matrix3 out;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      auto step = [&](double si, double sj) {
        Vec3 d{0.0, 0.0, 0.0};
        d[i] += si * h;
        d[j] += sj * h;
        return lambda_increment(xi, d, sign);
      };
      out(i, j) = (step(1, 1) - step(1, -1) - step(-1, 1) + step(-1, -1)) / (4.0 * h * h);
    }
  }
  return out;
}

int numerical_rank(const Matrix3& h, double rel_tol) {
  Eigen::JacobiSVD<Matrix3> svd(h);
  const auto sv = svd.singularValues();
  if (sv(0) == 0.0) return 0;
  int rank = 0;
  for (int k = 0; k < 3; ++k) {
    if (sv(k) > rel_tol * sv(0)) ++rank;
  }
  return rank;
}

double phase_remainder(const Vec3& xi, Sign sign, Regime regime) {
  const double r = std::sqrt(norm2(xi));
  if (regime == Regime::high && r < 4.0) {
    throw DomainError("phase_remainder: high regime requires |xi| >= 4");
  }
  if (regime == Regime::low && r > 0.25) {
    throw DomainError("phase_remainder: low regime requires |xi| <= 1/4");
  }
  const double lam = lambda_pm(xi, sign);
  const double h2 = xi[0] * xi[0] + xi[1] * xi[1];
  if (regime == Regime::high) {
    return sign == Sign::plus ? lam - r : lam - xi[2] / r;
  }
  return sign == Sign::plus ? lam - (1.0 + 0.5 * h2) : lam - (xi[2] - 0.5 * xi[2] * h2);
}

}  // namespace rcs
