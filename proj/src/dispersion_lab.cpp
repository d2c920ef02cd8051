#include "rcs/dispersion_lab.hpp"

#include <gsl/gsl_integration.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "rcs/aligned.hpp"
#include "rcs/errors.hpp"
#include "rcs/lp_besov.hpp"
#include "rcs/parallel.hpp"

namespace rcs {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr Complex I{0.0, 1.0};

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussRule gauss_legendre(int n, double a, double b) {
  std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)>
      table(gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(n)),
            &gsl_integration_glfixed_table_free);
  if (!table) throw ConfigError("gauss_legendre: table allocation failed");
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    gsl_integration_glfixed_point(a, b, static_cast<std::size_t>(i), &rule.nodes[i],
                                  &rule.weights[i], table.get());
  }
  return rule;
}

ScalingFit scaling_fit_unchecked(const std::vector<double>& lx, const std::vector<double>& ly);

double lambda_axial(double rho, double xi3, Sign sign) {
  return lambda_pm({rho, 0.0, xi3}, sign);
}

// integral over R^3 of phi_j^2.
double bump_square_mass(int j) {
  const GaussRule g = gauss_legendre(400, 0.5, 2.0);
  double s = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const double p = phi0_radial(g.nodes[i]);
    s += g.weights[i] * g.nodes[i] * g.nodes[i] * p * p;
  }
  return 4.0 * kPi * s * std::ldexp(1.0, 3 * j);
}

}  // namespace

Vec3 lambda_gradient(const Vec3& xi, Sign sign) {
  Vec3 g{0.0, 0.0, 0.0};
  const double s = sign == Sign::plus ? 1.0 : -1.0;
  for (int branch : {1, -1}) {
    const Vec3 v{xi[0], xi[1], xi[2] + branch};
    const double e = std::sqrt(norm2(v));
    if (e < 1e-300) continue;
    const double w = branch == 1 ? 0.5 : 0.5 * s;
    for (int k = 0; k < 3; ++k) g[k] += w * v[k] / e;
  }
  return g;
}

double bump_mass(int j) {
  const GaussRule g = gauss_legendre(400, 0.5, 2.0);
  double s = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    s += g.weights[i] * g.nodes[i] * g.nodes[i] * phi0_radial(g.nodes[i]);
  }
  return 4.0 * kPi * s * std::ldexp(1.0, 3 * j);
}

Vec3 OscillatoryField::x(std::size_t flat) const {
  const std::size_t mm = static_cast<std::size_t>(m);
  const double half = 0.5 * m;
  return {(static_cast<double>(flat % mm) - half) * dx,
          (static_cast<double>((flat / mm) % mm) - half) * dx,
          (static_cast<double>(flat / (mm * mm)) - half) * dx};
}

OscillatoryField eval_oscillatory_block(int j, Sign sign, double t, double x_extent,
                                        int x_points, int quad_n) {
  const double L = std::ldexp(1.0, j + 1);
  const double h = 2.0 * L / quad_n;
  // The shell 2^(j-1) < |xi| < 2^(j+1) has thickness 1.5 * 2^j = 0.375 * 2L.
  if (0.75 * L / h < 8.0) {
    throw ResolutionError("oscillatory block: fewer than 8 nodes across the shell", 22);
  }
  if (x_extent > kPi / h) {
    const int need = static_cast<int>(std::ceil(x_extent * 2.0 * L / kPi));
    throw ResolutionError("oscillatory block: x_extent exceeds half the lattice period", need);
  }
  int m = std::max(quad_n, x_points);
  m += m % 2;
  OscillatoryField out;
  out.j = j;
  out.sign = sign;
  out.t = t;
  out.quad_n = quad_n;
  out.m = m;
  out.dx = 2.0 * kPi / (m * h);

  const std::size_t mm = static_cast<std::size_t>(m);
  AlignedComplexVector buf(mm * mm * mm, Complex{});
  const double w3 = h * h * h;
  parallel_for(static_cast<std::size_t>(quad_n), [&](std::size_t kz) {
    const double z = -L + kz * h;
    for (int ky = 0; ky < quad_n; ++ky) {
      const double y = -L + ky * h;
      for (int kx = 0; kx < quad_n; ++kx) {
        const double x = -L + kx * h;
        const Vec3 xi{x, y, z};
        const double r = std::sqrt(norm2(xi));
        const double w = phi_radial(r, j);
        if (w == 0.0) continue;
        buf[kx + mm * (ky + mm * kz)] = w3 * w * std::exp(I * (t * lambda_pm(xi, sign)));
      }
    }
  });
  fft_inverse_inplace(std::span<Complex>(buf.data(), buf.size()), m);

  // Lattice index i is x = (i - m/2) dx; the transform index is (i - m/2) mod m,
  // and exp(i x (-L)) restores the box offset.
  out.values.assign(mm * mm * mm, Complex{});
  std::vector<Complex> phase(mm);
  std::vector<std::size_t> src(mm);
  for (std::size_t i = 0; i < mm; ++i) {
    const double xv = (static_cast<double>(i) - 0.5 * m) * out.dx;
    phase[i] = std::exp(-I * (xv * L));
    src[i] = (i + mm - mm / 2) % mm;
  }
  double total = 0.0, inside = 0.0;
  for (std::size_t iz = 0; iz < mm; ++iz) {
    for (std::size_t iy = 0; iy < mm; ++iy) {
      for (std::size_t ix = 0; ix < mm; ++ix) {
        const Complex v = buf[src[ix] + mm * (src[iy] + mm * src[iz])] * phase[ix] * phase[iy] *
                          phase[iz];
        const std::size_t f = ix + mm * (iy + mm * iz);
        out.values[f] = v;
        const double a = std::abs(v);
        out.sup = std::max(out.sup, a);
        total += a * a;
        const Vec3 xv = out.x(f);
        if (std::max({std::abs(xv[0]), std::abs(xv[1]), std::abs(xv[2])}) <= x_extent) {
          inside += a * a;
          out.sup_in_box = std::max(out.sup_in_box, a);
        }
      }
    }
  }
  out.tail_fraction = total > 0.0 ? std::max(0.0, 1.0 - inside / total) : 0.0;
  return out;
}

namespace {

Complex box_point(int j, Sign sign, double t, const Vec3& x, int quad_n, bool scaled) {
  const double scale = std::ldexp(1.0, j);
  const double L = scaled ? 2.0 : 2.0 * scale;
  const double h = 2.0 * L / quad_n;
  std::vector<Complex> partial(static_cast<std::size_t>(quad_n));
  parallel_for(partial.size(), [&](std::size_t kz) {
    Complex acc{};
    const double z = -L + kz * h;
    for (int ky = 0; ky < quad_n; ++ky) {
      const double y = -L + ky * h;
      for (int kx = 0; kx < quad_n; ++kx) {
        const Vec3 node{-L + kx * h, y, z};
        if (scaled) {
          const double w = phi0_radial(std::sqrt(norm2(node)));
          if (w == 0.0) continue;
          const Vec3 xi{scale * node[0], scale * node[1], scale * node[2]};
          const double ph = scale * (x[0] * node[0] + x[1] * node[1] + x[2] * node[2]) +
                            t * lambda_pm(xi, sign);
          acc += w * std::exp(I * ph);
        } else {
          const double w = phi_radial(std::sqrt(norm2(node)), j);
          if (w == 0.0) continue;
          const double ph =
              x[0] * node[0] + x[1] * node[1] + x[2] * node[2] + t * lambda_pm(node, sign);
          acc += w * std::exp(I * ph);
        }
      }
    }
    partial[kz] = acc;
  });
  Complex sum{};
  for (const auto& p : partial) sum += p;
  const double w3 = h * h * h;
  return scaled ? std::ldexp(1.0, 3 * j) * w3 * sum : w3 * sum;
}

}  // namespace

Complex oscillatory_point(int j, Sign sign, double t, const Vec3& x, int quad_n) {
  return box_point(j, sign, t, x, quad_n, false);
}

Complex oscillatory_point_scaled(int j, Sign sign, double t, const Vec3& x, int quad_n) {
  return box_point(j, sign, t, x, quad_n, true);
}

namespace {

struct StationaryBounds {
  double g3_min = 0.0;
  double g3_max = 0.0;
  double gh_max = 0.0;
};

StationaryBounds stationary_bounds(int j, Sign sign) {
  const double L = std::ldexp(1.0, j + 1);
  StationaryBounds b{kInf, -kInf, 0.0};
  const int n = 160;
  for (int a = 0; a <= n; ++a) {
    const double rho = L * a / n;
    for (int c = -n; c <= n; ++c) {
      const double z = L * c / n;
      if (phi_radial(std::hypot(rho, z), j) == 0.0) continue;
      const Vec3 g = lambda_gradient({rho, 0.0, z}, sign);
      b.g3_min = std::min(b.g3_min, g[2]);
      b.g3_max = std::max(b.g3_max, g[2]);
      b.gh_max = std::max(b.gh_max, std::hypot(g[0], g[1]));
    }
  }
  return b;
}

// (r, x3) lattice evaluation for one window.
struct AxisymmetricEval {
  AxisymmetricSup result;
  double captured_mass = 0.0;
};

class AxisymmetricKernel {
 public:
  AxisymmetricKernel(int j, Sign sign, double t, double r_max, double x3_lo, double x3_hi,
                     double resolution)
      : L_(std::ldexp(1.0, j + 1)) {
    const double w3 = x3_hi - x3_lo;
    // Trapezoid in xi3 periodizes in x3 with period 2 pi / h3; keep it at
    // twice the window.
    const int n3 = static_cast<int>(std::ceil(resolution * std::max(64.0, 2.0 * L_ * 2.0 * w3 /
                                                                                (2.0 * kPi))));
    h3_ = 2.0 * L_ / n3;
    xi3_.resize(n3);
    for (int c = 0; c < n3; ++c) xi3_[c] = -L_ + c * h3_;
    const StationaryBounds sb = stationary_bounds(j, sign);
    const double omega = 0.5 * L_ * (r_max + std::abs(t) * sb.gh_max);
    const int nr = static_cast<int>(std::ceil(resolution * (1.1 * omega + 40.0)));
    rho_ = gauss_legendre(nr, 0.0, L_);
    f_.resize(nr, n3);
    for (int a = 0; a < nr; ++a) {
      const double rho = rho_.nodes[a];
      for (int c = 0; c < n3; ++c) {
        const double w = phi_radial(std::hypot(rho, xi3_[c]), j);
        f_(a, c) = w == 0.0 ? Complex{}
                            : 2.0 * kPi * rho * rho_.weights[a] * h3_ * w *
                                  std::exp(I * (t * lambda_axial(rho, xi3_[c], sign)));
      }
    }
  }

  int n_rho() const { return static_cast<int>(rho_.nodes.size()); }
  int n_xi3() const { return static_cast<int>(xi3_.size()); }

  /// Values on the tensor lattice r_d x x3_b. The xi3 contraction is formed
  /// in column blocks so that only an n_rho x 512 slice is held at a time.
  Eigen::MatrixXcd lattice(const std::vector<double>& r, const std::vector<double>& x3) const {
    Eigen::MatrixXd jm(r.size(), rho_.nodes.size());
    for (std::size_t d = 0; d < r.size(); ++d) {
      for (std::size_t a = 0; a < rho_.nodes.size(); ++a) {
        jm(d, a) = std::cyl_bessel_j(0.0, rho_.nodes[a] * r[d]);
      }
    }
    const auto n3 = static_cast<Eigen::Index>(x3.size());
    const Eigen::Index block = 512;
    Eigen::MatrixXcd out(r.size(), n3);
    for (Eigen::Index b0 = 0; b0 < n3; b0 += block) {
      const Eigen::Index nb = std::min(block, n3 - b0);
      Eigen::MatrixXcd e(xi3_.size(), nb);
      for (std::size_t c = 0; c < xi3_.size(); ++c) {
        for (Eigen::Index b = 0; b < nb; ++b) e(c, b) = std::exp(I * (x3[b0 + b] * xi3_[c]));
      }
      const Eigen::MatrixXcd bmat = f_ * e;
      out.middleCols(b0, nb).real() = jm * bmat.real();
      out.middleCols(b0, nb).imag() = jm * bmat.imag();
    }
    return out;
  }

  Complex point(double r, double x3) const {
    Eigen::VectorXcd e(xi3_.size());
    for (std::size_t c = 0; c < xi3_.size(); ++c) e(c) = std::exp(I * (x3 * xi3_[c]));
    const Eigen::VectorXcd b = f_ * e;
    Complex acc{};
    for (std::size_t a = 0; a < rho_.nodes.size(); ++a) {
      acc += std::cyl_bessel_j(0.0, rho_.nodes[a] * r) * b(a);
    }
    return acc;
  }

 private:
  double L_;
  double h3_ = 0.0;
  std::vector<double> xi3_;
  GaussRule rho_;
  Eigen::MatrixXcd f_;
};

AxisymmetricEval evaluate_window(int j, Sign sign, double t, double pad, double resolution) {
  const StationaryBounds sb = stationary_bounds(j, sign);
  const double L = std::ldexp(1.0, j + 1);
  // Stationary points sit at x = -t grad lambda.
  double x3_lo = std::min(-t * sb.g3_max, -t * sb.g3_min) - pad;
  double x3_hi = std::max(-t * sb.g3_max, -t * sb.g3_min) + pad;
  const double r_max = std::abs(t) * sb.gh_max + pad;
  const AxisymmetricKernel kernel(j, sign, t, r_max, x3_lo, x3_hi, resolution);

  // About six lattice points per shortest wavelength 2 pi / L.
  const double dx = 2.0 * kPi / (6.0 * L * resolution);
  const int nr = static_cast<int>(std::ceil(r_max / dx)) + 1;
  const int n3 = static_cast<int>(std::ceil((x3_hi - x3_lo) / dx)) + 1;
  std::vector<double> r(nr), x3(n3);
  for (int d = 0; d < nr; ++d) r[d] = d * dx;
  for (int b = 0; b < n3; ++b) x3[b] = x3_lo + b * dx;

  // Rows in chunks keep the lattice block small.
  AxisymmetricEval ev;
  struct Candidate {
    double value;
    double r;
    double x3;
  };
  std::vector<Candidate> best;
  const int chunk = 256;
  for (int d0 = 0; d0 < nr; d0 += chunk) {
    const int d1 = std::min(nr, d0 + chunk);
    const std::vector<double> rs(r.begin() + d0, r.begin() + d1);
    const Eigen::MatrixXcd vals = kernel.lattice(rs, x3);
    for (int d = 0; d < d1 - d0; ++d) {
      // Trapezoid in r with the Euler-Maclaurin end term at r = 0, where
      // d/dr (r |I|^2) = |I(0)|^2.
      const double wr = 2.0 * kPi * dx * dx * (rs[d] == 0.0 ? dx / 12.0 : rs[d]);
      for (int b = 0; b < n3; ++b) {
        const double a = std::abs(vals(d, b));
        ev.captured_mass += wr * a * a;
        if (best.size() < 8 || a > best.back().value) {
          best.push_back({a, rs[d], x3[b]});
          std::sort(best.begin(), best.end(),
                    [](const Candidate& p, const Candidate& q) { return p.value > q.value; });
          // Keep well-separated candidates only.
          std::vector<Candidate> kept;
          for (const auto& c : best) {
            bool near = false;
            for (const auto& k : kept) {
              if (std::hypot(c.r - k.r, c.x3 - k.x3) < 2.0 * dx) near = true;
            }
            if (!near) kept.push_back(c);
          }
          if (kept.size() > 8) kept.resize(8);
          best = std::move(kept);
        }
      }
    }
  }

  // Pattern search around the lattice maxima.
  Candidate top{0.0, 0.0, 0.0};
  for (auto c : best) {
    double step = 0.5 * dx;
    for (int level = 0; level < 6; ++level, step *= 0.5) {
      bool moved = true;
      for (int guard = 0; moved && guard < 8; ++guard) {
        moved = false;
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dz = -1; dz <= 1; ++dz) {
            if (dr == 0 && dz == 0) continue;
            const double rr = std::abs(c.r + dr * step);
            const double zz = c.x3 + dz * step;
            const double a = std::abs(kernel.point(rr, zz));
            if (a > c.value) {
              c = {a, rr, zz};
              moved = true;
            }
          }
        }
      }
    }
    if (c.value > top.value) top = c;
  }
  ev.result.sup = top.value;
  ev.result.r_at = top.r;
  ev.result.x3_at = top.x3;
  ev.result.n_rho = kernel.n_rho();
  ev.result.n_xi3 = kernel.n_xi3();
  ev.result.lattice_points = nr * n3;
  return ev;
}

}  // namespace

AxisymmetricSup axisymmetric_sup(int j, Sign sign, double t, double resolution) {
  if (!(resolution > 0.0)) throw ConfigError("axisymmetric_sup: resolution must be positive");
  const double total = std::pow(2.0 * kPi, 3) * bump_square_mass(j);
  double pad = 24.0 / std::ldexp(1.0, j);
  AxisymmetricEval ev;
  for (int attempt = 0; attempt < 4; ++attempt, pad *= 1.5) {
    ev = evaluate_window(j, sign, t, pad, resolution);
    ev.result.tail_fraction = std::max(0.0, 1.0 - ev.captured_mass / total);
    if (ev.result.tail_fraction < 0.005) break;
  }
  return ev.result;
}

double decay_clock(int j, double t) { return std::min(std::ldexp(1.0, 3 * j), 1.0) * t; }

DecayFit sup_decay_fit(int j, Sign sign, std::pair<double, double> t_range, int n_samples,
                       bool check_convergence, double resolution) {
  const auto [t0, t1] = t_range;
  if (!(t0 > 0.0) || !(t1 > t0) || n_samples < 2) {
    throw ConfigError("sup_decay_fit: need 0 < t0 < t1 and at least two samples");
  }
  std::vector<double> times;
  for (int k = 0; k < n_samples; ++k) {
    const double t = t0 * std::pow(t1 / t0, static_cast<double>(k) / (n_samples - 1));
    if (decay_clock(j, t) >= 5.0) times.push_back(t);
  }
  if (times.size() < 3) {
    throw InsufficientDataError("sup_decay_fit: fewer than 3 samples with clock >= 5");
  }
  std::vector<AxisymmetricSup> sups(times.size()), fine(check_convergence ? times.size() : 0);
  parallel_for(times.size(), [&](std::size_t k) {
    sups[k] = axisymmetric_sup(j, sign, times[k], resolution);
    if (check_convergence) fine[k] = axisymmetric_sup(j, sign, times[k], 2.0 * resolution);
  });

  DecayFit fit;
  fit.j = j;
  fit.sign = sign;
  fit.band = j >= 0 ? "high" : "low";
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < times.size(); ++k) {
    fit.samples.emplace_back(times[k], sups[k].sup);
    fit.tail_fraction = std::max(fit.tail_fraction, sups[k].tail_fraction);
    lx.push_back(std::log(decay_clock(j, times[k])));
    ly.push_back(std::log(sups[k].sup));
    if (check_convergence) {
      fit.self_convergence = std::max(fit.self_convergence,
                                      std::abs(fine[k].sup - sups[k].sup) / fine[k].sup);
    }
  }
  if (fit.tail_fraction > 0.02) {
    throw DataError("sup_decay_fit: kernel mass outside the evaluation window exceeds 2%");
  }
  const ScalingFit s = scaling_fit_unchecked(lx, ly);
  fit.exponent = s.slope;
  fit.prefactor = std::exp(s.intercept);
  for (std::size_t k = 0; k < lx.size(); ++k) {
    fit.residual = std::max(fit.residual, std::abs(ly[k] - (s.intercept + s.slope * lx[k])));
  }
  return fit;
}

nlohmann::json to_json(const DecayFit& fit) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& [t, v] : fit.samples) samples.push_back({t, v});
  return {{"j", fit.j},
          {"sign", fit.sign == Sign::plus ? "+" : "-"},
          {"band", fit.band},
          {"exponent", fit.exponent},
          {"prefactor", fit.prefactor},
          {"residual", fit.residual},
          {"tail_fraction", fit.tail_fraction},
          {"self_convergence", fit.self_convergence},
          {"samples", samples}};
}

RankMap hessian_rank_map(Sign sign, const std::vector<Vec3>& nodes, double rel_tol) {
  RankMap map;
  for (const auto& xi : nodes) {
    const double d_plus = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + (xi[2] - 1.0) * (xi[2] - 1.0));
    const double d_minus =
        std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + (xi[2] + 1.0) * (xi[2] + 1.0));
    if (std::min(d_plus, d_minus) < 1e-3) {
      ++map.skipped;
      continue;
    }
    const Matrix3 h = hessian_lambda(xi, sign);
    const int rank = numerical_rank(h, rel_tol);
    map.nodes.push_back(xi);
    map.ranks.push_back(rank);
    map.dets.push_back(h.determinant());
    ++map.histogram[rank];
  }
  return map;
}

RankMap hessian_rank_map(Sign sign, const ShellLattice& lat, double rel_tol) {
  if (lat.n_r < 1 || lat.n_theta < 1 || lat.n_phi < 1 || !(lat.r_lo > 0.0) ||
      !(lat.r_hi >= lat.r_lo)) {
    throw ConfigError("hessian_rank_map: invalid shell lattice");
  }
  std::vector<Vec3> nodes;
  for (int a = 0; a < lat.n_r; ++a) {
    const double r = lat.n_r == 1 ? lat.r_lo
                                  : lat.r_lo * std::pow(lat.r_hi / lat.r_lo,
                                                        static_cast<double>(a) / (lat.n_r - 1));
    for (int b = 0; b < lat.n_theta; ++b) {
      // Midpoint polar angles avoid the poles.
      const double th = kPi * (b + 0.5) / lat.n_theta;
      for (int c = 0; c < lat.n_phi; ++c) {
        const double ph = 2.0 * kPi * c / lat.n_phi;
        nodes.push_back(
            {r * std::sin(th) * std::cos(ph), r * std::sin(th) * std::sin(ph), r * std::cos(th)});
      }
    }
  }
  return hessian_rank_map(sign, nodes, rel_tol);
}

double spectral_lq_norm(const Field& field, double q) {
  if (field.representation() != Representation::spectral) {
    throw ContractError("spectral_lq_norm: spectral field expected");
  }
  const Field phys = transform(field, Direction::inverse);
  const Grid& g = field.grid();
  std::vector<double> mag2(g.size(), 0.0);
  for (int c = 0; c < field.components(); ++c) {
    const auto comp = phys.component(c);
    for (std::size_t m = 0; m < g.size(); ++m) mag2[m] += std::norm(comp[m]);
  }
  if (std::isinf(q)) return std::sqrt(*std::max_element(mag2.begin(), mag2.end()));
  double s = 0.0;
  for (double v : mag2) s += std::pow(v, 0.5 * q);
  const double dx = g.dx();
  return std::pow(s * dx * dx * dx, 1.0 / q);
}

StrichartzResult strichartz_block_norm(const SpectralState& data, int j, double q, double r,
                                       const Params& params, double T, std::size_t samples,
                                       LinearModel model) {
  const bool admissible = q >= 2.0 && r >= 2.0 && 1.0 / q + 1.0 / r <= 0.5 + 1e-15 &&
                          !(std::isinf(q) && r == 2.0);
  if (!admissible) {
    throw DomainError(
        "strichartz_block_norm: (q, r) must satisfy 2 <= q, r, 1/q + 1/r <= 1/2, "
        "(q, r) != (inf, 2)");
  }
  if (!(T > 0.0) || samples < 2) {
    throw ConfigError("strichartz_block_norm: need T > 0 and at least two samples");
  }
  SpectralState state(block_project(data.data(), j), 0.0);
  StrichartzResult out;
  out.initial_l2 = l2_norm_spectral(state.data());
  const double h = T / static_cast<double>(samples - 1);
  const ModePropagator step(data.grid(), params, h, model);
  for (std::size_t k = 0; k < samples; ++k) {
    out.times.push_back(k * h);
    out.lq.push_back(spectral_lq_norm(state.data(), q));
    if (k + 1 < samples) step.apply(state);
  }
  out.value = time_lr_norm(out.times, out.lq, r);
  return out;
}

namespace {

ScalingFit scaling_fit_unchecked(const std::vector<double>& lx, const std::vector<double>& ly) {
  const std::size_t n = lx.size();
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd b(n);
  for (std::size_t k = 0; k < n; ++k) {
    a(k, 0) = lx[k];
    a(k, 1) = 1.0;
    b(k) = ly[k];
  }
  const Eigen::Vector2d c = a.colPivHouseholderQr().solve(b);
  ScalingFit fit;
  fit.slope = c(0);
  fit.intercept = c(1);
  const double mean = b.mean();
  const double ss_tot = (b.array() - mean).square().sum();
  const double ss_res = (a * c - b).squaredNorm();
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res <= 1e-24 ? 1.0 : 0.0);
  return fit;
}

}  // namespace

ScalingFit scaling_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 4) {
    throw DataError("scaling_fit: need at least 4 matched points");
  }
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0) || !(y[k] > 0.0)) throw DataError("scaling_fit: values must be positive");
    lx.push_back(std::log(x[k]));
    ly.push_back(std::log(y[k]));
  }
  return scaling_fit_unchecked(lx, ly);
}

JointFit joint_scaling_fit(const std::vector<std::vector<double>>& x,
                           const std::vector<double>& y) {
  if (x.empty() || x.size() != y.size()) throw DataError("joint_scaling_fit: size mismatch");
  const std::size_t k = x.front().size();
  if (x.size() <= k + 1) throw DataError("joint_scaling_fit: too few sweep points");
  Eigen::MatrixXd a(x.size(), k + 1);
  Eigen::VectorXd b(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != k) throw DataError("joint_scaling_fit: ragged rows");
    for (std::size_t c = 0; c < k; ++c) {
      if (!(x[i][c] > 0.0)) throw DataError("joint_scaling_fit: values must be positive");
      a(i, c) = std::log(x[i][c]);
    }
    a(i, k) = 1.0;
    if (!(y[i] > 0.0)) throw DataError("joint_scaling_fit: values must be positive");
    b(i) = std::log(y[i]);
  }
  const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
  JointFit fit;
  fit.exponents.assign(c.data(), c.data() + k);
  fit.intercept = c(k);
  const double ss_tot = (b.array() - b.mean()).square().sum();
  const double ss_res = (a * c - b).squaredNorm();
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

SpectralState point_mass_data(const Grid& grid, double amplitude) {
  SpectralState s(grid, 0.0);
  for (std::size_t m = 0; m < grid.size(); ++m) {
    if (!grid.is_nyquist(m)) s.a(m) = amplitude;
  }
  return s;
}

}  // namespace rcs
