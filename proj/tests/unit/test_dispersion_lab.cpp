#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "doctest.h"
#include "rcs/dispersion_lab.hpp"
#include "rcs/errors.hpp"

using namespace rcs;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// 4 pi int_{1/2}^{2} r^2 phi_0(r) dr, from 30-digit adaptive quadrature of the
// same bump outside this code base.
constexpr double kBumpMass0 = 12.8140010896271307711577637258;

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

SpectralState random_state(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Field f(g, 4, Representation::physical);
  for (auto& v : f.values()) v = d(rng);
  Field s = transform(f, Direction::forward);
  for (std::size_t m = 0; m < g.size(); ++m) {
    if (g.is_nyquist(m)) {
      for (int c = 0; c < 4; ++c) s(c, m) = 0.0;
    }
  }
  return SpectralState(s, 0.0);
}

}  // namespace

TEST_CASE("bump mass matches the external fixture") {
  for (int j = -3; j <= 3; ++j) {
    CHECK(rel(bump_mass(j), std::ldexp(kBumpMass0, 3 * j)) < 1e-12);
  }
}

TEST_CASE("I_j at t = 0, x = 0 is the integral of phi_j") {
  for (int j : {-2, 0, 2}) {
    for (Sign s : {Sign::plus, Sign::minus}) {
      // Trapezoid error on the bump: 2e-8 at N = 96, 1e-11 at N = 192.
      const Complex v = oscillatory_point(j, s, 0.0, {0.0, 0.0, 0.0}, 192);
      CHECK(rel(v.real(), std::ldexp(kBumpMass0, 3 * j)) < 1e-10);
      const Complex coarse = oscillatory_point(j, s, 0.0, {0.0, 0.0, 0.0});
      CHECK(rel(coarse.real(), std::ldexp(kBumpMass0, 3 * j)) < 1e-7);
      CHECK(std::abs(v.imag()) < 1e-12 * std::abs(v.real()));
    }
  }
  const OscillatoryField f = eval_oscillatory_block(0, Sign::plus, 0.0, 10.0, 64, 64);
  CHECK(rel(f.sup, kBumpMass0) < 1e-6);
}

TEST_CASE("lambda gradient against central differences") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const double h = 1e-6;
  for (int k = 0; k < 200; ++k) {
    const Vec3 xi{u(rng), u(rng), u(rng)};
    for (Sign s : {Sign::plus, Sign::minus}) {
      const Vec3 g = lambda_gradient(xi, s);
      for (int c = 0; c < 3; ++c) {
        Vec3 p = xi, m = xi;
        p[c] += h;
        m[c] -= h;
        const double fd = (lambda_pm(p, s) - lambda_pm(m, s)) / (2.0 * h);
        CHECK(std::abs(g[c] - fd) < 1e-7);
      }
    }
  }
}

TEST_CASE("triangle bound holds on every evaluation") {
  for (int j : {-1, 0, 1}) {
    for (Sign s : {Sign::plus, Sign::minus}) {
      for (double t : {0.5, 3.0, 12.0}) {
        const OscillatoryField f = eval_oscillatory_block(j, s, t, 20.0, 64, 64);
        CHECK(f.sup <= bump_mass(j) * (1.0 + 1e-12));
        CHECK(f.sup_in_box <= f.sup);
        CHECK(f.tail_fraction >= 0.0);
      }
    }
  }
}

TEST_CASE("scaled and unscaled quadrature paths agree") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ut(-20.0, 20.0), ux(-6.0, 6.0);
  for (int k = 0; k < 10; ++k) {
    const int j = (k % 5) - 2;
    const Sign s = k % 2 == 0 ? Sign::plus : Sign::minus;
    const double t = ut(rng);
    const Vec3 x{ux(rng), ux(rng), ux(rng)};
    const Complex a = oscillatory_point(j, s, t, x);
    const Complex b = oscillatory_point_scaled(j, s, t, x);
    CHECK(std::abs(a - b) <= 1e-8 * std::max(std::abs(a), 1e-3 * bump_mass(j)));
  }
}

TEST_CASE("time reversal leaves the sup unchanged") {
  for (Sign s : {Sign::plus, Sign::minus}) {
    for (double t : {2.0, 7.5}) {
      const double fwd = eval_oscillatory_block(0, s, t, 20.0, 64, 64).sup;
      const double bwd = eval_oscillatory_block(0, s, -t, 20.0, 64, 64).sup;
      CHECK(rel(bwd, fwd) < 1e-8);
    }
  }
}

TEST_CASE("box quadrature self-converges under N -> 2N") {
  for (Sign s : {Sign::plus, Sign::minus}) {
    const double a = eval_oscillatory_block(0, s, 5.0, 20.0, 48, 48).sup;
    const double b = eval_oscillatory_block(0, s, 5.0, 20.0, 96, 96).sup;
    CHECK(rel(a, b) < 0.01);
  }
}

TEST_CASE("axisymmetric sup agrees with direct box quadrature") {
  for (int j : {-1, 0, 1}) {
    for (Sign s : {Sign::plus, Sign::minus}) {
      const double t = 5.0 / decay_clock(j, 1.0);
      const AxisymmetricSup ax = axisymmetric_sup(j, s, t);
      CHECK(ax.tail_fraction < 0.005);
      CHECK(ax.sup <= bump_mass(j) * (1.0 + 1e-10));
      const Complex direct = oscillatory_point(j, s, t, {ax.r_at, 0.0, ax.x3_at}, 128);
      CHECK(rel(std::abs(direct), ax.sup) < 1e-6);
      // Rotating the argmax about the x3 axis leaves the value unchanged up to
      // the quadrature error of the cubic lattice.
      const double c = std::cos(0.7) * ax.r_at, d = std::sin(0.7) * ax.r_at;
      const Complex turned = oscillatory_point(j, s, t, {c, d, ax.x3_at}, 128);
      CHECK(std::abs(turned - direct) < 1e-6 * ax.sup);
      const AxisymmetricSup fine = axisymmetric_sup(j, s, t, 2.0);
      CHECK(rel(fine.sup, ax.sup) < 0.01);
    }
  }
}

TEST_CASE("box evaluation reports the resolution it needs") {
  try {
    (void)eval_oscillatory_block(0, Sign::plus, 1.0, 5.0, 16, 16);
    FAIL("expected ResolutionError");
  } catch (const ResolutionError& e) {
    CHECK(e.required_n() >= 22);
  }
  try {
    (void)eval_oscillatory_block(0, Sign::plus, 1.0, 200.0, 64, 64);
    FAIL("expected ResolutionError");
  } catch (const ResolutionError& e) {
    // x_extent <= pi N / (2 L) with L = 2.
    CHECK(e.required_n() * kPi / 4.0 >= 200.0);
  }
}

TEST_CASE("decay clock and fit window") {
  CHECK(decay_clock(-2, 64.0) == doctest::Approx(1.0));
  CHECK(decay_clock(1, 3.0) == 3.0);
  CHECK_THROWS_AS(sup_decay_fit(0, Sign::plus, {1.0, 4.0}, 5), InsufficientDataError);
  CHECK_THROWS_AS(sup_decay_fit(-1, Sign::minus, {8.0, 60.0}, 6), InsufficientDataError);
}

TEST_CASE("decay fit on a cheap window") {
  const DecayFit fit = sup_decay_fit(-1, Sign::minus, {40.0, 160.0}, 4, true);
  REQUIRE(fit.samples.size() == 4);
  for (std::size_t k = 1; k < fit.samples.size(); ++k) {
    CHECK(fit.samples[k].first > fit.samples[k - 1].first);
  }
  CHECK(std::isfinite(fit.exponent));
  CHECK(fit.exponent < -0.5);
  CHECK(fit.prefactor > 0.0);
  CHECK(fit.residual >= 0.0);
  CHECK(fit.tail_fraction < 0.02);
  CHECK(fit.self_convergence >= 0.0);
  CHECK(fit.self_convergence < 0.01);
  const auto js = to_json(fit);
  CHECK(js.at("j").get<int>() == -1);
  CHECK(js.at("samples").size() == 4);
}

TEST_CASE("Hessian rank maps") {
  SUBCASE("plus sign on the annulus has rank at least two") {
    const RankMap map = hessian_rank_map(Sign::plus, ShellLattice{});
    CHECK(map.histogram[0] == 0);
    CHECK(map.histogram[1] == 0);
    CHECK(map.histogram[2] + map.histogram[3] == static_cast<int>(map.nodes.size()));
  }
  SUBCASE("minus sign on the plane xi3 = 0 has rank two and zero determinant") {
    std::vector<Vec3> nodes;
    for (double r : {0.3, 1.0, 2.5}) {
      for (int k = 0; k < 8; ++k) {
        nodes.push_back({r * std::cos(0.8 * k), r * std::sin(0.8 * k), 0.0});
      }
    }
    const RankMap map = hessian_rank_map(Sign::minus, nodes);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      CHECK(map.ranks[k] == 2);
      CHECK(std::abs(map.dets[k]) < 1e-12);
    }
  }
  SUBCASE("minus sign on the axis has rank two") {
    const std::vector<Vec3> nodes{{0, 0, 0.3}, {0, 0, -0.7}, {0, 0, 1.5}, {0, 0, -3.0}};
    const RankMap map = hessian_rank_map(Sign::minus, nodes);
    for (int r : map.ranks) CHECK(r == 2);
  }
  SUBCASE("nodes at the singular points are skipped") {
    const std::vector<Vec3> nodes{{0, 0, 1.0}, {0, 0, -1.0}, {0.0005, 0, 1.0}, {0.5, 0, 1.0}};
    const RankMap map = hessian_rank_map(Sign::plus, nodes);
    CHECK(map.skipped == 3);
    CHECK(map.nodes.size() == 1);
  }
}

TEST_CASE("spectral L^q norm of a constant") {
  const Grid g(8, 2.0 * kPi * 2.0);
  Field f(g, 1, Representation::spectral);
  f(0, 0) = 3.0;
  CHECK(spectral_lq_norm(f, 2.0) == doctest::Approx(3.0 * std::sqrt(g.volume())).epsilon(1e-12));
  CHECK(spectral_lq_norm(f, 4.0) == doctest::Approx(3.0 * std::pow(g.volume(), 0.25)).epsilon(1e-12));
  CHECK(spectral_lq_norm(f, kInf) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("Strichartz block norm") {
  const Grid g(16, 2.0 * kPi * 4.0);
  const SpectralState data = random_state(g, 21);
  const Params p = Params::rescaled(0.3, 0.1, 5.0);

  SUBCASE("(2, inf) inviscid equals the L2 norm of the block") {
    const StrichartzResult r = strichartz_block_norm(data, 0, 2.0, kInf, p, 1.0, 11);
    CHECK(rel(r.value, r.initial_l2) < 1e-10);
    for (double v : r.lq) CHECK(rel(v, r.initial_l2) < 1e-10);
    CHECK(r.times.size() == 11);
  }
  SUBCASE("doubling the data doubles the norm") {
    Field twice = data.data();
    for (auto& v : twice.values()) v *= 2.0;
    const SpectralState d2(twice, 0.0);
    for (LinearModel m : {LinearModel::inviscid, LinearModel::viscous}) {
      const double a = strichartz_block_norm(data, -1, 4.0, 4.0, p, 0.5, 9, m).value;
      const double b = strichartz_block_norm(d2, -1, 4.0, 4.0, p, 0.5, 9, m).value;
      CHECK(rel(b, 2.0 * a) < 1e-12);
    }
  }
  SUBCASE("viscous evolution does not raise the L2 level") {
    const StrichartzResult r =
        strichartz_block_norm(data, 0, 2.0, kInf, p, 1.0, 11, LinearModel::viscous);
    CHECK(r.value <= r.initial_l2 * (1.0 + 1e-12));
    CHECK(r.lq.back() < r.lq.front());
  }
  SUBCASE("inadmissible exponents are rejected") {
    CHECK_THROWS_AS(strichartz_block_norm(data, 0, 4.0, 2.0, p, 1.0, 5), DomainError);
    CHECK_THROWS_AS(strichartz_block_norm(data, 0, kInf, 2.0, p, 1.0, 5), DomainError);
    CHECK_THROWS_AS(strichartz_block_norm(data, 0, 1.5, kInf, p, 1.0, 5), DomainError);
    CHECK_NOTHROW(strichartz_block_norm(data, 0, kInf, 4.0, p, 1.0, 5));
  }
}

TEST_CASE("point mass data") {
  const Grid g(8, 10.0);
  const SpectralState s = point_mass_data(g, 2.0);
  for (std::size_t m = 0; m < g.size(); ++m) {
    CHECK(s.a(m) == Complex(g.is_nyquist(m) ? 0.0 : 2.0));
    for (int c = 0; c < 3; ++c) CHECK(s.u(c, m) == Complex(0.0));
  }
}

TEST_CASE("scaling fits") {
  std::vector<double> x{1, 2, 4, 8, 16, 32};
  SUBCASE("exact power law") {
    std::vector<double> y;
    for (double v : x) y.push_back(std::pow(v, -2.0));
    const ScalingFit f = scaling_fit(x, y);
    CHECK(f.slope == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("constant") {
    const ScalingFit f = scaling_fit(x, std::vector<double>(x.size(), 3.5));
    CHECK(std::abs(f.slope) < 1e-12);
    CHECK(f.intercept == doctest::Approx(std::log(3.5)));
  }
  SUBCASE("noisy inverse law") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> noise(-0.05, 0.05);
    std::vector<double> xs, ys;
    for (int k = 0; k < 20; ++k) {
      const double v = std::pow(10.0, 3.0 * k / 19.0);
      xs.push_back(v);
      ys.push_back((1.0 + noise(rng)) / v);
    }
    CHECK(std::abs(scaling_fit(xs, ys).slope + 1.0) < 0.1);
  }
  SUBCASE("bad input") {
    CHECK_THROWS_AS(scaling_fit({1, 2, 3}, {1, 2, 3}), DataError);
    CHECK_THROWS_AS(scaling_fit({1, 2, 3, 4}, {1, 0, 3, 4}), DataError);
  }
  SUBCASE("joint fit recovers two exponents") {
    std::vector<std::vector<double>> pts;
    std::vector<double> y;
    for (double a : {1.0, 2.0, 5.0}) {
      for (double b : {0.1, 0.3}) {
        pts.push_back({a, b});
        y.push_back(7.0 * std::pow(a, 0.5) * std::pow(b, 0.75));
      }
    }
    const JointFit f = joint_scaling_fit(pts, y);
    CHECK(f.exponents[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(f.exponents[1] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(std::log(7.0)).epsilon(1e-12));
  }
}
