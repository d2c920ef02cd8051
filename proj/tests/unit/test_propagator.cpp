#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "doctest.h"
#include "rcs/errors.hpp"
#include "rcs/expm.hpp"
#include "rcs/lp_besov.hpp"
#include "rcs/propagator.hpp"

using namespace rcs;

namespace {

constexpr double kPi = std::numbers::pi;

// Conjugate-symmetric random state from four real random physical fields,
// restricted to |xi| <= cutoff.
SpectralState random_state(const Grid& g, std::uint64_t seed, double cutoff = 1e9) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Field f(g, 4, Representation::physical);
  for (auto& v : f.values()) v = d(rng);
  Field s = transform(f, Direction::forward);
  for (std::size_t m = 0; m < g.size(); ++m) {
    if (g.is_nyquist(m) || g.xi_norm(m) > cutoff) {
      for (int c = 0; c < 4; ++c) s(c, m) = 0.0;
    }
  }
  return SpectralState(s, 0.0);
}

double state_l2(const SpectralState& s) {
  double sum = 0.0;
  for (const auto& v : s.data().values()) sum += std::norm(v);
  return std::sqrt(sum * s.grid().volume());
}

double state_diff(const SpectralState& a, const SpectralState& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data().values().size(); ++i) {
    sum += std::norm(a.data().values()[i] - b.data().values()[i]);
  }
  return std::sqrt(sum * a.grid().volume());
}

}  // namespace

TEST_CASE("Pade exponential against a series oracle") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix4c a;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) a(i, j) = Complex{d(rng), d(rng)} * 0.7;
    // Oracle: Taylor series of exp(a / 64) squared six times.
    const Matrix4c x = a / 64.0;
    Matrix4c term = Matrix4c::Identity(), sum = Matrix4c::Identity();
    for (int k = 1; k < 30; ++k) {
      term = term * x / static_cast<double>(k);
      sum += term;
    }
    for (int k = 0; k < 6; ++k) sum = sum * sum;
    CHECK((expm(a) - sum).norm() <= 1e-12 * sum.norm());
  }
}

TEST_CASE("phi functions from the augmented exponential") {
  const Matrix4c l = Matrix4c::Identity() * Complex{-0.7, 0.4};
  Matrix4c e, p1, p2;
  phi_functions(l, e, p1, p2);
  const Complex z{-0.7, 0.4};
  CHECK(std::abs(e(0, 0) - std::exp(z)) < 1e-14);
  CHECK(std::abs(p1(0, 0) - (std::exp(z) - 1.0) / z) < 1e-14);
  CHECK(std::abs(p2(0, 0) - (std::exp(z) - 1.0 - z) / (z * z)) < 1e-14);
  CHECK(std::abs(p1(0, 1)) < 1e-15);
}

TEST_CASE("scaling transform reproduces the viscous generator at zero viscosity") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> d;
  for (int k = 0; k < 200; ++k) {
    const Vec3 xi{d(rng), d(rng), d(rng)};
    Params p;
    p.mu = 0.0;
    p.mu_prime = 0.0;
    p.eps = std::exp(d(rng));
    p.omega = 3.0 * d(rng);
    const Matrix4c g = scaled_inviscid_generator(xi, p.omega, p.eps);
    CHECK((g + viscous_symbol(xi, p).entries).norm() < 1e-12 * (1.0 + g.norm()));
  }
  // Omega = 0: acoustic generator with no rotation block.
  const Matrix4c g0 = scaled_inviscid_generator({1, 2, 3}, 0.0, 0.5);
  CHECK(g0(1, 2) == Complex{});
  CHECK(g0(0, 3) == Complex{0.0, -6.0});
}

TEST_CASE("inviscid evolution") {
  const Grid g = make_grid(8, 2.0 * kPi * 2.0);
  const SpectralState s0 = random_state(g, 3);
  SUBCASE("t = 0 is the identity") {
    CHECK(state_diff(evolve_inviscid(s0, 0.0, 3.0, 0.2), s0) == 0.0);
  }
  SUBCASE("per-mode unitarity") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> d;
    for (int k = 0; k < 1000; ++k) {
      Params p;
      p.mu = 0.0;
      p.mu_prime = 0.0;
      p.omega = 4.0 * d(rng);
      p.eps = std::exp(d(rng));
      const Matrix4c e = mode_propagator({2 * d(rng), 2 * d(rng), 2 * d(rng)}, 10.0 * d(rng), p,
                                         LinearModel::inviscid);
      Vector4c v;
      for (int i = 0; i < 4; ++i) v(i) = Complex{d(rng), d(rng)};
      CHECK((e * v).norm() == doctest::Approx(v.norm()).epsilon(1e-10));
    }
  }
  SUBCASE("group law") {
    const SpectralState a = evolve_inviscid(evolve_inviscid(s0, 0.7, 5.0, 0.1), 1.9, 5.0, 0.1);
    const SpectralState b = evolve_inviscid(s0, 2.6, 5.0, 0.1);
    CHECK(state_diff(a, b) <= 1e-9 * state_l2(s0));
    CHECK(b.time() == doctest::Approx(2.6));
  }
  SUBCASE("commutes with dyadic blocks") {
    const SpectralState e = evolve_inviscid(s0, 1.3, 2.0, 0.5);
    const Field lhs = block_project(e.data(), -1);
    const SpectralState pre(block_project(s0.data(), -1), 0.0);
    const Field rhs = evolve_inviscid(pre, 1.3, 2.0, 0.5).data();
    double err = 0.0;
    for (std::size_t i = 0; i < lhs.values().size(); ++i)
      err = std::max(err, std::abs(lhs.values()[i] - rhs.values()[i]));
    CHECK(err < 1e-14);
  }
}

TEST_CASE("viscous evolution") {
  const Grid g = make_grid(8, 2.0 * kPi * 2.0);
  const SpectralState s0 = random_state(g, 5);
  SUBCASE("zero viscosity matches the inviscid group") {
    Params p;
    p.mu = 0.0;
    p.mu_prime = 0.0;
    p.omega = 2.5;
    p.eps = 0.3;
    const SpectralState a = evolve_viscous(s0, 1.1, p);
    const SpectralState b = evolve_inviscid(s0, 1.1, p.omega, p.eps);
    CHECK(state_diff(a, b) <= 1e-10 * state_l2(s0));
  }
  SUBCASE("shear mode decays at mu k^2") {
    const Params p = Params::rescaled(0.3, 0.5, 0.0);
    SpectralState s(g, 0.0);
    const std::size_t m = g.flat(3, 0, 0);
    const double k = g.xi(m)[0];
    s.u(1, m) = Complex{0.8, -0.1};
    const double t = 2.0;
    const SpectralState e = evolve_viscous(s, t, p);
    CHECK(std::abs(e.u(1, m) - s.u(1, m) * std::exp(-p.mu * k * k * t)) < 1e-9);
  }
  SUBCASE("energy is nonincreasing and the generator dissipative") {
    const Params p = Params::rescaled(0.2, 0.25, 3.0);
    double prev = state_l2(s0);
    for (double t : {0.1, 0.5, 1.0, 3.0}) {
      const double now = state_l2(evolve_viscous(s0, t, p));
      CHECK(now <= prev * (1.0 + 1e-9));
      prev = now;
    }
    for (std::size_t m = 0; m < g.size(); m += 7) CHECK(dissipativity_margin(g.xi(m), p) >= -1e-10);
  }
  SUBCASE("negative time is rejected") {
    CHECK_THROWS_AS(evolve_viscous(s0, -0.1, Params::rescaled(0.3, 1.0, 1.0)), DomainError);
  }
}

TEST_CASE("non-finite states are classified") {
  const Grid g = make_grid(8, 1.0);
  Field f(g, 4, Representation::spectral);
  f(2, 5) = Complex{std::nan(""), 0.0};
  CHECK_THROWS_AS(SpectralState(f, 0.3), BlowUpError);
}

TEST_CASE("Duhamel integration") {
  // Spacing 0.05 puts k = (2, 0, 1) at the gentle mode xi = (0.1, 0, 0.05).
  const Grid g = make_grid(8, 2.0 * kPi / 0.05);
  const std::size_t m = g.flat(2, 0, 1);
  const Params p = Params::rescaled(0.1, 1.0, 0.2);
  Vector4c f0;
  f0 << Complex{0.3, 0.1}, Complex{-0.2, 0.0}, Complex{0.1, 0.4}, Complex{0.0, -0.3};

  auto make_grid_times = [](double t_end, int steps) {
    std::vector<double> t(steps + 1);
    for (int k = 0; k <= steps; ++k) t[k] = t_end * k / steps;
    return t;
  };

  SUBCASE("zero forcing equals the propagator") {
    const Grid gs = make_grid(8, 2.0 * kPi * 2.0);
    const SpectralState s0 = random_state(gs, 8);
    const auto t = make_grid_times(1.0, 10);
    std::vector<SpectralState> zero(t.size(), SpectralState(gs, 0.0));
    const auto traj = duhamel(s0, zero, t, Params::rescaled(0.3, 0.5, 2.0));
    CHECK(state_diff(traj.back(), evolve_viscous(s0, 1.0, Params::rescaled(0.3, 0.5, 2.0))) <=
          1e-12 * state_l2(s0));
  }

  SUBCASE("constant forcing against the resolvent formula") {
    const auto t = make_grid_times(1.0, 1000);
    SpectralState forcing(g, 0.0);
    forcing.set_mode(m, f0);
    std::vector<SpectralState> fs(t.size(), forcing);
    const auto traj = duhamel(SpectralState(g, 0.0), fs, t, p);
    const Matrix4c mm = viscous_symbol(g.xi(m), p).entries;
    const Matrix4c e = expm(Matrix4c(-1.0 * mm));
    const Vector4c exact = (-mm).partialPivLu().solve((e - Matrix4c::Identity()) * f0);
    CHECK((traj.back().mode(m) - exact).norm() <= 1e-8);
  }

  SUBCASE("second-order self-convergence") {
    auto run = [&](int steps) {
      const auto t = make_grid_times(2.0, steps);
      std::vector<SpectralState> fs;
      for (double tk : t) {
        SpectralState f(g, tk);
        f.set_mode(m, f0 * std::cos(3.0 * tk));
        fs.push_back(f);
      }
      SpectralState s0(g, 0.0);
      s0.set_mode(m, Vector4c::Constant(Complex{0.2, 0.0}));
      return duhamel(s0, fs, t, p).back().mode(m);
    };
    const Vector4c coarse = run(20), mid = run(40), fine = run(80), ref = run(5120);
    const double e1 = (coarse - ref).norm(), e2 = (mid - ref).norm(), e3 = (fine - ref).norm();
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.2));
    CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.2));
  }

  SUBCASE("mismatched grids") {
    std::vector<double> t{0.0, 0.1};
    std::vector<SpectralState> fs(3, SpectralState(g, 0.0));
    CHECK_THROWS_AS(duhamel(SpectralState(g, 0.0), fs, t, p), ContractError);
  }
}

TEST_CASE("effective velocity") {
  const Grid g = make_grid(8, 2.0 * kPi * 2.0);
  SpectralState s = random_state(g, 9);
  SUBCASE("no density leaves u unchanged") {
    for (std::size_t m = 0; m < g.size(); ++m) s.a(m) = 0.0;
    const Field w = effective_velocity(s, 0.3);
    const Field u = s.velocity();
    for (std::size_t i = 0; i < w.values().size(); ++i) CHECK(w.values()[i] == u.values()[i]);
  }
  SUBCASE("divergence of the correction is -a / eps") {
    SpectralState d(g, 0.0);
    const std::size_t m = g.flat(1, 3, 6);
    d.a(m) = Complex{0.4, -0.9};
    const double eps = 0.3;
    const Field w = effective_velocity(d, eps);
    const Vec3 xi = g.xi(m);
    Complex div{};
    for (int c = 0; c < 3; ++c) div += Complex{0.0, xi[c]} * w(c, m);
    CHECK(std::abs(div + d.a(m) / eps) < 1e-14);
  }
}

TEST_CASE("V_j sandwich with the chosen delta") {
  const Grid g = make_grid(32, 2.0 * kPi * 8.0);
  for (double eps : {1.0, 0.25, 0.0625}) {
    const double beta0 = 4.0;
    const double delta = choose_delta(0.3, beta0);
    CHECK(2.0 * delta * beta0 <= 0.5);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const SpectralState s = random_state(g, seed);
      const DyadicDecomposition dy(g);
      for (int j = dy.j_min(); j <= dy.j_max(); ++j) {
        if (std::ldexp(1.0, j) > beta0 / eps) continue;
        const double e = block_energy(s, j);
        const double ratio = vj_squared(s, j, eps, delta) / e;
        CHECK(ratio >= 0.5);
        CHECK(ratio <= 1.5);
      }
    }
    // Worst case: u aligned with eps grad a saturates the bound.
    SpectralState w(g, 0.0);
    const std::size_t m = g.flat(12, 0, 0);  // |xi| = 1.5
    const double xi1 = g.xi(m)[0];
    w.a(m) = 1.0;
    w.u(0, m) = Complex{0.0, 1.0};
    w.a(g.conjugate_index(m)) = 1.0;
    w.u(0, g.conjugate_index(m)) = Complex{0.0, -1.0};
    const double ratio = vj_squared(w, 0, 1.0, delta) / block_energy(w, 0);
    CHECK(ratio == doctest::Approx(1.0 + delta * xi1).epsilon(1e-12));
  }
}

TEST_CASE("beta0 calibration") {
  const Params p = Params::rescaled(0.5, 0.1, 5.0);
  const Beta0Calibration c = calibrate_beta0(p);
  CHECK(c.calibrated);
  CHECK(c.worst_relative_error <= 0.25);
  // Every sampled mode above the threshold relaxes near 1 / eps^2.
  for (double r : {1.0, 3.0, 10.0, 100.0}) {
    const double x = c.beta0 * r / p.eps;
    CHECK(std::abs(slow_density_rate({x, 0.0, 0.0}, p) * p.eps * p.eps - 1.0) <= 0.25);
  }
  CHECK(choose_delta(0.5, c.beta0) > 0.0);
}

TEST_CASE("trajectory snapshots and index") {
  const Grid g = make_grid(8, 3.0);
  std::vector<SpectralState> states{random_state(g, 1), random_state(g, 2)};
  states[1].set_time(0.5);
  const auto dir = std::filesystem::temp_directory_path() / "rcs_traj_test";
  std::filesystem::remove_all(dir);
  const auto files = write_trajectory(dir.string(), states, Params::rescaled(0.3, 0.5, 1.0));
  REQUIRE(files.size() == 3);
  const Field back = read_snapshot(files[1]);
  CHECK(back.components() == 4);
  CHECK(back.values()[17] == states[1].data().values()[17]);
  std::filesystem::remove_all(dir);
}
