#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>

#include "doctest.h"
#include "rcs/errors.hpp"
#include "rcs/nsc_solver.hpp"

using namespace rcs;

namespace {

constexpr double kPi = std::numbers::pi;

using Profile = std::function<std::array<double, 4>(const Vec3&)>;

SpectralState from_physical(const Grid& g, const Profile& f, double t = 0.0) {
  Field phys(g, 4, Representation::physical);
  for (std::size_t m = 0; m < g.size(); ++m) {
    const auto v = f(g.x(m));
    for (int c = 0; c < 4; ++c) phys(c, m) = v[c];
  }
  Field s = transform(phys, Direction::forward);
  for (std::size_t m = 0; m < g.size(); ++m) {
    if (g.is_nyquist(m)) {
      for (int c = 0; c < 4; ++c) s(c, m) = 0.0;
    }
  }
  return SpectralState(s, t);
}

double diff_l2(const SpectralState& a, const SpectralState& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data().values().size(); ++i) {
    sum += std::norm(a.data().values()[i] - b.data().values()[i]);
  }
  return std::sqrt(sum * a.grid().volume());
}

double l2(const SpectralState& a) { return l2_norm_spectral(a.data()); }

SimulationConfig small_config() {
  SimulationConfig c;
  c.n = 16;
  c.period = 2.0 * kPi;
  c.params = Params::rescaled(0.3, 0.5, 1.0);
  c.ic.profile = "taylor_green";
  c.ic.amplitude = 0.2;
  c.ic.k0 = 1;
  c.ic.bump_width = 0.15;
  c.T = 0.2;
  c.dt = 0.01;
  c.monitor_every = 2;
  c.beta0 = 4.0;
  return c;
}

}  // namespace

TEST_CASE("nonlinearity of the zero state vanishes") {
  const Grid g(16, 2.0 * kPi);
  const SpectralState z(g);
  const SpectralState n = nonlinearity(z, Params::rescaled(0.3, 0.1, 2.0));
  CHECK(l2(n) == 0.0);
}

TEST_CASE("quadratic pressure law has K identically zero") {
  const Params p = Params::rescaled(0.3, 0.1, 2.0, 2.0);
  for (double a : {-0.4, -0.1, 0.0, 0.3, 2.0}) CHECK(p.K(a) == 0.0);
  // With u = 0 and gamma = 2 the whole right-hand side vanishes.
  const Grid g(16, 2.0 * kPi);
  const SpectralState s =
      from_physical(g, [](const Vec3& x) -> std::array<double, 4> {
        return {0.3 * std::cos(2.0 * x[0]) + 0.1 * std::sin(x[1] + x[2]), 0.0, 0.0, 0.0};
      });
  CHECK(l2(nonlinearity(s, p)) < 1e-14);
}

TEST_CASE("pressure term against direct evaluation on a finer grid") {
  for (double gamma : {3.0, 4.0}) {
    const Params p = Params::rescaled(0.3, 0.2, 1.0, gamma);
    auto a_of = [](const Vec3& x) { return 0.4 * std::cos(2.0 * x[0] + x[2]); };
    const Grid g(32, 2.0 * kPi);
    const SpectralState s = from_physical(g, [&](const Vec3& x) -> std::array<double, 4> {
      return {a_of(x), 0.0, 0.0, 0.0};
    });
    const SpectralState n = nonlinearity(s, p);

    // Oracle: -eps^-1 K(eps a) grad a sampled on a 64^3 grid from the closed form.
    const Grid fine(64, 2.0 * kPi);
    Field phys(fine, 3, Representation::physical);
    for (std::size_t m = 0; m < fine.size(); ++m) {
      const Vec3 x = fine.x(m);
      const double a = a_of(x);
      const double da = -0.4 * std::sin(2.0 * x[0] + x[2]);
      const double k = p.K(p.eps * a) / p.eps;
      phys(0, m) = -k * 2.0 * da;
      phys(1, m) = 0.0;
      phys(2, m) = -k * da;
    }
    const Field oracle = transform(phys, Direction::forward);
    double err = 0.0, ref = 0.0;
    for (std::size_t m = 0; m < g.size(); ++m) {
      if (is_dealiased_out(g, m) || g.is_nyquist(m)) continue;
      const auto k = g.integer_wavenumber(m);
      const std::size_t mf = fine.flat((k[0] + 64) % 64, (k[1] + 64) % 64, (k[2] + 64) % 64);
      for (int c = 0; c < 3; ++c) {
        err = std::max(err, std::abs(n.u(c, m) - oracle(c, mf)));
        ref = std::max(ref, std::abs(oracle(c, mf)));
      }
    }
    CHECK(err < 1e-8 * ref);
    CHECK(ref > 1e-3);
  }
}

TEST_CASE("advection and continuity terms on a shear flow") {
  // u = (U sin y, 0, 0), a = A cos x: (u.grad)u = 0 and
  // -div(a u) = A U sin x sin y.
  const Grid g(16, 2.0 * kPi);
  const double A = 0.2, U = 0.3;
  const Params p = Params::rescaled(0.4, 0.5, 1.0);
  const SpectralState s = from_physical(g, [&](const Vec3& x) -> std::array<double, 4> {
    return {A * std::cos(x[0]), U * std::sin(x[1]), 0.0, 0.0};
  });
  const SpectralState n = nonlinearity(s, p);
  // J(eps a) L u with L u = -mu U sin y e_1.
  const SpectralState expect = from_physical(g, [&](const Vec3& x) -> std::array<double, 4> {
    const double ea = p.eps * A * std::cos(x[0]);
    const double jv = ea / (1.0 + ea);
    return {A * U * std::sin(x[0]) * std::sin(x[1]), jv * p.mu * U * std::sin(x[1]), 0.0, 0.0};
  });
  // J has infinite spectrum; compare on the low modes where dealiasing keeps it.
  double err = 0.0;
  for (std::size_t m = 0; m < g.size(); ++m) {
    const auto k = g.integer_wavenumber(m);
    if (std::abs(k[0]) > 2 || std::abs(k[1]) > 2 || std::abs(k[2]) > 2) continue;
    for (int c = 0; c < 4; ++c) err = std::max(err, std::abs(n.data()(c, m) - expect.data()(c, m)));
  }
  CHECK(err < 1e-6);
  CHECK(std::abs(n.a(g.flat(1, 1, 0)) - Complex(-A * U / 4.0, 0.0)) < 1e-14);
}

TEST_CASE("vacuum proximity raises a model breakdown") {
  const Grid g(16, 2.0 * kPi);
  const Params p = Params::rescaled(0.3, 0.5, 1.0);
  const SpectralState s = from_physical(g, [](const Vec3& x) -> std::array<double, 4> {
    return {-1.2 + 0.1 * std::cos(x[0]), 0.0, 0.0, 0.0};
  });
  CHECK_THROWS_AS(nonlinearity(s, p), ModelBreakdownError);
}

TEST_CASE("initial data validation") {
  SimulationConfig c = small_config();
  c.ic.amplitude = -5.0;
  CHECK_THROWS_AS(make_initial_data(c), ConfigError);
  c = small_config();
  c.ic.profile = "random_band";
  c.ic.j_lo = 0;
  c.ic.j_hi = 1;
  c.ic.amplitude = 0.3;
  const SpectralState s = make_initial_data(c);
  const Field phys = transform(s.data(), Direction::inverse);
  double peak = 0.0;
  for (const auto& v : phys.values()) peak = std::max(peak, std::abs(v.real()));
  CHECK(peak == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(conjugate_symmetry_defect(s.data()) < 1e-12);
  for (std::size_t m = 0; m < s.grid().size(); ++m) {
    if (is_dealiased_out(s.grid(), m)) CHECK(std::abs(s.a(m)) == 0.0);
  }
  // The same seed reproduces the same data.
  CHECK(diff_l2(s, make_initial_data(c)) == 0.0);
}

TEST_CASE("config validation and JSON round trip") {
  SimulationConfig c = small_config();
  c.validate();
  const SimulationConfig back = config_from_json(to_json(c));
  CHECK(back.n == c.n);
  CHECK(back.dt == c.dt);
  CHECK(back.params.mu == c.params.mu);
  CHECK(back.params.eps == c.params.eps);
  CHECK(back.ic.profile == c.ic.profile);
  CHECK(back.beta0 == c.beta0);
  SimulationConfig bad = c;
  bad.dt = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.T = 0.5 * c.dt;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.alpha = 100.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"grid", {{"n", "x"}}}}), ConfigError);
}

TEST_CASE("linearized ETD step equals the exact viscous evolution") {
  const SimulationConfig c = small_config();
  const SpectralState s0 = make_initial_data(c);
  const EtdStepper lin(s0.grid(), c.params, 0.05, LinearModel::viscous, true);
  SpectralState s = s0;
  for (int k = 0; k < 4; ++k) {
    const SpectralState next = lin.step(s);
    const SpectralState exact = evolve_viscous(s, 0.05, c.params);
    CHECK(diff_l2(next, exact) <= 1e-10 * l2(exact));
    s = next;
  }
}

TEST_CASE("ETDRK2 converges at second order") {
  SimulationConfig c = small_config();
  c.ic.amplitude = 0.3;
  const SpectralState s0 = make_initial_data(c);
  auto run = [&](int steps) {
    const EtdStepper st(s0.grid(), c.params, c.T / steps);
    SpectralState s = s0;
    for (int k = 0; k < steps; ++k) s = st.step(s);
    return s;
  };
  const SpectralState ref = run(640);
  const double e1 = diff_l2(run(10), ref);
  const double e2 = diff_l2(run(20), ref);
  const double e3 = diff_l2(run(40), ref);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.25));
  CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("manufactured solution converges at second order") {
  const Grid g(16, 2.0 * kPi);
  const Params p = Params::rescaled(0.3, 0.5, 1.5, 3.0);
  const double A = 0.2;
  auto exact = [&](double t) {
    return from_physical(
        g,
        [&](const Vec3& x) -> std::array<double, 4> {
          return {A * std::exp(-t) * std::cos(x[0]), A * std::sin(t) * std::sin(x[1]), 0.0,
                  A * std::cos(x[2] + t)};
        },
        t);
  };
  auto exact_dt = [&](double t) {
    return from_physical(g, [&](const Vec3& x) -> std::array<double, 4> {
      return {-A * std::exp(-t) * std::cos(x[0]), A * std::cos(t) * std::sin(x[1]), 0.0,
              -A * std::sin(x[2] + t)};
    });
  };
  // F = dU/dt - G U - N(U).
  const Forcing forcing = [&](double t) {
    const SpectralState u = exact(t);
    SpectralState f = exact_dt(t);
    const SpectralState n = nonlinearity(u, p);
    for (std::size_t m = 0; m < g.size(); ++m) {
      if (g.is_nyquist(m)) continue;
      const Vector4c gu = linear_generator(g.xi(m), p, LinearModel::viscous) * u.mode(m);
      f.set_mode(m, f.mode(m) - gu - n.mode(m));
    }
    return f;
  };
  const double T = 0.5;
  auto run = [&](int steps) {
    const EtdStepper st(g, p, T / steps);
    SpectralState s = exact(0.0);
    for (int k = 0; k < steps; ++k) s = st.step(s, forcing);
    return diff_l2(s, exact(T));
  };
  const double e1 = run(8), e2 = run(16), e3 = run(32);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.25));
  CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.25));
  CHECK(e3 < 1e-4 * l2(exact(T)));
}

TEST_CASE("mass is conserved and non-finite states are caught") {
  SimulationConfig c = small_config();
  c.ic.amplitude = 0.3;
  const SpectralState s0 = make_initial_data(c);
  const EtdStepper st(s0.grid(), c.params, 0.01);
  SpectralState s = s0;
  for (int k = 0; k < 20; ++k) s = st.step(s);
  CHECK(std::abs(s.a(0) - s0.a(0)) <= 1e-10 * std::abs(s0.a(0)));

  Field bad = s0.data();
  bad(1, 3) = Complex(std::nan(""), 0.0);
  CHECK_THROWS_AS(SpectralState(bad, 0.0), BlowUpError);
}

TEST_CASE("Omega = 0 preserves xi3-independence") {
  const Grid g(16, 2.0 * kPi);
  const Params p = Params::rescaled(0.3, 0.5, 0.0);
  const SpectralState s0 = from_physical(g, [](const Vec3& x) -> std::array<double, 4> {
    return {0.2 * std::cos(x[0] + x[1]), 0.1 * std::sin(x[1]), 0.15 * std::cos(x[0]),
            0.1 * std::sin(x[0] - x[1])};
  });
  const EtdStepper st(g, p, 0.01);
  SpectralState s = s0;
  for (int k = 0; k < 20; ++k) s = st.step(s);
  double off = 0.0, total = 0.0;
  for (std::size_t m = 0; m < g.size(); ++m) {
    for (int c = 0; c < 4; ++c) {
      total += std::norm(s.data()(c, m));
      if (g.integer_wavenumber(m)[2] != 0) off += std::norm(s.data()(c, m));
    }
  }
  CHECK(std::sqrt(off / total) < 1e-9);
}

TEST_CASE("stability guard") {
  const Grid g(16, 2.0 * kPi);
  const Params p = Params::rescaled(0.3, 0.5, 1.0);
  CHECK(std::isinf(stability_limit(SpectralState(g), p)));
  const SimulationConfig c = small_config();
  const SpectralState s = make_initial_data(c);
  const double lim = stability_limit(s, c.params);
  Field twice = s.data();
  twice *= 2.0;
  CHECK(stability_limit(SpectralState(twice, 0.0), c.params) < lim);
  SimulationConfig fast = c;
  fast.dt = 2.0 * lim;
  fast.T = 4.0 * lim;
  CHECK_THROWS_AS(simulate(fast), ConfigError);
}

TEST_CASE("cumulative integral is exact for cubics") {
  std::vector<double> t, v;
  for (int k = 0; k <= 10; ++k) {
    const double x = 0.1 * k;
    t.push_back(x);
    v.push_back(1.0 - 2.0 * x + 3.0 * x * x - 4.0 * x * x * x);
  }
  const auto c = cumulative_integral(t, v);
  for (int k = 0; k <= 10; ++k) {
    const double x = t[k];
    CHECK(c[k] == doctest::Approx(x - x * x + x * x * x - x * x * x * x).epsilon(1e-12));
  }
}

TEST_CASE("norm framework") {
  const SimulationConfig c = small_config();
  const SpectralState s0 = make_initial_data(c);
  const NormParams np{c.params.eps, c.alpha, c.beta0, c.q, c.r};
  const DyadicDecomposition dyadic(s0.grid());
  const ModePropagator prop(s0.grid(), c.params, 0.05, LinearModel::viscous);

  auto build = [&](double scale) {
    Field d = s0.data();
    d *= scale;
    SpectralState s(d, 0.0);
    TrajectoryLedger led(c.q);
    std::vector<SpectralState> traj;
    for (int k = 0; k < 6; ++k) {
      led.append(s, dyadic);
      traj.push_back(s);
      prop.apply(s);
    }
    return std::make_pair(led, traj);
  };

  SUBCASE("zero state gives zero norms") {
    const auto [led, traj] = build(0.0);
    const NormFramework nf = norms_framework(led, np);
    CHECK(nf.e_eps == 0.0);
    CHECK(nf.a_qr == 0.0);
    CHECK(nf.calA == 0.0);
    CHECK(data_norm(traj.front(), np) == 0.0);
  }
  SUBCASE("calA with E = 0 equals A") { CHECK(auxiliary_norm(0.0, 2.5, np) == 2.5); }
  SUBCASE("homogeneity of degree one") {
    const auto [l1, t1] = build(1.0);
    const auto [l2_, t2] = build(2.0);
    const NormFramework a = norms_framework(l1, np), b = norms_framework(l2_, np);
    CHECK(b.e_eps == doctest::Approx(2.0 * a.e_eps).epsilon(1e-12));
    CHECK(b.a_qr == doctest::Approx(2.0 * a.a_qr).epsilon(1e-12));
    CHECK(b.calA == doctest::Approx(2.0 * a.calA).epsilon(1e-12));
    CHECK(data_norm(t2.front(), np) == doctest::Approx(2.0 * data_norm(t1.front(), np)));
  }
  SUBCASE("ledger and direct Chemin-Lerner calls agree") {
    const auto [led, traj] = build(1.0);
    std::vector<double> times;
    std::vector<Field> a, u;
    for (const auto& s : traj) {
      times.push_back(s.time());
      a.push_back(s.density());
      u.push_back(s.velocity());
    }
    const double cut = np.beta0 / np.eps;
    const Band low = Band::low(cut), high = Band::high(cut);
    const double e_direct =
        chemin_lerner_norm(times, a, kInf, 0.5, 2.0, 1.0, low, true).value +
        chemin_lerner_norm(times, u, kInf, 0.5, 2.0, 1.0, low, true).value +
        chemin_lerner_norm(times, a, 1.0, 2.5, 2.0, 1.0, low, true).value +
        chemin_lerner_norm(times, u, 1.0, 2.5, 2.0, 1.0, low, true).value +
        np.eps * chemin_lerner_norm(times, a, kInf, 1.5, 2.0, 1.0, high, false).value +
        chemin_lerner_norm(times, a, 1.0, 1.5, 2.0, 1.0, high, true).value / np.eps +
        chemin_lerner_norm(times, u, kInf, 0.5, 2.0, 1.0, high, false).value +
        chemin_lerner_norm(times, u, 1.0, 2.5, 2.0, 1.0, high, true).value;
    const NormFramework nf = norms_framework(led, np);
    CHECK(std::abs(nf.e_eps - e_direct) <= 1e-12 * e_direct);

    const Band lowa = Band::low(np.alpha), mid = Band::mid(np.alpha, cut);
    const double q = np.q;
    const double s_low = 3.0 / q - 1.0 + 2.0 / np.r;
    double a_direct = 0.0;
    for (const auto* f : {&a, &u}) {
      a_direct += chemin_lerner_norm(times, *f, np.r, s_low, q, 1.0, lowa, false).value +
                  chemin_lerner_norm(times, *f, kInf, 3.0 / q - 1.0, q, 1.0, mid, false).value +
                  chemin_lerner_norm(times, *f, 1.0, 3.0 / q + 1.0, q, 1.0, mid, true).value;
    }
    a_direct += np.eps * chemin_lerner_norm(times, a, kInf, 3.0 / q, q, 1.0, high, false).value +
                chemin_lerner_norm(times, a, 1.0, 3.0 / q, q, 1.0, high, true).value / np.eps +
                chemin_lerner_norm(times, u, kInf, 3.0 / q - 1.0, q, 1.0, high, false).value +
                chemin_lerner_norm(times, u, 1.0, 3.0 / q + 1.0, q, 1.0, high, true).value;
    CHECK(std::abs(nf.a_qr - a_direct) <= 1e-12 * a_direct);
    CHECK(nf.a_qr > 0.0);
  }
  SUBCASE("inconsistent cutoffs") {
    NormParams bad = np;
    bad.alpha = 2.0 * bad.beta0 / bad.eps;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }
}

TEST_CASE("energy monitors on a linear run") {
  SimulationConfig c = small_config();
  c.params = Params::rescaled(0.3, 0.5, 1.0);
  c.ic.profile = "random_band";
  c.ic.j_lo = 0;
  c.ic.j_hi = 2;
  const SpectralState s0 = make_initial_data(c);
  const double h = 0.002;
  const ModePropagator prop(s0.grid(), c.params, h, LinearModel::viscous);
  std::vector<SpectralState> traj{s0};
  for (int k = 0; k < 250; ++k) {
    SpectralState s = traj.back();
    prop.apply(s);
    traj.push_back(s);
  }
  const double delta = choose_delta(c.params.mu, c.beta0);
  const EnergyReport rep = energy_monitors(traj, {}, c.params, delta, c.beta0);
  REQUIRE(!rep.blocks.empty());
  for (const auto& b : rep.blocks) {
    CHECK(b.identity_residual <= 1e-6);
    CHECK(b.inequality_slack <= 0.0);
    if (b.band == "mid") {
      CHECK(b.vj_min >= 0.5);
      CHECK(b.vj_max <= 1.5);
    }
  }
}

TEST_CASE("simulation driver") {
  const auto dir = std::filesystem::temp_directory_path() / "rcs_sim_test";
  std::filesystem::remove_all(dir);
  SimulationConfig c = small_config();
  c.snapshot_every = 5;
  const SimulationResult r = simulate(c, dir.string());
  CHECK(r.classification == Classification::completed);
  CHECK(r.final_time == doctest::Approx(c.T));
  CHECK(r.monitors.records.size() == 11);
  CHECK(r.mass_drift <= 1e-10);
  CHECK(std::filesystem::exists(dir / "monitors.csv"));
  CHECK(std::filesystem::exists(dir / "summary.json"));
  CHECK(std::filesystem::exists(dir / "snapshot_0.rcsf"));
  CHECK(std::filesystem::exists(dir / "snapshot_2.rcsf"));
  const Field snap = read_snapshot((dir / "snapshot_2.rcsf").string());
  CHECK(snap.components() == 4);

  SimulationConfig vac = small_config();
  vac.ic.amplitude = -0.5;
  vac.min_density = 0.99;
  const SimulationResult rv = simulate(vac);
  CHECK(rv.classification == Classification::vacuum);
  CHECK(rv.monitors.records.size() == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("Omega sweep with zero amplitude stays trivial") {
  SimulationConfig c = small_config();
  c.ic.amplitude = 0.0;
  c.T = 0.04;
  const auto rows = omega_sweep(c, {2.0, 4.0});
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.max_calA == 0.0);
    CHECK(!r.blowup);
    CHECK(r.eps == doctest::Approx(1.0 / r.omega));
  }
}
