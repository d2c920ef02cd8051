#include "rcs/nsc_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "rcs/errors.hpp"
#include "rcs/expm.hpp"
#include "rcs/parallel.hpp"

namespace rcs {

namespace {

constexpr Complex I{0.0, 1.0};

void zero_unresolved(Field& f) {
  const Grid& g = f.grid();
  for (std::size_t m = 0; m < g.size(); ++m) {
    if (g.is_nyquist(m) || is_dealiased_out(g, m)) {
      for (int c = 0; c < f.components(); ++c) f(c, m) = 0.0;
    }
  }
}

double max_abs(std::span<const Complex> v) {
  double m = 0.0;
  for (const auto& x : v) m = std::max(m, std::abs(x.real()));
  return m;
}

Field component_field(const SpectralState& s, int first, int count) {
  Field out(s.grid(), count, Representation::spectral);
  for (int c = 0; c < count; ++c) {
    const auto src = s.data().component(first + c);
    std::copy(src.begin(), src.end(), out.component(c).begin());
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void SimulationConfig::validate() const {
  (void)make_grid(n, period);
  params.validate();
  if (!(dt > 0.0)) throw ConfigError("config: dt must be positive");
  if (!(T >= dt)) throw ConfigError("config: T must be at least dt");
  if (monitor_every < 1) throw ConfigError("config: monitor_every must be >= 1");
  if (snapshot_every < 0) throw ConfigError("config: snapshot_every must be >= 0");
  if (!(min_density > 0.0 && min_density < 1.0)) {
    throw ConfigError("config: min_density must lie in (0, 1)");
  }
  if (!(energy_growth > 1.0)) throw ConfigError("config: energy_growth must exceed 1");
  NormParams np{params.eps, alpha, resolved_beta0(), q, r};
  np.validate();
  if (ic.profile != "taylor_green" && ic.profile != "random_band" && ic.profile != "snapshot") {
    throw ConfigError("config: unknown initial data profile '" + ic.profile + "'");
  }
  if (ic.profile == "random_band" && ic.j_hi < ic.j_lo) {
    throw ConfigError("config: random_band needs j_lo <= j_hi");
  }
}

double SimulationConfig::resolved_beta0() const {
  return beta0 > 0.0 ? beta0 : calibrate_beta0(params).beta0;
}

SimulationConfig config_from_json(const nlohmann::json& js) {
  SimulationConfig c;
  try {
    if (js.contains("grid")) {
      const auto& g = js.at("grid");
      c.n = g.value("n", c.n);
      c.period = g.value("period", c.period);
    }
    if (js.contains("params")) {
      const auto& p = js.at("params");
      const double mu = p.value("mu", 0.5);
      c.params = Params::rescaled(mu, p.value("eps", 1.0), p.value("omega", 1.0),
                                  p.value("gamma", 2.0));
      if (p.contains("mu_prime")) c.params.mu_prime = p.at("mu_prime").get<double>();
    }
    if (js.contains("ic")) {
      const auto& i = js.at("ic");
      c.ic.profile = i.value("profile", c.ic.profile);
      c.ic.amplitude = i.value("amplitude", c.ic.amplitude);
      c.ic.seed = i.value("seed", c.ic.seed);
      c.ic.k0 = i.value("k0", c.ic.k0);
      c.ic.bump_width = i.value("bump_width", c.ic.bump_width);
      c.ic.j_lo = i.value("j_lo", c.ic.j_lo);
      c.ic.j_hi = i.value("j_hi", c.ic.j_hi);
      c.ic.s = i.value("s", c.ic.s);
      c.ic.snapshot = i.value("snapshot", c.ic.snapshot);
    }
    if (js.contains("time")) {
      const auto& t = js.at("time");
      c.T = t.value("T", c.T);
      c.dt = t.value("dt", c.dt);
      c.monitor_every = t.value("monitor_every", c.monitor_every);
      c.snapshot_every = t.value("snapshot_every", c.snapshot_every);
    }
    if (js.contains("monitors")) {
      const auto& m = js.at("monitors");
      c.q = m.value("q", c.q);
      c.r = m.value("r", c.r);
      c.alpha = m.value("alpha", c.alpha);
      c.beta0 = m.value("beta0", c.beta0);
      c.min_density = m.value("min_density", c.min_density);
      c.energy_growth = m.value("energy_growth", c.energy_growth);
    }
    c.linear = js.value("linear", c.linear);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

nlohmann::json to_json(const SimulationConfig& c) {
  return {{"grid", {{"n", c.n}, {"period", c.period}}},
          {"params", to_json(c.params)},
          {"ic",
           {{"profile", c.ic.profile},
            {"amplitude", c.ic.amplitude},
            {"seed", c.ic.seed},
            {"k0", c.ic.k0},
            {"bump_width", c.ic.bump_width},
            {"j_lo", c.ic.j_lo},
            {"j_hi", c.ic.j_hi},
            {"s", c.ic.s},
            {"snapshot", c.ic.snapshot}}},
          {"time",
           {{"T", c.T},
            {"dt", c.dt},
            {"monitor_every", c.monitor_every},
            {"snapshot_every", c.snapshot_every}}},
          {"monitors",
           {{"q", c.q},
            {"r", c.r},
            {"alpha", c.alpha},
            {"beta0", c.beta0},
            {"min_density", c.min_density},
            {"energy_growth", c.energy_growth}}},
          {"linear", c.linear}};
}

// ---------------------------------------------------------------------------
// Initial data

namespace {

Field taylor_green(const Grid& g, const InitialDataSpec& ic) {
  Field f(g, 4, Representation::physical);
  const double k = ic.k0 * g.spacing();
  const double c = 0.5 * g.period();
  const double w = ic.bump_width * g.period();
  for (std::size_t m = 0; m < g.size(); ++m) {
    const Vec3 x = g.x(m);
    const double r2 = (x[0] - c) * (x[0] - c) + (x[1] - c) * (x[1] - c) + (x[2] - c) * (x[2] - c);
    f(0, m) = ic.amplitude * std::exp(-r2 / (2.0 * w * w));
    f(1, m) = ic.amplitude * std::sin(k * x[0]) * std::cos(k * x[1]) * std::cos(k * x[2]);
    f(2, m) = -ic.amplitude * std::cos(k * x[0]) * std::sin(k * x[1]) * std::cos(k * x[2]);
    f(3, m) = 0.0;
  }
  return transform(f, Direction::forward);
}

Field random_band(const Grid& g, const InitialDataSpec& ic) {
  std::mt19937_64 rng(ic.seed);
  std::normal_distribution<double> d;
  Field noise(g, 4, Representation::physical);
  for (auto& v : noise.values()) v = d(rng);
  Field s = transform(noise, Direction::forward);
  Field out(g, 4, Representation::spectral);
  for (int j = ic.j_lo; j <= ic.j_hi; ++j) {
    Field block = block_project(s, j);
    const double norm = l2_norm_spectral(block);
    if (norm == 0.0) continue;
    block *= std::exp2(-ic.s * j) / norm;
    out += block;
  }
  zero_unresolved(out);
  // Scale so that the largest pointwise component equals the amplitude.
  Field phys = transform(out, Direction::inverse);
  const double peak = max_abs(phys.values());
  if (peak > 0.0) out *= ic.amplitude / peak;
  return out;
}

}  // namespace

SpectralState make_initial_data(const SimulationConfig& config) {
  const Grid g = make_grid(config.n, config.period);
  Field f(g, 4, Representation::spectral);
  if (config.ic.profile == "taylor_green") {
    f = taylor_green(g, config.ic);
  } else if (config.ic.profile == "random_band") {
    f = random_band(g, config.ic);
  } else if (config.ic.profile == "snapshot") {
    f = read_snapshot(config.ic.snapshot);
    if (!(f.grid() == g) || f.components() != 4) {
      throw ConfigError("initial data: snapshot does not match the configured grid");
    }
    if (f.representation() == Representation::physical) f = transform(f, Direction::forward);
  } else {
    throw ConfigError("initial data: unknown profile '" + config.ic.profile + "'");
  }
  zero_unresolved(f);
  const Field phys = transform(f, Direction::inverse);
  for (const auto& a : phys.component(0)) {
    if (!(1.0 + config.params.eps * a.real() > 0.0)) {
      throw ConfigError("initial data: 1 + eps a0 must be positive at every grid point");
    }
  }
  return SpectralState(std::move(f), 0.0);
}

// ---------------------------------------------------------------------------
// Nonlinearity

SpectralState nonlinearity(const SpectralState& state, const Params& params) {
  const Grid& g = state.grid();
  const std::size_t size = g.size();
  const double eps = params.eps;
  const bool with_k = params.gamma != 2.0;

  // Spectral inputs: a, u (4), grad u (9, index 4 + 3c + d = d_d u_c),
  // L u (3), grad a (3).
  const int comps = with_k ? 19 : 16;
  Field spec(g, comps, Representation::spectral);
  parallel_for(size, [&](std::size_t m) {
    if (g.is_nyquist(m) || is_dealiased_out(g, m)) return;
    const Vec3 xi = g.xi(m);
    const double k2 = norm2(xi);
    const Complex a = state.a(m);
    const Complex u[3] = {state.u(0, m), state.u(1, m), state.u(2, m)};
    const Complex div = I * (xi[0] * u[0] + xi[1] * u[1] + xi[2] * u[2]);
    spec(0, m) = a;
    for (int c = 0; c < 3; ++c) {
      spec(1 + c, m) = u[c];
      for (int d = 0; d < 3; ++d) spec(4 + 3 * c + d, m) = I * xi[d] * u[c];
      spec(13 + c, m) = -params.mu * k2 * u[c] + (params.mu + params.mu_prime) * I * xi[c] * div;
      if (with_k) spec(16 + c, m) = I * xi[c] * a;
    }
  });
  const Field phys = transform(spec, Direction::inverse);

  // Physical products: a u_c (3) and the velocity right-hand side (3).
  Field prod(g, 6, Representation::physical);
  bool breakdown = false;
  for (std::size_t m = 0; m < size; ++m) {
    const double a = phys(0, m).real();
    const double ea = eps * a;
    if (!(ea > -0.5)) {
      breakdown = true;
      break;
    }
    const double jv = Params::J(ea);
    const double kv = with_k ? params.K(ea) : 0.0;
    const double u[3] = {phys(1, m).real(), phys(2, m).real(), phys(3, m).real()};
    for (int c = 0; c < 3; ++c) {
      prod(c, m) = a * u[c];
      double adv = 0.0;
      for (int d = 0; d < 3; ++d) adv += u[d] * phys(4 + 3 * c + d, m).real();
      double rhs = adv + jv * phys(13 + c, m).real();
      if (with_k) rhs += kv / eps * phys(16 + c, m).real();
      prod(3 + c, m) = -rhs;
    }
  }
  if (breakdown) {
    throw ModelBreakdownError("nonlinearity: eps a <= -1/2 somewhere (vacuum proximity)");
  }
  const Field hat = transform(prod, Direction::forward);

  Field out(g, 4, Representation::spectral);
  parallel_for(size, [&](std::size_t m) {
    if (g.is_nyquist(m) || is_dealiased_out(g, m)) return;
    const Vec3 xi = g.xi(m);
    out(0, m) = -I * (xi[0] * hat(0, m) + xi[1] * hat(1, m) + xi[2] * hat(2, m));
    for (int c = 0; c < 3; ++c) out(1 + c, m) = hat(3 + c, m);
  });
  return SpectralState(std::move(out), state.time());
}

double stability_limit(const SpectralState& state, const Params& params) {
  const Grid& g = state.grid();
  const Field phys = transform(state.data(), Direction::inverse);
  double max_u = 0.0, max_j = 0.0, max_k = 0.0;
  for (std::size_t m = 0; m < g.size(); ++m) {
    const double ea = params.eps * phys(0, m).real();
    const double u = std::sqrt(std::norm(phys(1, m).real()) + std::norm(phys(2, m).real()) +
                               std::norm(phys(3, m).real()));
    max_u = std::max(max_u, u);
    if (ea > -1.0) {
      max_j = std::max(max_j, std::abs(Params::J(ea)));
      max_k = std::max(max_k, std::abs(params.K(ea)));
    } else {
      return 0.0;
    }
  }
  const double kmax = std::sqrt(3.0) * dealias_cutoff(g.n()) * g.spacing();
  const double inf = std::numeric_limits<double>::infinity();
  const double speed = max_u + max_k / params.eps;
  const double advective = speed > 0.0 ? g.dx() / speed : inf;
  const double viscous = max_j > 0.0 ? 1.0 / (max_j * params.nu() * kmax * kmax) : inf;
  return 0.5 * std::min(advective, viscous);
}

// ---------------------------------------------------------------------------
// ETDRK2

EtdStepper::EtdStepper(const Grid& grid, const Params& params, double dt, LinearModel model,
                       bool linear)
    : grid_(grid),
      params_(params),
      dt_(dt),
      linear_(linear),
      e_(grid.size()),
      phi1_(grid.size()),
      phi2_(grid.size()) {
  if (!(dt > 0.0)) throw ConfigError("stepper: dt must be positive");
  parallel_for(grid.size(), [&](std::size_t m) {
    if (grid.is_nyquist(m)) {
      e_[m].setZero();
      phi1_[m].setZero();
      phi2_[m].setZero();
      return;
    }
    const Matrix4c hl = dt * linear_generator(grid.xi(m), params, model);
    phi_functions(hl, e_[m], phi1_[m], phi2_[m]);
  });
}

SpectralState EtdStepper::rhs(const SpectralState& state, const Forcing& forcing,
                              double t) const {
  SpectralState n = linear_ ? SpectralState(grid_, t) : nonlinearity(state, params_);
  if (forcing) {
    const SpectralState f = forcing(t);
    n.data() += f.data();
  }
  return n;
}

SpectralState EtdStepper::step(const SpectralState& state, const Forcing& forcing) const {
  if (!(state.grid() == grid_)) throw ContractError("stepper: grid mismatch");
  const double t0 = state.time();
  const SpectralState n0 = rhs(state, forcing, t0);
  SpectralState a(grid_, t0 + dt_);
  parallel_for(grid_.size(), [&](std::size_t m) {
    a.set_mode(m, e_[m] * state.mode(m) + dt_ * (phi1_[m] * n0.mode(m)));
  });
  if (!a.finite()) throw BlowUpError("ETDRK2 predictor produced non-finite values", t0);
  const SpectralState n1 = rhs(a, forcing, t0 + dt_);
  SpectralState out(grid_, t0 + dt_);
  parallel_for(grid_.size(), [&](std::size_t m) {
    out.set_mode(m, a.mode(m) + dt_ * (phi2_[m] * (n1.mode(m) - n0.mode(m))));
  });
  if (!out.finite()) throw BlowUpError("ETDRK2 step produced non-finite values", t0);
  return out;
}

// ---------------------------------------------------------------------------
// Norm framework

TrajectoryLedger::TrajectoryLedger(double q) {
  a2.p = 2.0;
  u2.p = 2.0;
  aq.p = q;
  uq.p = q;
}

void TrajectoryLedger::append(const SpectralState& state, const DyadicDecomposition& dyadic) {
  const Field a = component_field(state, 0, 1);
  const Field u = component_field(state, 1, 3);
  const double t = state.time();
  a2.append(t, a, dyadic);
  u2.append(t, u, dyadic);
  aq.append(t, a, dyadic);
  uq.append(t, u, dyadic);
}

TrajectoryLedger TrajectoryLedger::prefix(std::size_t count) const {
  TrajectoryLedger out(aq.p);
  auto cut = [count](const BlockLedger& in, BlockLedger& o) {
    o = in;
    o.times.resize(std::min(count, in.times.size()));
    o.norms.resize(o.times.size());
  };
  cut(a2, out.a2);
  cut(u2, out.u2);
  cut(aq, out.aq);
  cut(uq, out.uq);
  return out;
}

void NormParams::validate() const {
  if (!(eps > 0.0)) throw ConfigError("norms: eps must be positive");
  if (!(alpha > 0.0)) throw ConfigError("norms: alpha must be positive");
  if (!(beta0 > 0.0)) throw ConfigError("norms: beta0 must be positive");
  if (!(eps < beta0 / alpha)) {
    throw ConfigError("norms: band cutoffs need alpha < beta0 / eps");
  }
  if (!(q >= 1.0) || !(r >= 1.0)) throw ConfigError("norms: q, r must be >= 1");
}

double data_norm(const SpectralState& data, const NormParams& np) {
  np.validate();
  const Field a = data.density();
  const Field u = data.velocity();
  const double cut = np.beta0 / np.eps;
  const Band low = Band::low(cut), high = Band::high(cut);
  return besov_norm(a, 0.5, 2.0, 1.0, low).value + besov_norm(u, 0.5, 2.0, 1.0, low).value +
         np.eps * besov_norm(a, 1.5, 2.0, 1.0, high).value +
         besov_norm(u, 0.5, 2.0, 1.0, high).value;
}

namespace {

// Chemin-Lerner value, 0 for time integrals over a single sample.
double cl(const BlockLedger& l, double r, double s, const Band& band, bool tilde) {
  if (!std::isinf(r) && l.times.size() < 2) return 0.0;
  return chemin_lerner_from_ledger(l, r, s, 1.0, band, tilde).value;
}

}  // namespace

double auxiliary_norm(double e, double a, const NormParams& np) {
  if (np.r == 1.0) throw ConfigError("norms: the auxiliary norm needs r > 1");
  const double mix = std::isinf(np.r) ? e : std::pow(e, (np.r - 2.0) / (np.r - 1.0)) *
                                                std::pow(a, 1.0 / (np.r - 1.0));
  return np.alpha * np.eps * e + a + mix;
}

NormFramework norms_framework(const TrajectoryLedger& l, const NormParams& np) {
  np.validate();
  const double eps = np.eps, q = np.q, r = np.r;
  const double cut = np.beta0 / eps;
  const Band low = Band::low(cut), high = Band::high(cut);
  const Band lowa = Band::low(np.alpha), mid = Band::mid(np.alpha, cut);
  NormFramework out;

  out.e_eps = cl(l.a2, kInf, 0.5, low, true) + cl(l.u2, kInf, 0.5, low, true) +
              cl(l.a2, 1.0, 2.5, low, true) + cl(l.u2, 1.0, 2.5, low, true) +
              eps * cl(l.a2, kInf, 1.5, high, false) + cl(l.a2, 1.0, 1.5, high, true) / eps +
              cl(l.u2, kInf, 0.5, high, false) + cl(l.u2, 1.0, 2.5, high, true);

  const double s_low = 3.0 / q - 1.0 + (std::isinf(r) ? 0.0 : 2.0 / r);
  out.a_qr = cl(l.aq, r, s_low, lowa, false) + cl(l.uq, r, s_low, lowa, false) +
             cl(l.aq, kInf, 3.0 / q - 1.0, mid, false) + cl(l.aq, 1.0, 3.0 / q + 1.0, mid, true) +
             cl(l.uq, kInf, 3.0 / q - 1.0, mid, false) + cl(l.uq, 1.0, 3.0 / q + 1.0, mid, true) +
             eps * cl(l.aq, kInf, 3.0 / q, high, false) + cl(l.aq, 1.0, 3.0 / q, high, true) / eps +
             cl(l.uq, kInf, 3.0 / q - 1.0, high, false) + cl(l.uq, 1.0, 3.0 / q + 1.0, high, true);
  out.calA = auxiliary_norm(out.e_eps, out.a_qr, np);
  return out;
}

// ---------------------------------------------------------------------------
// Energy monitors

std::vector<double> cumulative_integral(const std::vector<double>& t,
                                        const std::vector<double>& v) {
  const std::size_t n = t.size();
  if (v.size() != n) throw ContractError("cumulative integral: size mismatch");
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  const double h = (t.back() - t.front()) / static_cast<double>(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    double piece;
    if (n < 4) {
      piece = 0.5 * h * (v[k] + v[k + 1]);
    } else if (k == 0) {
      piece = h / 24.0 * (9.0 * v[0] + 19.0 * v[1] - 5.0 * v[2] + v[3]);
    } else if (k + 2 == n) {
      piece = h / 24.0 * (v[n - 4] - 5.0 * v[n - 3] + 19.0 * v[n - 2] + 9.0 * v[n - 1]);
    } else {
      piece = h / 24.0 * (-v[k - 1] + 13.0 * v[k] + 13.0 * v[k + 1] - v[k + 2]);
    }
    out[k + 1] = out[k] + piece;
  }
  return out;
}

namespace {

// ||Delta_j of components [first, first + count)||_{L2}.
double block_component_l2(const SpectralState& s, int j, int first, int count) {
  const Grid& g = s.grid();
  double sum = 0.0;
  for (std::size_t m = 0; m < g.size(); ++m) {
    const double w = phi_radial(g.xi_norm(m), j);
    if (w == 0.0) continue;
    for (int c = first; c < first + count; ++c) sum += w * w * std::norm(s.data()(c, m));
  }
  return std::sqrt(sum * g.volume());
}

// ||grad Delta_j u||_{L2}^2.
double block_gradient_sq(const SpectralState& s, int j) {
  const Grid& g = s.grid();
  double sum = 0.0;
  for (std::size_t m = 0; m < g.size(); ++m) {
    const double k = g.xi_norm(m);
    const double w = phi_radial(k, j);
    if (w == 0.0) continue;
    for (int c = 1; c < 4; ++c) sum += w * w * k * k * std::norm(s.data()(c, m));
  }
  return sum * g.volume();
}

std::string band_of(int j, const Params& p, double beta0) {
  const double two_j = std::exp2(j);
  if (two_j > beta0 / p.eps) return "high";
  if (two_j >= std::abs(p.omega) * p.eps) return "mid";
  return "low";
}

}  // namespace

EnergyReport energy_monitors(const std::vector<SpectralState>& traj,
                             const std::vector<SpectralState>& forcing, const Params& params,
                             double delta, double beta0) {
  if (traj.empty()) throw ContractError("energy monitors: empty trajectory");
  if (!forcing.empty() && forcing.size() != traj.size()) {
    throw ContractError("energy monitors: forcing must match the trajectory samples");
  }
  const std::size_t nt = traj.size();
  std::vector<double> times(nt);
  for (std::size_t k = 0; k < nt; ++k) times[k] = traj[k].time();
  const DyadicDecomposition dyadic(traj.front().grid());
  const double mu_low = std::min(params.mu, 1.0);
  const double eps = params.eps;

  EnergyReport report;
  report.delta = delta;
  report.beta0 = beta0;
  for (int j = dyadic.j_min(); j <= dyadic.j_max(); ++j) {
    BlockEnergyCheck chk;
    chk.j = j;
    chk.band = band_of(j, params, beta0);
    std::vector<double> e(nt), d(nt), p(nt, 0.0), gnorm(nt, 0.0), grad(nt), an(nt), un(nt),
        fn(nt, 0.0), gn(nt, 0.0);
    parallel_for(nt, [&](std::size_t k) {
      e[k] = block_energy(traj[k], j);
      d[k] = block_dissipation(traj[k], j, params);
      grad[k] = block_gradient_sq(traj[k], j);
      an[k] = block_component_l2(traj[k], j, 0, 1);
      un[k] = block_component_l2(traj[k], j, 1, 3);
      if (!forcing.empty()) {
        p[k] = block_forcing_power(traj[k], forcing[k], j);
        gnorm[k] = std::sqrt(block_energy(forcing[k], j));
        fn[k] = block_component_l2(forcing[k], j, 0, 1);
        gn[k] = block_component_l2(forcing[k], j, 1, 3);
      }
    });
    const double e_max = *std::max_element(e.begin(), e.end());
    const auto int_d = cumulative_integral(times, d);
    const auto int_p = cumulative_integral(times, p);
    const auto int_grad = cumulative_integral(times, grad);
    const auto int_g = cumulative_integral(times, gnorm);
    double running_max = 0.0;
    chk.inequality_slack = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < nt; ++k) {
      if (e_max > 0.0) {
        const double res = 0.5 * e[k] + int_d[k] - 0.5 * e[0] - int_p[k];
        chk.identity_residual = std::max(chk.identity_residual, std::abs(res) / (0.5 * e_max));
      }
      running_max = std::max(running_max, e[k]);
      const double lhs = 0.5 * e[k] + mu_low * int_grad[k];
      const double rhs = 0.5 * e[0] + 2.0 * int_g[k] * int_g[k] + 0.125 * running_max;
      chk.inequality_slack = std::max(chk.inequality_slack, lhs - rhs);
    }
    if (chk.band == "mid") {
      chk.vj_min = std::numeric_limits<double>::infinity();
      chk.vj_max = 0.0;
      for (std::size_t k = 0; k < nt; ++k) {
        if (!(e[k] > 0.0)) continue;
        const double ratio = vj_squared(traj[k], j, eps, delta) / e[k];
        chk.vj_min = std::min(chk.vj_min, ratio);
        chk.vj_max = std::max(chk.vj_max, ratio);
      }
      if (chk.vj_max == 0.0) chk.vj_min = chk.vj_max = 1.0;
    }
    if (chk.band == "high") {
      const double two_j = std::exp2(j);
      const double a_inf = *std::max_element(an.begin(), an.end());
      const double u_inf = *std::max_element(un.begin(), un.end());
      const double a_one = nt > 1 ? cumulative_integral(times, an).back() : 0.0;
      const double u_one = nt > 1 ? cumulative_integral(times, un).back() : 0.0;
      const double f_one = nt > 1 ? cumulative_integral(times, fn).back() : 0.0;
      const double g_one = nt > 1 ? cumulative_integral(times, gn).back() : 0.0;
      const double lhs = two_j * eps * a_inf + two_j * a_one / eps + u_inf + two_j * two_j * u_one;
      const double rhs = two_j * eps * an[0] + un[0] + two_j * eps * f_one + g_one;
      chk.high_ratio = rhs > 0.0 ? lhs / rhs : 0.0;
      report.high_constant = std::max(report.high_constant, chk.high_ratio);
    }
    report.blocks.push_back(chk);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Simulation driver

std::string to_string(Classification c) {
  switch (c) {
    case Classification::completed: return "completed";
    case Classification::nan: return "nan";
    case Classification::vacuum: return "vacuum";
    case Classification::energy_growth: return "energy_growth";
    case Classification::model_breakdown: return "model_breakdown";
    case Classification::unstable_dt: return "unstable_dt";
  }
  return "unknown";
}

namespace {

MonitorRecord physical_record(const SpectralState& s, const Params& p) {
  MonitorRecord rec;
  rec.t = s.time();
  const Field phys = transform(s.data(), Direction::inverse);
  const Grid& g = s.grid();
  rec.min_density = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < g.size(); ++m) {
    rec.min_density = std::min(rec.min_density, 1.0 + p.eps * phys(0, m).real());
    const double u = std::sqrt(std::norm(phys(1, m).real()) + std::norm(phys(2, m).real()) +
                               std::norm(phys(3, m).real()));
    rec.max_speed = std::max(rec.max_speed, u);
  }
  const double l2 = l2_norm_spectral(dealias(s.data()));
  rec.energy = 0.5 * l2 * l2;
  rec.mass = s.a(0).real();
  return rec;
}

}  // namespace

SimulationResult simulate(const SimulationConfig& config, const std::string& out_dir) {
  config.validate();
  return simulate(config, make_initial_data(config), out_dir);
}

SimulationResult simulate(const SimulationConfig& config, const SpectralState& initial,
                          const std::string& out_dir) {
  config.validate();
  const Grid& g = initial.grid();
  if (!(g == make_grid(config.n, config.period))) {
    throw ConfigError("simulate: initial data grid differs from the configured grid");
  }
  const Params& p = config.params;
  const double beta0 = config.resolved_beta0();
  const NormParams np{p.eps, config.alpha, beta0, config.q, config.r};
  const double delta = choose_delta(p.mu, beta0);

  if (!config.linear) {
    const double limit = stability_limit(initial, p);
    if (config.dt > limit) {
      throw ConfigError("simulate: dt = " + std::to_string(config.dt) +
                        " exceeds the stability guard " + std::to_string(limit));
    }
  }

  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  SimulationResult result(g);
  result.monitors.d_eps = data_norm(initial, np);
  const DyadicDecomposition dyadic(g);
  TrajectoryLedger ledger(config.q);
  const EtdStepper stepper(g, p, config.dt, LinearModel::viscous, config.linear);

  const auto steps = static_cast<long>(std::llround(config.T / config.dt));
  SpectralState state = initial;
  const double mass0 = initial.a(0).real();
  double e0 = 0.0;
  int snap_index = 0;

  auto record = [&](const SpectralState& s) -> bool {
    MonitorRecord rec = physical_record(s, p);
    ledger.append(s, dyadic);
    const NormFramework nf = norms_framework(ledger, np);
    rec.e_eps = nf.e_eps;
    rec.a_qr = nf.a_qr;
    rec.calA = nf.calA;
    for (int j = dyadic.j_min(); j <= dyadic.j_max(); ++j) {
      if (band_of(j, p, beta0) != "mid") continue;
      const double e = block_energy(s, j);
      if (e > 0.0) rec.vj_ratio.emplace_back(j, vj_squared(s, j, p.eps, delta) / e);
    }
    result.monitors.records.push_back(rec);
    result.peak_calA = std::max(result.peak_calA, rec.calA);
    result.peak_a_qr = std::max(result.peak_a_qr, rec.a_qr);
    result.peak_e_eps = std::max(result.peak_e_eps, rec.e_eps);
    result.mass_drift = std::max(result.mass_drift, std::abs(rec.mass - mass0));
    if (result.monitors.records.size() == 1) e0 = rec.e_eps;
    if (!out_dir.empty() && config.snapshot_every > 0 &&
        (result.monitors.records.size() - 1) % config.snapshot_every == 0) {
      const std::string path =
          (std::filesystem::path(out_dir) / ("snapshot_" + std::to_string(snap_index++) + ".rcsf"))
              .string();
      write_snapshot(path, s.data());
      result.files.push_back(path);
    }
    if (rec.min_density < config.min_density) {
      result.classification = Classification::vacuum;
      return false;
    }
    if (e0 > 0.0 && rec.e_eps > config.energy_growth * e0) {
      result.classification = Classification::energy_growth;
      return false;
    }
    if (!config.linear && s.time() > 0.0 && config.dt > stability_limit(s, p)) {
      result.classification = Classification::unstable_dt;
      return false;
    }
    return true;
  };

  bool running = record(state);
  for (long k = 1; running && k <= steps; ++k) {
    try {
      SpectralState next = stepper.step(state);
      next.set_time(k * config.dt);
      state = std::move(next);
    } catch (const BlowUpError& e) {
      result.classification = Classification::nan;
      result.blowup_time = e.last_valid_time();
      break;
    } catch (const ModelBreakdownError&) {
      result.classification = Classification::model_breakdown;
      result.blowup_time = state.time();
      break;
    }
    if (k % config.monitor_every == 0 || k == steps) {
      // Keep the monitor grid uniform: a final partial interval is recorded
      // only in the summary state, not in the time norms.
      if (k % config.monitor_every == 0) running = record(state);
      if (!running) result.blowup_time = state.time();
    }
  }
  result.final_time = state.time();
  result.final_state = state;

  if (!out_dir.empty()) {
    const auto dir = std::filesystem::path(out_dir);
    write_monitor_csv((dir / "monitors.csv").string(), result.monitors);
    result.files.push_back((dir / "monitors.csv").string());
    nlohmann::json summary = summary_json(result);
    summary["config"] = to_json(config);
    summary["beta0"] = beta0;
    std::ofstream((dir / "summary.json").string()) << summary.dump(2) << "\n";
    result.files.push_back((dir / "summary.json").string());
  }
  return result;
}

nlohmann::json summary_json(const SimulationResult& r) {
  return {{"final_time", r.final_time},
          {"classification", to_string(r.classification)},
          {"blowup_time", r.blowup_time},
          {"mass_drift", r.mass_drift},
          {"d_eps", r.monitors.d_eps},
          {"peak", {{"calA", r.peak_calA}, {"A_qr", r.peak_a_qr}, {"E_eps", r.peak_e_eps}}},
          {"samples", r.monitors.records.size()}};
}

void write_monitor_csv(const std::string& path, const MonitorSeries& series) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "t,E_eps,A_qr,calA,min_density,max_speed,energy,mass,vj_min,vj_max\n";
  char buf[512];
  for (const auto& r : series.records) {
    double lo = 1.0, hi = 1.0;
    if (!r.vj_ratio.empty()) {
      lo = hi = r.vj_ratio.front().second;
      for (const auto& [j, v] : r.vj_ratio) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.t, r.e_eps, r.a_qr, r.calA, r.min_density, r.max_speed, r.energy, r.mass, lo,
                  hi);
    out << buf;
  }
}

std::vector<SweepRow> omega_sweep(const SimulationConfig& base, const std::vector<double>& omegas,
                                  const std::string& out_dir) {
  std::vector<SweepRow> rows;
  const SpectralState initial = make_initial_data(base);
  for (double omega : omegas) {
    if (!(omega > 0.0)) throw ConfigError("sweep: Omega must be positive");
    SimulationConfig c = base;
    c.params.omega = omega;
    c.params.eps = 1.0 / omega;
    std::string dir;
    if (!out_dir.empty()) {
      char name[64];
      std::snprintf(name, sizeof name, "omega_%g", omega);
      dir = (std::filesystem::path(out_dir) / name).string();
    }
    // The data is fixed across the sweep; only the parameters change.
    const SimulationResult r = simulate(c, initial, dir);
    SweepRow row;
    row.omega = omega;
    row.eps = c.params.eps;
    row.max_calA = r.peak_calA;
    row.max_a_qr = r.peak_a_qr;
    row.max_e_eps = r.peak_e_eps;
    row.classification = r.classification;
    row.blowup = r.classification != Classification::completed;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace rcs
