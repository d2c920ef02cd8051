#include "rcs/propagator.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rcs/errors.hpp"
#include "rcs/expm.hpp"
#include "rcs/lp_besov.hpp"
#include "rcs/parallel.hpp"

namespace rcs {

namespace {
constexpr Complex I{0.0, 1.0};
}

SpectralState::SpectralState(const Grid& grid, double time)
    : data_(grid, 4, Representation::spectral), time_(time) {}

SpectralState::SpectralState(Field data, double time) : data_(std::move(data)), time_(time) {
  if (data_.components() != 4 || data_.representation() != Representation::spectral) {
    throw ContractError("state: need a 4-component spectral field");
  }
  require_finite("state construction");
}

Vector4c SpectralState::mode(std::size_t m) const {
  return {data_(0, m), data_(1, m), data_(2, m), data_(3, m)};
}

void SpectralState::set_mode(std::size_t m, const Vector4c& v) {
  for (int c = 0; c < 4; ++c) data_(c, m) = v(c);
}

bool SpectralState::finite() const noexcept {
  for (const auto& v : data_.values()) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

void SpectralState::require_finite(const char* where) const {
  if (!finite()) {
    throw BlowUpError(std::string("non-finite state after ") + where, time_);
  }
}

Field SpectralState::density() const {
  Field out(grid(), 1, Representation::spectral);
  const auto src = data_.component(0);
  std::copy(src.begin(), src.end(), out.component(0).begin());
  return out;
}

Field SpectralState::velocity() const {
  Field out(grid(), 3, Representation::spectral);
  for (int c = 0; c < 3; ++c) {
    const auto src = data_.component(1 + c);
    std::copy(src.begin(), src.end(), out.component(c).begin());
  }
  return out;
}

Matrix4c scaled_inviscid_generator(const Vec3& xi, double omega, double eps) {
  if (!(eps > 0.0)) throw ConfigError("inviscid generator: eps must be positive");
  if (omega != 0.0) {
    const double s = 1.0 / (omega * eps);
    return omega * inviscid_symbol({xi[0] * s, xi[1] * s, xi[2] * s}).entries;
  }
  Matrix4c g = Matrix4c::Zero();
  for (int k = 0; k < 3; ++k) {
    g(0, k + 1) = -I * xi[k] / eps;
    g(k + 1, 0) = -I * xi[k] / eps;
  }
  return g;
}

Matrix4c linear_generator(const Vec3& xi, const Params& params, LinearModel model) {
  if (model == LinearModel::inviscid) {
    return scaled_inviscid_generator(xi, params.omega, params.eps);
  }
  return -viscous_symbol(xi, params).entries;
}

Matrix4c mode_propagator(const Vec3& xi, double t, const Params& params, LinearModel model) {
  return expm(Matrix4c(t * linear_generator(xi, params, model)));
}

ModePropagator::ModePropagator(const Grid& grid, const Params& params, double h,
                               LinearModel model)
    : grid_(grid), h_(h), cache_(grid.size()) {
  if (model == LinearModel::viscous && h < 0.0) {
    throw DomainError("viscous propagator: negative time step");
  }
  parallel_for(grid.size(), [&](std::size_t m) {
    cache_[m] = grid.is_nyquist(m) ? Matrix4c::Zero()
                                   : mode_propagator(grid.xi(m), h, params, model);
  });
}

void ModePropagator::apply(SpectralState& state) const {
  if (!(state.grid() == grid_)) throw ContractError("propagator: grid mismatch");
  for (std::size_t m = 0; m < grid_.size(); ++m) {
    state.set_mode(m, cache_[m] * state.mode(m));
  }
  state.set_time(state.time() + h_);
  state.require_finite("linear step");
}

SpectralState evolve_inviscid(const SpectralState& state, double t, double omega, double eps) {
  Params p;
  p.mu = 0.0;
  p.mu_prime = 0.0;
  p.omega = omega;
  p.eps = eps;
  SpectralState out = state;
  ModePropagator(state.grid(), p, t, LinearModel::inviscid).apply(out);
  return out;
}

SpectralState evolve_viscous(const SpectralState& state, double t, const Params& params) {
  if (t < 0.0) throw DomainError("evolve_viscous: the viscous semigroup only runs forward");
  SpectralState out = state;
  ModePropagator(state.grid(), params, t, LinearModel::viscous).apply(out);
  return out;
}

double dissipativity_margin(const Vec3& xi, const Params& params) {
  const Matrix4c m = viscous_symbol(xi, params).entries;
  const Matrix4c herm = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

std::vector<SpectralState> duhamel(const SpectralState& state0,
                                   const std::vector<SpectralState>& forcing,
                                   const std::vector<double>& t_grid, const Params& params,
                                   LinearModel model) {
  if (t_grid.size() != forcing.size() || t_grid.empty()) {
    throw ContractError("duhamel: forcing must be sampled on t_grid");
  }
  for (const auto& f : forcing) {
    if (!(f.grid() == state0.grid())) throw ContractError("duhamel: forcing grid mismatch");
  }
  std::vector<SpectralState> out{state0};
  out.front().set_time(t_grid.front());
  if (t_grid.size() == 1) return out;
  const double h = (t_grid.back() - t_grid.front()) / static_cast<double>(t_grid.size() - 1);
  for (std::size_t k = 1; k < t_grid.size(); ++k) {
    if (std::abs(t_grid[k] - t_grid[k - 1] - h) > 1e-9 * std::max(1.0, std::abs(h))) {
      throw ContractError("duhamel: t_grid must be uniform");
    }
  }
  const ModePropagator full(state0.grid(), params, h, model);
  const ModePropagator half(state0.grid(), params, 0.5 * h, model);
  const Grid& g = state0.grid();
  for (std::size_t k = 0; k + 1 < t_grid.size(); ++k) {
    SpectralState next = out.back();
    full.apply(next);
    for (std::size_t m = 0; m < g.size(); ++m) {
      const Vector4c avg = 0.5 * h * (forcing[k].mode(m) + forcing[k + 1].mode(m));
      next.set_mode(m, next.mode(m) + half.matrix(m) * avg);
    }
    next.set_time(t_grid[k + 1]);
    next.require_finite("duhamel step");
    out.push_back(std::move(next));
  }
  return out;
}

Field effective_velocity(const SpectralState& state, double eps) {
  const Grid& g = state.grid();
  Field w = state.velocity();
  for (std::size_t m = 1; m < g.size(); ++m) {
    const Vec3 xi = g.xi(m);
    const double r2 = norm2(xi);
    const Complex corr = state.a(m) / (eps * r2);
    for (int c = 0; c < 3; ++c) w(c, m) += I * xi[c] * corr;
  }
  return w;
}

namespace {

template <typename F>
double block_sum(const Grid& g, int j, F&& per_mode) {
  double sum = 0.0;
  for (std::size_t m = 0; m < g.size(); ++m) {
    const double r = g.xi_norm(m);
    const double w = phi_radial(r, j);
    if (w == 0.0) continue;
    sum += w * w * per_mode(m, g.xi(m));
  }
  return sum * g.volume();
}

}  // namespace

double block_energy(const SpectralState& state, int j) {
  return block_sum(state.grid(), j, [&](std::size_t m, const Vec3&) {
    return state.mode(m).squaredNorm();
  });
}

double block_dissipation(const SpectralState& state, int j, const Params& params) {
  return block_sum(state.grid(), j, [&](std::size_t m, const Vec3& xi) {
    double u2 = 0.0;
    Complex div{};
    for (int c = 0; c < 3; ++c) {
      u2 += std::norm(state.u(c, m));
      div += xi[c] * state.u(c, m);
    }
    return params.mu * norm2(xi) * u2 + (params.mu + params.mu_prime) * std::norm(div);
  });
}

double block_forcing_power(const SpectralState& state, const SpectralState& forcing, int j) {
  return block_sum(state.grid(), j, [&](std::size_t m, const Vec3&) {
    return std::real(forcing.mode(m).dot(state.mode(m)));
  });
}

double block_cross_term(const SpectralState& state, int j, double eps) {
  return block_sum(state.grid(), j, [&](std::size_t m, const Vec3& xi) {
    Complex acc{};
    for (int c = 0; c < 3; ++c) acc += I * xi[c] * state.a(m) * std::conj(state.u(c, m));
    return eps * acc.real();
  });
}

double vj_squared(const SpectralState& state, int j, double eps, double delta) {
  return block_energy(state, j) + 2.0 * delta * block_cross_term(state, j, eps);
}

double choose_delta(double mu, double beta0) {
  double delta = 0.1 * std::min(mu, 1.0);
  while (2.0 * delta * beta0 > 0.5) delta *= 0.5;
  return delta;
}

Beta0Calibration calibrate_beta0(const Params& params, double tolerance) {
  const double inv = 1.0 / std::sqrt(3.0);
  const Vec3 directions[] = {{1, 0, 0}, {0, 0, 1}, {inv, inv, inv}, {0.6, 0.0, 0.8},
                             {0.0, 0.8, -0.6}};
  const double target = 1.0 / (params.nu() * params.eps * params.eps);
  auto worst_above = [&](double beta) {
    double worst = 0.0;
    for (int k = 0; k <= 32; ++k) {
      const double r = beta * std::exp2(0.25 * k) / params.eps;
      for (const auto& d : directions) {
        const double rate = slow_density_rate({r * d[0], r * d[1], r * d[2]}, params);
        worst = std::max(worst, std::abs(rate / target - 1.0));
      }
    }
    return worst;
  };
  Beta0Calibration out;
  for (int m = -2; m <= 6; ++m) {
    const double beta = std::ldexp(1.0, m);
    const double worst = worst_above(beta);
    if (worst <= tolerance) {
      out.beta0 = beta;
      out.calibrated = true;
      out.worst_relative_error = worst;
      return out;
    }
  }
  out.beta0 = Beta0Calibration::kFallback;
  out.worst_relative_error = worst_above(out.beta0);
  return out;
}

nlohmann::json to_json(const Params& params) {
  return {{"mu", params.mu},       {"mu_prime", params.mu_prime}, {"eps", params.eps},
          {"omega", params.omega}, {"gamma", params.gamma}};
}

std::vector<std::string> write_trajectory(const std::string& directory,
                                          const std::vector<SpectralState>& states,
                                          const Params& params) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  std::vector<std::string> files;
  nlohmann::json times = nlohmann::json::array();
  nlohmann::json names = nlohmann::json::array();
  for (std::size_t k = 0; k < states.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "state_%05zu.rcsf", k);
    const std::string path = (fs::path(directory) / name).string();
    write_snapshot(path, states[k].data());
    files.push_back(path);
    times.push_back(states[k].time());
    names.push_back(name);
  }
  const nlohmann::json index = {{"times", times}, {"params", to_json(params)}, {"files", names}};
  const std::string index_path = (fs::path(directory) / "index.json").string();
  std::ofstream(index_path) << index.dump(2) << '\n';
  files.push_back(index_path);
  return files;
}

}  // namespace rcs
