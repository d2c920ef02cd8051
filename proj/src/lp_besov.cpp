#include "rcs/lp_besov.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rcs/errors.hpp"

namespace rcs {

double smooth_step(double x) noexcept {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double g0 = std::exp(-1.0 / x);
  const double g1 = std::exp(-1.0 / (1.0 - x));
  return g0 / (g0 + g1);
}

double phi0_radial(double r) noexcept {
  if (r <= 0.5 || r >= 2.0) return 0.0;
  return smooth_step(2.0 - r) - smooth_step(2.0 - 2.0 * r);
}

double phi_radial(double r, int j) noexcept { return phi0_radial(std::ldexp(r, -j)); }

double phi_weight(const Vec3& xi, int j) noexcept {
  const double r = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
  return r == 0.0 ? 0.0 : phi_radial(r, j);
}

Band Band::mid(double alpha, double beta) {
  if (!(alpha >= 0.0 && alpha < beta)) {
    throw ConfigError("band: need 0 <= alpha < beta");
  }
  return {alpha, beta};
}

bool Band::contains(int j) const noexcept {
  const double two_j = std::ldexp(1.0, j);
  return lo < two_j && two_j <= hi;
}

DyadicDecomposition::DyadicDecomposition(const Grid& grid)
    : j_min_(static_cast<int>(std::ceil(std::log2(2.0 * grid.spacing()) - 1e-12))),
      j_max_(static_cast<int>(std::floor(std::log2(grid.xi_max() / 2.0) + 1e-12))) {}

std::vector<int> DyadicDecomposition::blocks(const Band& band) const {
  std::vector<int> out;
  for (int j = j_min_; j <= j_max_; ++j) {
    if (band.contains(j)) out.push_back(j);
  }
  return out;
}

namespace {

Field as_spectral(const Field& field) {
  return field.representation() == Representation::spectral
             ? field
             : transform(field, Direction::forward);
}

// Blocks outside [j_min, j_max] that are both in the band and hit by content.
void collect_excluded(const Field& spectral, const DyadicDecomposition& dyadic,
                      const Band& band, std::set<int>& out) {
  const Grid& g = spectral.grid();
  for (std::size_t m = 0; m < g.size(); ++m) {
    bool nonzero = false;
    for (int c = 0; c < spectral.components() && !nonzero; ++c) {
      nonzero = spectral(c, m) != Complex{};
    }
    if (!nonzero) continue;
    const double r = g.xi_norm(m);
    if (r == 0.0) continue;
    const int base = static_cast<int>(std::floor(std::log2(r)));
    for (int j = base; j <= base + 1; ++j) {
      if ((j < dyadic.j_min() || j > dyadic.j_max()) && band.contains(j) &&
          phi_radial(r, j) > 0.0) {
        out.insert(j);
      }
    }
  }
}

double block_norm_spectral(const Field& spectral, int j, double p) {
  const Grid& g = spectral.grid();
  if (p == 2.0) {
    double sum = 0.0;
    for (std::size_t m = 0; m < g.size(); ++m) {
      const double w = phi_radial(g.xi_norm(m), j);
      if (w == 0.0) continue;
      double e = 0.0;
      for (int c = 0; c < spectral.components(); ++c) e += std::norm(spectral(c, m));
      sum += w * w * e;
    }
    return std::sqrt(sum * g.volume());
  }
  std::vector<double> weights(g.size());
  bool any = false;
  for (std::size_t m = 0; m < g.size(); ++m) {
    weights[m] = phi_radial(g.xi_norm(m), j);
    any = any || weights[m] != 0.0;
  }
  if (!any) return 0.0;
  std::vector<double> modulus2(g.size(), 0.0);
  AlignedComplexVector scratch(g.size());
  for (int c = 0; c < spectral.components(); ++c) {
    const auto comp = spectral.component(c);
    for (std::size_t m = 0; m < g.size(); ++m) scratch[m] = weights[m] * comp[m];
    fft_inverse_inplace({scratch.data(), scratch.size()}, g.n());
    for (std::size_t m = 0; m < g.size(); ++m) modulus2[m] += std::norm(scratch[m]);
  }
  if (std::isinf(p)) {
    return std::sqrt(*std::max_element(modulus2.begin(), modulus2.end()));
  }
  double sum = 0.0;
  for (double v : modulus2) sum += std::pow(v, 0.5 * p);
  const double h = g.dx();
  return std::pow(sum * h * h * h, 1.0 / p);
}

double lr_accumulate(double acc, double v, double sigma) {
  return std::isinf(sigma) ? std::max(acc, v) : acc + std::pow(v, sigma);
}

double lr_finish(double acc, double sigma) {
  return std::isinf(sigma) ? acc : std::pow(acc, 1.0 / sigma);
}

void require_exponent(double v, const char* name) {
  if (!(v >= 1.0)) throw ContractError(std::string("norm exponent ") + name + " must be >= 1");
}

}  // namespace

Field block_project(const Field& field, int j) {
  Field out = as_spectral(field);
  const Grid& g = out.grid();
  for (std::size_t m = 0; m < g.size(); ++m) {
    const double w = phi_radial(g.xi_norm(m), j);
    for (int c = 0; c < out.components(); ++c) out(c, m) *= w;
  }
  return out;
}

double block_lp_norm(const Field& field, int j, double p) {
  require_exponent(p, "p");
  if (field.representation() == Representation::spectral) {
    return block_norm_spectral(field, j, p);
  }
  return block_norm_spectral(transform(field, Direction::forward), j, p);
}

double lsigma(std::span<const double> values, double sigma) {
  double acc = 0.0;
  for (double v : values) acc = lr_accumulate(acc, v, sigma);
  return lr_finish(acc, sigma);
}

NormReport besov_norm(const Field& field, double s, double p, double sigma,
                      const Band& band) {
  require_exponent(p, "p");
  require_exponent(sigma, "sigma");
  const Field spectral = as_spectral(field);
  const DyadicDecomposition dyadic(spectral.grid());
  NormReport report;
  report.s = s;
  report.p = p;
  report.sigma = sigma;
  report.band = band;
  std::vector<double> contribs;
  for (int j : dyadic.blocks(band)) {
    const double c = std::exp2(s * j) * block_norm_spectral(spectral, j, p);
    report.blocks.push_back({j, c});
    contribs.push_back(c);
  }
  report.value = lsigma(contribs, sigma);
  std::set<int> excluded;
  collect_excluded(spectral, dyadic, band, excluded);
  report.excluded.assign(excluded.begin(), excluded.end());
  return report;
}

void BlockLedger::append(double t, const Field& field, const DyadicDecomposition& dyadic) {
  if (!times.empty() && !(t > times.back())) {
    throw ContractError("ledger: times must be strictly increasing");
  }
  if (times.empty()) {
    j_min = dyadic.j_min();
    j_max = dyadic.j_max();
  } else if (j_min != dyadic.j_min() || j_max != dyadic.j_max()) {
    throw ContractError("ledger: dyadic range changed between samples");
  }
  const Field spectral = as_spectral(field);
  std::vector<double> row;
  for (int j = j_min; j <= j_max; ++j) row.push_back(block_norm_spectral(spectral, j, p));
  times.push_back(t);
  norms.push_back(std::move(row));
  std::set<int> ex(excluded.begin(), excluded.end());
  collect_excluded(spectral, dyadic, Band::all(), ex);
  excluded.assign(ex.begin(), ex.end());
}

BlockLedger make_block_ledger(std::span<const double> times, std::span<const Field> fields,
                              double p) {
  require_exponent(p, "p");
  if (times.size() != fields.size()) throw ContractError("ledger: times/fields size mismatch");
  if (fields.empty()) throw ContractError("ledger: empty trajectory");
  BlockLedger ledger;
  ledger.p = p;
  const DyadicDecomposition dyadic(fields.front().grid());
  for (std::size_t k = 0; k < fields.size(); ++k) ledger.append(times[k], fields[k], dyadic);
  return ledger;
}

double time_lr_norm(std::span<const double> times, std::span<const double> values, double r) {
  require_exponent(r, "r");
  if (times.size() != values.size() || times.empty()) {
    throw ContractError("time norm: sample count mismatch or empty series");
  }
  if (std::isinf(r)) return *std::max_element(values.begin(), values.end());
  if (times.size() < 2) {
    throw DegenerateQuadratureError("time norm: a single sample cannot be integrated");
  }
  const double h = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (std::abs((times[k] - times[k - 1]) - h) > 1e-9 * std::max(1.0, std::abs(h))) {
      throw ContractError("time norm: non-uniform time grid");
    }
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double w = (k == 0 || k + 1 == values.size()) ? 0.5 : 1.0;
    sum += w * std::pow(values[k], r);
  }
  return std::pow(sum * h, 1.0 / r);
}

NormReport chemin_lerner_from_ledger(const BlockLedger& ledger, double r, double s,
                                     double sigma, const Band& band, bool tilde) {
  require_exponent(sigma, "sigma");
  if (ledger.times.empty()) throw ContractError("chemin-lerner: empty trajectory");
  NormReport report;
  report.s = s;
  report.p = ledger.p;
  report.sigma = sigma;
  report.band = band;
  report.r = r;
  report.tilde = tilde;
  for (int j : ledger.excluded) {
    if (band.contains(j)) report.excluded.push_back(j);
  }
  std::vector<int> js;
  for (int j = ledger.j_min; j <= ledger.j_max; ++j) {
    if (band.contains(j)) js.push_back(j);
  }
  const std::size_t nt = ledger.times.size();
  if (tilde) {
    std::vector<double> contribs;
    std::vector<double> series(nt);
    for (int j : js) {
      for (std::size_t k = 0; k < nt; ++k) series[k] = ledger.norms[k][j - ledger.j_min];
      const double c = std::exp2(s * j) * time_lr_norm(ledger.times, series, r);
      report.blocks.push_back({j, c});
      contribs.push_back(c);
    }
    report.value = lsigma(contribs, sigma);
    return report;
  }
  // Besov norm at each time, then the time norm. Block entries report the
  // per-block time norm for inspection; they do not aggregate to the value.
  std::vector<double> besov(nt);
  std::vector<double> row;
  for (std::size_t k = 0; k < nt; ++k) {
    row.clear();
    for (int j : js) row.push_back(std::exp2(s * j) * ledger.norms[k][j - ledger.j_min]);
    besov[k] = lsigma(row, sigma);
  }
  std::vector<double> series(nt);
  for (int j : js) {
    for (std::size_t k = 0; k < nt; ++k) series[k] = ledger.norms[k][j - ledger.j_min];
    report.blocks.push_back({j, std::exp2(s * j) * time_lr_norm(ledger.times, series, r)});
  }
  report.value = js.empty() ? 0.0 : time_lr_norm(ledger.times, besov, r);
  return report;
}

NormReport chemin_lerner_norm(std::span<const double> times, std::span<const Field> fields,
                              double r, double s, double p, double sigma, const Band& band,
                              bool tilde) {
  require_exponent(r, "r");
  if (fields.size() == 1 && !std::isinf(r)) {
    throw DegenerateQuadratureError("chemin-lerner: a single sample cannot be integrated");
  }
  const BlockLedger ledger = make_block_ledger(times, fields, p);
  return chemin_lerner_from_ledger(ledger, r, s, sigma, band, tilde);
}

nlohmann::json to_json(const NormReport& report) {
  auto finite_or_string = [](double v) -> nlohmann::json {
    if (std::isinf(v)) return "inf";
    return v;
  };
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : report.blocks) blocks.push_back({{"j", b.j}, {"contrib", b.contrib}});
  nlohmann::json out = {
      {"value", report.value},
      {"s", report.s},
      {"p", finite_or_string(report.p)},
      {"sigma", finite_or_string(report.sigma)},
      {"band", {report.band.lo, finite_or_string(report.band.hi)}},
      {"blocks", blocks},
      {"excluded", report.excluded},
  };
  if (report.r != 0.0) {
    out["r"] = finite_or_string(report.r);
    out["tilde"] = report.tilde;
  }
  return out;
}

}  // namespace rcs
