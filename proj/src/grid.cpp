#include "rcs/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>

#include "rcs/errors.hpp"

namespace rcs {

void* fftw_aligned_alloc(std::size_t bytes) { return fftw_malloc(bytes); }
void fftw_aligned_free(void* p) noexcept { fftw_free(p); }

Grid::Grid(int n_per_axis, double period)
    : n_(n_per_axis),
      period_(period),
      spacing_(2.0 * std::numbers::pi / period),
      size_(static_cast<std::size_t>(n_per_axis) * n_per_axis * n_per_axis) {
  if (n_per_axis < 8 || n_per_axis > 512 ||
      !std::has_single_bit(static_cast<unsigned>(n_per_axis))) {
    throw ConfigError("grid: n_per_axis must be a power of two in [8, 512], got " +
                      std::to_string(n_per_axis));
  }
  if (!(period > 0.0) || !std::isfinite(period)) {
    throw ConfigError("grid: period must be positive and finite");
  }
}

Grid make_grid(int n_per_axis, double period) { return Grid(n_per_axis, period); }

std::array<int, 3> Grid::integer_wavenumber(std::size_t flat) const noexcept {
  const auto n = static_cast<std::size_t>(n_);
  const int ix = static_cast<int>(flat % n);
  const int iy = static_cast<int>((flat / n) % n);
  const int iz = static_cast<int>(flat / (n * n));
  return {wavenumber_index(ix), wavenumber_index(iy), wavenumber_index(iz)};
}

Vec3 Grid::xi(std::size_t flat) const noexcept {
  const auto k = integer_wavenumber(flat);
  return {k[0] * spacing_, k[1] * spacing_, k[2] * spacing_};
}

double Grid::xi_norm(std::size_t flat) const noexcept {
  const auto v = xi(flat);
  return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

double Grid::xi_max() const noexcept { return std::sqrt(3.0) * (n_ / 2) * spacing_; }

bool Grid::is_nyquist(std::size_t flat) const noexcept {
  const auto k = integer_wavenumber(flat);
  const int nyq = -n_ / 2;
  return k[0] == nyq || k[1] == nyq || k[2] == nyq;
}

std::size_t Grid::conjugate_index(std::size_t flat) const noexcept {
  const auto n = static_cast<std::size_t>(n_);
  const std::size_t ix = flat % n;
  const std::size_t iy = (flat / n) % n;
  const std::size_t iz = flat / (n * n);
  auto neg = [n](std::size_t i) { return i == 0 ? 0 : n - i; };
  return neg(ix) + n * (neg(iy) + n * neg(iz));
}

Vec3 Grid::x(std::size_t flat) const noexcept {
  const auto n = static_cast<std::size_t>(n_);
  const double h = dx();
  return {static_cast<double>(flat % n) * h, static_cast<double>((flat / n) % n) * h,
          static_cast<double>(flat / (n * n)) * h};
}

Field::Field(const Grid& grid, int components, Representation rep)
    : grid_(grid), components_(components), rep_(rep) {
  if (components < 1) throw ContractError("field: component count must be positive");
  data_.assign(grid.size() * static_cast<std::size_t>(components), Complex{});
}

std::span<Complex> Field::component(int c) {
  if (c < 0 || c >= components_) throw ContractError("field: component out of range");
  return {data_.data() + c * grid_.size(), grid_.size()};
}

std::span<const Complex> Field::component(int c) const {
  if (c < 0 || c >= components_) throw ContractError("field: component out of range");
  return {data_.data() + c * grid_.size(), grid_.size()};
}

namespace {

void require_compatible(const Field& a, const Field& b) {
  if (!(a.grid() == b.grid()) || a.components() != b.components() ||
      a.representation() != b.representation()) {
    throw ContractError("field: incompatible operands");
  }
}

struct PlanCache {
  std::mutex mutex;
  std::map<std::pair<int, int>, fftw_plan> plans;

  ~PlanCache() {
    for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
  }

  fftw_plan get(int n, int sign) {
    std::lock_guard lock(mutex);
    auto it = plans.find({n, sign});
    if (it != plans.end()) return it->second;
    const auto total = static_cast<std::size_t>(n) * n * n;
    auto* scratch = static_cast<fftw_complex*>(fftw_malloc(total * sizeof(fftw_complex)));
    // FFTW_ESTIMATE leaves the buffer untouched and gives run-to-run
    // identical plans, which keeps outputs bit-reproducible.
    fftw_plan plan = fftw_plan_dft_3d(n, n, n, scratch, scratch, sign, FFTW_ESTIMATE);
    fftw_free(scratch);
    plans.emplace(std::make_pair(n, sign), plan);
    return plan;
  }
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

void execute(std::span<Complex> block, int n, int sign) {
  if (block.size() != static_cast<std::size_t>(n) * n * n) {
    throw ContractError("fft: block size does not match n^3");
  }
  auto* data = reinterpret_cast<fftw_complex*>(block.data());
  const bool aligned = fftw_alignment_of(reinterpret_cast<double*>(data)) == 0;
  fftw_plan plan = plan_cache().get(n, sign);
  if (aligned) {
    fftw_execute_dft(plan, data, data);
    return;
  }
  AlignedComplexVector tmp(block.begin(), block.end());
  auto* t = reinterpret_cast<fftw_complex*>(tmp.data());
  fftw_execute_dft(plan, t, t);
  std::copy(tmp.begin(), tmp.end(), block.begin());
}

}  // namespace

Field& Field::operator+=(const Field& other) {
  require_compatible(*this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_compatible(*this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Field& Field::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

void fft_forward_inplace(std::span<Complex> block, int n) {
  execute(block, n, FFTW_FORWARD);
  const double scale = 1.0 / (static_cast<double>(n) * n * n);
  for (auto& v : block) v *= scale;
}

void fft_inverse_inplace(std::span<Complex> block, int n) {
  execute(block, n, FFTW_BACKWARD);
}

Field transform(const Field& field, Direction direction) {
  const bool forward = direction == Direction::forward;
  const auto expected = forward ? Representation::physical : Representation::spectral;
  if (field.representation() != expected) {
    throw ContractError(forward ? "transform: forward requires a physical field"
                                : "transform: inverse requires a spectral field");
  }
  Field out = field;
  const int n = field.grid().n();
  for (int c = 0; c < out.components(); ++c) {
    if (forward) {
      fft_forward_inplace(out.component(c), n);
    } else {
      fft_inverse_inplace(out.component(c), n);
    }
  }
  out.set_representation(forward ? Representation::spectral : Representation::physical);
  return out;
}

int dealias_cutoff(int n) noexcept { return n / 3; }

bool is_dealiased_out(const Grid& grid, std::size_t flat) noexcept {
  const int cut = dealias_cutoff(grid.n());
  const auto k = grid.integer_wavenumber(flat);
  return std::abs(k[0]) > cut || std::abs(k[1]) > cut || std::abs(k[2]) > cut;
}

void dealias_inplace(Field& field) {
  if (field.representation() != Representation::spectral) {
    throw ContractError("dealias: spectral field required");
  }
  const Grid& g = field.grid();
  for (std::size_t m = 0; m < g.size(); ++m) {
    if (!is_dealiased_out(g, m)) continue;
    for (int c = 0; c < field.components(); ++c) field(c, m) = Complex{};
  }
}

Field dealias(const Field& field) {
  Field out = field;
  dealias_inplace(out);
  return out;
}

double l2_norm_physical(const Field& field) {
  if (field.representation() != Representation::physical) {
    throw ContractError("l2_norm_physical: physical field required");
  }
  const double h = field.grid().dx();
  double sum = 0.0;
  for (const auto& v : field.values()) sum += std::norm(v);
  return std::sqrt(sum * h * h * h);
}

double l2_norm_spectral(const Field& field) {
  if (field.representation() != Representation::spectral) {
    throw ContractError("l2_norm_spectral: spectral field required");
  }
  double sum = 0.0;
  for (const auto& v : field.values()) sum += std::norm(v);
  return std::sqrt(sum * field.grid().volume());
}

double conjugate_symmetry_defect(const Field& spectral) {
  const Grid& g = spectral.grid();
  double scale = 0.0;
  for (const auto& v : spectral.values()) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  for (int c = 0; c < spectral.components(); ++c) {
    for (std::size_t m = 0; m < g.size(); ++m) {
      const Complex d = spectral(c, m) - std::conj(spectral(c, g.conjugate_index(m)));
      worst = std::max(worst, std::abs(d));
    }
  }
  return worst / scale;
}

Field spectral_derivative(const Field& spectral, int axis) {
  if (spectral.representation() != Representation::spectral) {
    throw ContractError("spectral_derivative: spectral field required");
  }
  if (axis < 0 || axis > 2) throw ContractError("spectral_derivative: axis out of range");
  const Grid& g = spectral.grid();
  Field out(g, spectral.components(), Representation::spectral);
  for (std::size_t m = 0; m < g.size(); ++m) {
    if (g.is_nyquist(m)) continue;
    const Complex factor{0.0, g.xi(m)[axis]};
    for (int c = 0; c < spectral.components(); ++c) out(c, m) = factor * spectral(c, m);
  }
  return out;
}

namespace {

template <typename T>
void put(std::ofstream& os, T value) {
  static_assert(std::endian::native == std::endian::little,
                "snapshot I/O assumes a little-endian host");
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw DataError("snapshot: truncated file");
  return value;
}

}  // namespace

void write_snapshot(const std::string& path, const Field& field) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("snapshot: cannot open " + path + " for writing");
  os.write("RCSF", 4);
  put<std::uint32_t>(os, kSnapshotVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(field.grid().n()));
  put<double>(os, field.grid().period());
  put<std::uint32_t>(os, static_cast<std::uint32_t>(field.components()));
  put<std::uint8_t>(os, static_cast<std::uint8_t>(field.representation()));
  const auto values = field.values();
  os.write(reinterpret_cast<const char*>(values.data()),
           static_cast<std::streamsize>(values.size() * sizeof(Complex)));
  if (!os) throw DataError("snapshot: write failed for " + path);
}

Field read_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("snapshot: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "RCSF", 4) != 0) throw DataError("snapshot: bad magic");
  const auto version = get<std::uint32_t>(is);
  if (version != kSnapshotVersion) throw DataError("snapshot: unsupported version");
  const auto n = get<std::uint32_t>(is);
  const auto period = get<double>(is);
  const auto count = get<std::uint32_t>(is);
  const auto tag = get<std::uint8_t>(is);
  if (tag > 1) throw DataError("snapshot: bad representation tag");
  Field field(Grid(static_cast<int>(n), period), static_cast<int>(count),
              static_cast<Representation>(tag));
  auto values = field.values();
  is.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(Complex)));
  if (!is) throw DataError("snapshot: truncated payload");
  return field;
}

}  // namespace rcs
