#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rcs/aligned.hpp"

namespace rcs {

using Complex = std::complex<double>;
using Vec3 = std::array<double, 3>;

/// Periodic cube of side `period` sampled with `n` points per axis.
///
/// The box side is 2*pi*L in rescaled units, so lattice wavenumbers are
/// integer multiples of 1/L. Flat indices are x-fastest:
/// `flat = ix + n * (iy + n * iz)`. The integer wavenumber of index `i` is
/// `i` for `i < n/2` and `i - n` otherwise, so the Nyquist index `n/2` maps to
/// `-n/2` and appears exactly once.
class Grid {
 public:
  Grid(int n_per_axis, double period);

  int n() const noexcept { return n_; }
  double period() const noexcept { return period_; }
  /// Wavenumber spacing 1/L = 2*pi/period.
  double spacing() const noexcept { return spacing_; }
  /// Physical lattice spacing period/n.
  double dx() const noexcept { return period_ / n_; }
  double volume() const noexcept { return period_ * period_ * period_; }
  std::size_t size() const noexcept { return size_; }

  int wavenumber_index(int i) const noexcept { return i < n_ / 2 ? i : i - n_; }
  std::array<int, 3> integer_wavenumber(std::size_t flat) const noexcept;
  Vec3 xi(std::size_t flat) const noexcept;
  double xi_norm(std::size_t flat) const noexcept;
  /// Largest resolved |xi|: the lattice corner sqrt(3) * (n/2) / L.
  double xi_max() const noexcept;
  /// True when any axis sits on the Nyquist index.
  bool is_nyquist(std::size_t flat) const noexcept;
  /// Flat index of the mode with wavenumber -k (conjugate partner).
  std::size_t conjugate_index(std::size_t flat) const noexcept;

  std::size_t flat(int ix, int iy, int iz) const noexcept {
    return static_cast<std::size_t>(ix) +
           static_cast<std::size_t>(n_) *
               (static_cast<std::size_t>(iy) + static_cast<std::size_t>(n_) * iz);
  }
  Vec3 x(std::size_t flat) const noexcept;

  bool operator==(const Grid& other) const noexcept {
    return n_ == other.n_ && period_ == other.period_;
  }

 private:
  int n_;
  double period_;
  double spacing_;
  std::size_t size_;
};

/// Validated constructor: n must be a power of two in [8, 512] and period > 0.
Grid make_grid(int n_per_axis, double period);

enum class Representation : std::uint8_t { physical = 0, spectral = 1 };
enum class Direction { forward, inverse };

/// Complex samples of a scalar or vector field over a grid.
///
/// Storage is component-major: component `c` occupies
/// `[c * n^3, (c + 1) * n^3)` in x-fastest order.
class Field {
 public:
  Field(const Grid& grid, int components, Representation rep);

  const Grid& grid() const noexcept { return grid_; }
  int components() const noexcept { return components_; }
  Representation representation() const noexcept { return rep_; }
  void set_representation(Representation rep) noexcept { rep_ = rep; }

  std::span<Complex> component(int c);
  std::span<const Complex> component(int c) const;
  std::span<Complex> values() noexcept { return {data_.data(), data_.size()}; }
  std::span<const Complex> values() const noexcept {
    return {data_.data(), data_.size()};
  }

  Complex& operator()(int c, std::size_t flat) { return data_[c * grid_.size() + flat]; }
  const Complex& operator()(int c, std::size_t flat) const {
    return data_[c * grid_.size() + flat];
  }

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);

 private:
  Grid grid_;
  int components_;
  Representation rep_;
  AlignedComplexVector data_;
};

/// Forward: f_hat(k) = n^-3 sum_x f(x) exp(-i k.x). Inverse: f(x) = sum_k
/// f_hat(k) exp(i k.x). With this convention the constant field c has mode
/// zero equal to c and Parseval reads n^-3 sum |f|^2 = sum |f_hat|^2.
Field transform(const Field& field, Direction direction);

/// In-place 3-D transforms of one component block of n^3 values.
void fft_forward_inplace(std::span<Complex> block, int n);
void fft_inverse_inplace(std::span<Complex> block, int n);

/// Largest retained axis index under the two-thirds rule: floor(n/3).
int dealias_cutoff(int n) noexcept;
bool is_dealiased_out(const Grid& grid, std::size_t flat) noexcept;
/// Zero every coefficient with any axis wavenumber index beyond floor(n/3).
Field dealias(const Field& field);
void dealias_inplace(Field& field);

/// Volume-weighted L2 norm in physical space, (dx^3 sum |f|^2)^(1/2).
double l2_norm_physical(const Field& field);
/// The same norm computed from spectral coefficients, (V sum |f_hat|^2)^(1/2).
double l2_norm_spectral(const Field& field);

/// Max relative deviation from f_hat(-k) = conj(f_hat(k)) over all modes.
double conjugate_symmetry_defect(const Field& spectral);

/// Spectral derivative along `axis` (multiplication by i xi_axis), Nyquist zeroed.
Field spectral_derivative(const Field& spectral, int axis);

/// Binary snapshot: header {"RCSF", version u32, n u32, period f64,
/// component count u32, representation u8} followed by little-endian f64
/// (re, im) pairs in x-fastest order, one component after another.
/// Coefficients follow the transform normalization documented above.
inline constexpr std::uint32_t kSnapshotVersion = 1;
void write_snapshot(const std::string& path, const Field& field);
Field read_snapshot(const std::string& path);

}  // namespace rcs
