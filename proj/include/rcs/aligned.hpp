#pragma once

#include <complex>
#include <cstddef>
#include <new>
#include <vector>

namespace rcs {

/// Allocator backed by fftw_malloc so every field buffer satisfies the SIMD
/// alignment the cached FFT plans were created with.
template <typename T>
struct FftwAllocator {
  using value_type = T;

  FftwAllocator() noexcept = default;
  template <typename U>
  FftwAllocator(const FftwAllocator<U>&) noexcept {}

  T* allocate(std::size_t n);
  void deallocate(T* p, std::size_t) noexcept;

  template <typename U>
  bool operator==(const FftwAllocator<U>&) const noexcept {
    return true;
  }
};

void* fftw_aligned_alloc(std::size_t bytes);
void fftw_aligned_free(void* p) noexcept;

template <typename T>
T* FftwAllocator<T>::allocate(std::size_t n) {
  void* p = fftw_aligned_alloc(n * sizeof(T));
  if (p == nullptr && n != 0) throw std::bad_alloc();
  return static_cast<T*>(p);
}

template <typename T>
void FftwAllocator<T>::deallocate(T* p, std::size_t) noexcept {
  fftw_aligned_free(p);
}

using AlignedComplexVector =
    std::vector<std::complex<double>, FftwAllocator<std::complex<double>>>;

}  // namespace rcs
