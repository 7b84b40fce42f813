#pragma once

#include <complex>
#include <cstddef>
#include <cstdlib>
#include <new>
#include <span>
#include <vector>

namespace scatterpty {

using Complex = std::complex<double>;

/// 64-byte aligned allocator so field storage can be handed to SIMD FFT
/// kernels without copies.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t kAlignment = 64;

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    std::size_t bytes = n * sizeof(T);
    bytes = (bytes + kAlignment - 1) / kAlignment * kAlignment;
    if (bytes == 0) bytes = kAlignment;
    void* p = std::aligned_alloc(kAlignment, bytes);
    if (p == nullptr) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { std::free(p); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

template <class T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

/// Two-dimensional complex sample grid with a physical pitch.
///
/// Storage is row-major (`index = y * width + x`). The optical axis sits at
/// sample (width / 2, height / 2); for even sizes that is the zero-frequency
/// bin of an unshifted DFT after an ifftshift, so windowing and propagation
/// agree on where the centre is. Sample x has coordinate
/// `(x - width / 2) * pitch`.
class ComplexField {
 public:
  ComplexField() = default;
  ComplexField(int width, int height, double pitch);
  ComplexField(int width, int height, double pitch, AlignedVector<Complex> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  double pitch() const noexcept { return pitch_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool square() const noexcept { return width_ == height_; }

  int center_x() const noexcept { return width_ / 2; }
  int center_y() const noexcept { return height_ / 2; }

  Complex& operator()(int x, int y) { return data_[index(x, y)]; }
  const Complex& operator()(int x, int y) const { return data_[index(x, y)]; }

  std::span<Complex> data() noexcept { return data_; }
  std::span<const Complex> data() const noexcept { return data_; }
  Complex* raw() noexcept { return data_.data(); }
  const Complex* raw() const noexcept { return data_.data(); }

  void set_pitch(double pitch);

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  double pitch_ = 1.0;
  AlignedVector<Complex> data_;
};

/// Non-negative real sample grid (irradiance or photon counts).
///
/// Entries are validated on construction; mutable accessors are provided for
/// in-place kernels and leave the non-negativity contract to the caller.
class RealImage {
 public:
  RealImage() = default;
  RealImage(int width, int height, double pitch);
  RealImage(int width, int height, double pitch, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  double pitch() const noexcept { return pitch_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  int center_x() const noexcept { return width_ / 2; }
  int center_y() const noexcept { return height_ / 2; }

  double& operator()(int x, int y) { return data_[index(x, y)]; }
  double operator()(int x, int y) const { return data_[index(x, y)]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  void set_pitch(double pitch);
  double sum() const noexcept;
  double mean() const noexcept;
  double max() const noexcept;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  double pitch_ = 1.0;
  std::vector<double> data_;
};

/// rect(offset / size) evaluated exactly on integer sample offsets:
/// 1 inside, 1/2 on the boundary |offset| = size / 2 (even sizes only), 0
/// outside.
double rect_weight(int offset, int size) noexcept;

/// Catmull-Rom (a = -0.5) resampling by `ratio` with edge clamping. Output
/// size is round(ratio * N) per axis and output pitch is pitch / ratio; the
/// grid centres stay aligned. Real and imaginary parts are interpolated
/// independently. Throws DegenerateGridError if either output axis is < 4.
ComplexField resample_bicubic(const ComplexField& field, double ratio);

/// Same kernel for real images; negative overshoot is clamped to zero.
RealImage resample_bicubic(const RealImage& image, double ratio);

/// Sum |f|^2 * pitch^2. Accumulated sequentially in storage order.
double energy(const ComplexField& field) noexcept;

/// Multiplies sample [m, n] by rect(m / a) rect(n / b), with m and n measured
/// from the grid centre.
ComplexField rect_window(const ComplexField& field, int a, int b);

/// Zero-pads or centre-crops to the requested size, keeping the centre sample
/// fixed.
ComplexField embed_centered(const ComplexField& field, int width, int height);
RealImage embed_centered(const RealImage& image, int width, int height);

/// Point reflection through the grid centre, x -> 2 * cx - x (mod width).
ComplexField rotate180(const ComplexField& field);

ComplexField to_complex(const RealImage& image);
RealImage intensity(const ComplexField& field);
RealImage modulus(const ComplexField& field);

/// ||a - b|| / ||b|| over complex samples; grids must match.
double relative_error(const ComplexField& a, const ComplexField& b);

/// Smallest power of two >= n (n >= 1).
int next_pow2(int n);

bool all_finite(const ComplexField& field) noexcept;

}  // namespace scatterpty
