#include "scatterpty/field.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "scatterpty/errors.hpp"

namespace scatterpty {

namespace {

void check_dims(int width, int height, double pitch) {
  if (width < 1 || height < 1) {
    throw ParameterError("grid dimensions must be >= 1, got " + std::to_string(width) + "x" +
                         std::to_string(height));
  }
  if (!(pitch > 0.0) || !std::isfinite(pitch)) {
    throw ParameterError("grid pitch must be positive and finite");
  }
}

std::size_t area(int width, int height) {
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

struct Taps {
  std::array<int, 4> index;
  std::array<double, 4> weight;
};

// Catmull-Rom weights for samples at offsets -1, 0, 1, 2 from floor(s).
std::array<double, 4> catmull_rom(double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  return {0.5 * (-t3 + 2.0 * t2 - t), 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
          0.5 * (-3.0 * t3 + 4.0 * t2 + t), 0.5 * (t3 - t2)};
}

std::vector<Taps> axis_taps(int n_in, int n_out, double ratio) {
  std::vector<Taps> taps(static_cast<std::size_t>(n_out));
  const int c_in = n_in / 2;
  const int c_out = n_out / 2;
  for (int j = 0; j < n_out; ++j) {
    const double s = c_in + static_cast<double>(j - c_out) / ratio;
    const double base = std::floor(s);
    const int i0 = static_cast<int>(base);
    const auto w = catmull_rom(s - base);
    Taps& tap = taps[static_cast<std::size_t>(j)];
    for (int k = 0; k < 4; ++k) {
      tap.index[k] = std::clamp(i0 - 1 + k, 0, n_in - 1);
      tap.weight[k] = w[k];
    }
  }
  return taps;
}

template <class T, class Storage>
Storage resample_separable(const T* in, int w, int h, int ow, int oh, double ratio) {
  const auto tx = axis_taps(w, ow, ratio);
  const auto ty = axis_taps(h, oh, ratio);

  std::vector<T> rows(area(ow, h));
  for (int y = 0; y < h; ++y) {
    const T* src = in + static_cast<std::size_t>(y) * w;
    T* dst = rows.data() + static_cast<std::size_t>(y) * ow;
    for (int x = 0; x < ow; ++x) {
      const Taps& t = tx[static_cast<std::size_t>(x)];
      dst[x] = t.weight[0] * src[t.index[0]] + t.weight[1] * src[t.index[1]] +
               t.weight[2] * src[t.index[2]] + t.weight[3] * src[t.index[3]];
    }
  }

  Storage out(area(ow, oh));
  for (int y = 0; y < oh; ++y) {
    const Taps& t = ty[static_cast<std::size_t>(y)];
    const T* r0 = rows.data() + static_cast<std::size_t>(t.index[0]) * ow;
    const T* r1 = rows.data() + static_cast<std::size_t>(t.index[1]) * ow;
    const T* r2 = rows.data() + static_cast<std::size_t>(t.index[2]) * ow;
    const T* r3 = rows.data() + static_cast<std::size_t>(t.index[3]) * ow;
    T* dst = out.data() + static_cast<std::size_t>(y) * ow;
    for (int x = 0; x < ow; ++x) {
      dst[x] = t.weight[0] * r0[x] + t.weight[1] * r1[x] + t.weight[2] * r2[x] +
               t.weight[3] * r3[x];
    }
  }
  return out;
}

std::pair<int, int> resampled_size(int width, int height, double ratio) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) {
    throw ParameterError("resample ratio must be positive and finite");
  }
  const auto ow = static_cast<long long>(std::llround(ratio * width));
  const auto oh = static_cast<long long>(std::llround(ratio * height));
  if (ow < 4 || oh < 4) {
    throw DegenerateGridError("resampling by " + std::to_string(ratio) + " gives a " +
                              std::to_string(ow) + "x" + std::to_string(oh) +
                              " grid; at least 4x4 is required");
  }
  return {static_cast<int>(ow), static_cast<int>(oh)};
}

template <class Grid>
Grid embed_impl(const Grid& src, int width, int height) {
  Grid out(width, height, src.pitch());
  const int dx = out.center_x() - src.center_x();
  const int dy = out.center_y() - src.center_y();
  const int x0 = std::max(0, -dx);
  const int x1 = std::min(src.width(), width - dx);
  const int y0 = std::max(0, -dy);
  const int y1 = std::min(src.height(), height - dy);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) out(x + dx, y + dy) = src(x, y);
  }
  return out;
}

}  // namespace

ComplexField::ComplexField(int width, int height, double pitch)
    : width_(width), height_(height), pitch_(pitch) {
  check_dims(width, height, pitch);
  data_.assign(area(width, height), Complex{});
}

ComplexField::ComplexField(int width, int height, double pitch, AlignedVector<Complex> data)
    : width_(width), height_(height), pitch_(pitch), data_(std::move(data)) {
  check_dims(width, height, pitch);
  if (data_.size() != area(width, height)) {
    throw ParameterError("field data size does not match its dimensions");
  }
}

void ComplexField::set_pitch(double pitch) {
  check_dims(width_ < 1 ? 1 : width_, height_ < 1 ? 1 : height_, pitch);
  pitch_ = pitch;
}

RealImage::RealImage(int width, int height, double pitch)
    : width_(width), height_(height), pitch_(pitch) {
  check_dims(width, height, pitch);
  data_.assign(area(width, height), 0.0);
}

RealImage::RealImage(int width, int height, double pitch, std::vector<double> data)
    : width_(width), height_(height), pitch_(pitch), data_(std::move(data)) {
  check_dims(width, height, pitch);
  if (data_.size() != area(width, height)) {
    throw ParameterError("image data size does not match its dimensions");
  }
  for (double v : data_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ParameterError("image samples must be finite and non-negative");
    }
  }
}

void RealImage::set_pitch(double pitch) {
  check_dims(width_ < 1 ? 1 : width_, height_ < 1 ? 1 : height_, pitch);
  pitch_ = pitch;
}

double RealImage::sum() const noexcept {
  double s = 0.0;
  for (double v : data_) s += v;
  return s;
}

double RealImage::mean() const noexcept {
  return data_.empty() ? 0.0 : sum() / static_cast<double>(data_.size());
}

double RealImage::max() const noexcept {
  double m = 0.0;
  for (double v : data_) m = std::max(m, v);
  return m;
}

double rect_weight(int offset, int size) noexcept {
  const long long twice = 2LL * std::llabs(offset);
  if (twice < size) return 1.0;
  if (twice == size) return 0.5;
  return 0.0;
}

ComplexField resample_bicubic(const ComplexField& field, double ratio) {
  const auto [ow, oh] = resampled_size(field.width(), field.height(), ratio);
  auto data = resample_separable<Complex, AlignedVector<Complex>>(
      field.raw(), field.width(), field.height(), ow, oh, ratio);
  return ComplexField(ow, oh, field.pitch() / ratio, std::move(data));
}

RealImage resample_bicubic(const RealImage& image, double ratio) {
  const auto [ow, oh] = resampled_size(image.width(), image.height(), ratio);
  auto data = resample_separable<double, std::vector<double>>(
      image.data().data(), image.width(), image.height(), ow, oh, ratio);
  for (double& v : data) v = std::max(v, 0.0);
  return RealImage(ow, oh, image.pitch() / ratio, std::move(data));
}

double energy(const ComplexField& field) noexcept {
  double s = 0.0;
  for (const Complex& v : field.data()) s += std::norm(v);
  return s * field.pitch() * field.pitch();
}

ComplexField rect_window(const ComplexField& field, int a, int b) {
  if (a <= 0 || b <= 0) {
    throw ParameterError("support sizes must be positive");
  }
  if (a > field.width() || b > field.height()) {
    throw ParameterError("support " + std::to_string(a) + "x" + std::to_string(b) +
                         " does not fit a " + std::to_string(field.width()) + "x" +
                         std::to_string(field.height()) + " grid");
  }
  ComplexField out(field.width(), field.height(), field.pitch());
  const int cx = field.center_x();
  const int cy = field.center_y();
  std::vector<double> wx(static_cast<std::size_t>(field.width()));
  for (int x = 0; x < field.width(); ++x) wx[static_cast<std::size_t>(x)] = rect_weight(x - cx, a);
  for (int y = 0; y < field.height(); ++y) {
    const double wy = rect_weight(y - cy, b);
    if (wy == 0.0) continue;
    for (int x = 0; x < field.width(); ++x) {
      const double w = wy * wx[static_cast<std::size_t>(x)];
      if (w != 0.0) out(x, y) = w * field(x, y);
    }
  }
  return out;
}

ComplexField embed_centered(const ComplexField& field, int width, int height) {
  return embed_impl(field, width, height);
}

RealImage embed_centered(const RealImage& image, int width, int height) {
  return embed_impl(image, width, height);
}

ComplexField rotate180(const ComplexField& field) {
  const int w = field.width();
  const int h = field.height();
  ComplexField out(w, h, field.pitch());
  const int cx = field.center_x();
  const int cy = field.center_y();
  for (int y = 0; y < h; ++y) {
    const int ry = ((2 * cy - y) % h + h) % h;
    for (int x = 0; x < w; ++x) {
      const int rx = ((2 * cx - x) % w + w) % w;
      out(rx, ry) = field(x, y);
    }
  }
  return out;
}

ComplexField to_complex(const RealImage& image) {
  ComplexField out(image.width(), image.height(), image.pitch());
  auto src = image.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = Complex(src[i], 0.0);
  return out;
}

RealImage intensity(const ComplexField& field) {
  std::vector<double> v(field.size());
  auto src = field.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::norm(src[i]);
  return RealImage(field.width(), field.height(), field.pitch(), std::move(v));
}

RealImage modulus(const ComplexField& field) {
  std::vector<double> v(field.size());
  auto src = field.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sqrt(std::norm(src[i]));
  return RealImage(field.width(), field.height(), field.pitch(), std::move(v));
}

double relative_error(const ComplexField& a, const ComplexField& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ParameterError("relative_error: grid mismatch");
  }
  double num = 0.0;
  double den = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    num += std::norm(da[i] - db[i]);
    den += std::norm(db[i]);
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : 1.0;
  return std::sqrt(num / den);
}

int next_pow2(int n) {
  if (n < 1) throw ParameterError("next_pow2 requires n >= 1");
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

bool all_finite(const ComplexField& field) noexcept {
  for (const Complex& v : field.data()) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

}  // namespace scatterpty
