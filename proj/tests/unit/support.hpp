#pragma once

// Independent reference computations and random generators for the unit
// tests. Nothing here calls into the propagation code under test.

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "scatterpty/field.hpp"

namespace oracle {

using scatterpty::Complex;
using scatterpty::ComplexField;
constexpr double kPi = std::numbers::pi;

inline int signed_bin(int k, int n) { return k < (n + 1) / 2 ? k : k - n; }

// Direct O(N^4) 2-D DFT, sign -1 forward.
inline std::vector<Complex> dft2(const std::vector<Complex>& x, int n, int sign) {
  std::vector<Complex> out(x.size());
  for (int q = 0; q < n; ++q) {
    for (int p = 0; p < n; ++p) {
      Complex acc = 0.0;
      for (int y = 0; y < n; ++y) {
        for (int xx = 0; xx < n; ++xx) {
          const double ang = sign * 2.0 * kPi * (static_cast<double>(p) * xx + static_cast<double>(q) * y) / n;
          acc += x[static_cast<std::size_t>(y * n + xx)] * Complex(std::cos(ang), std::sin(ang));
        }
      }
      out[static_cast<std::size_t>(q * n + p)] = acc;
    }
  }
  return out;
}

// Angular-spectrum propagation written from the continuous formula with a
// direct DFT; no band-limit guard, so callers keep z small enough that the
// guard in the code under test is inactive.
inline ComplexField asm_by_direct_dft(const ComplexField& f, double wavelength, double z) {
  const int n = f.width();
  std::vector<Complex> x(f.data().begin(), f.data().end());
  auto spec = dft2(x, n, -1);
  const double L = n * f.pitch();
  for (int q = 0; q < n; ++q) {
    for (int p = 0; p < n; ++p) {
      const double u = signed_bin(p, n) / L;
      const double v = signed_bin(q, n) / L;
      const double arg = 1.0 / (wavelength * wavelength) - u * u - v * v;
      Complex h = 0.0;
      if (arg > 0.0) h = std::polar(1.0, 2.0 * kPi * z * std::sqrt(arg));
      spec[static_cast<std::size_t>(q * n + p)] *= h;
    }
  }
  auto back = dft2(spec, n, +1);
  ComplexField out(n, n, f.pitch());
  for (std::size_t i = 0; i < back.size(); ++i) out.data()[i] = back[i] / double(n * n);
  return out;
}

// Paraxial Gaussian beam with waist w0 at z = 0, including the exp(jkz)
// carrier: U = q0/(q0 + z) exp(jkz) exp(jk r^2 / (2 (q0 + z))), q0 = -j zR.
inline Complex gaussian_beam(double r2, double w0, double wavelength, double z) {
  const double k = 2.0 * kPi / wavelength;
  const double zr = kPi * w0 * w0 / wavelength;
  const Complex q0(0.0, -zr);
  const Complex qz = q0 + z;
  const Complex j(0.0, 1.0);
  return (q0 / qz) * std::exp(j * k * z) * std::exp(j * k * r2 / (2.0 * qz));
}

// Fraunhofer single slit: first zero of sinc^2 at lambda z / w from centre.
inline double slit_first_zero(double wavelength, double z, double width) {
  return wavelength * z / width;
}

// Airy pattern first dark ring radius.
inline double airy_first_zero(double wavelength, double z, double diameter) {
  return 1.21967 * wavelength * z / diameter;
}

// Box of unit height on [a, b) convolved with a Gaussian of std sigma.
inline double blurred_box(double x, double a, double b, double sigma) {
  const double s = sigma * std::sqrt(2.0);
  return 0.5 * (std::erf((x - a) / s) - std::erf((x - b) / s));
}

inline double relative_l2(const ComplexField& a, const ComplexField& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a.data()[i] - b.data()[i]);
    den += std::norm(b.data()[i]);
  }
  return std::sqrt(num / den);
}

}  // namespace oracle

namespace gen {

using scatterpty::Complex;
using scatterpty::ComplexField;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& r, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(r);
}

inline int integer(std::mt19937_64& r, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(r);
}

inline ComplexField random_field(std::mt19937_64& r, int w, int h, double pitch) {
  ComplexField f(w, h, pitch);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& v : f.data()) v = Complex(n(r), n(r));
  return f;
}

// Random field whose spectrum is confined to |u|, |v| < fraction * Nyquist,
// built as a sum of in-band plane waves (no FFT involved).
inline ComplexField band_limited_field(std::mt19937_64& r, int n, double pitch, double fraction,
                                       int waves = 24) {
  ComplexField f(n, n, pitch);
  const int kmax = static_cast<int>(std::floor(fraction * n / 2.0));
  std::normal_distribution<double> amp(0.0, 1.0);
  for (int w = 0; w < waves; ++w) {
    const int p = integer(r, -kmax + 1, kmax - 1);
    const int q = integer(r, -kmax + 1, kmax - 1);
    const Complex a(amp(r), amp(r));
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const double ang = 2.0 * oracle::kPi * (static_cast<double>(p) * x + static_cast<double>(q) * y) / n;
        f(x, y) += a * Complex(std::cos(ang), std::sin(ang));
      }
    }
  }
  return f;
}

// Smooth localized field: sum of wide Gaussians kept away from the edges.
inline ComplexField gaussian_blobs(std::mt19937_64& r, int n, double pitch, double sigma_px,
                                   int blobs = 6) {
  ComplexField f(n, n, pitch);
  for (int b = 0; b < blobs; ++b) {
    const double cx = uniform(r, 0.35 * n, 0.65 * n);
    const double cy = uniform(r, 0.35 * n, 0.65 * n);
    const Complex a(uniform(r, -1, 1), uniform(r, -1, 1));
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        f(x, y) += a * std::exp(-d2 / (2.0 * sigma_px * sigma_px));
      }
    }
  }
  return f;
}

}  // namespace gen
