#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scatterpty/field.hpp"

namespace scatterpty::io {

/// Grayscale raster as stored on disk.
struct GrayRaster {
  int width = 0;
  int height = 0;
  int bit_depth = 16;  // 8 or 16
  std::vector<std::uint16_t> pixels;
};

/// Reads an 8- or 16-bit grayscale PNG (palette and colour images are
/// rejected).
GrayRaster read_png_gray(const std::filesystem::path& path);

/// Writes a 16-bit grayscale PNG. Encoding is deterministic for identical
/// input.
void write_png_gray16(const std::filesystem::path& path, const GrayRaster& raster);

/// Quantizes a non-negative image to 16 bits as round(value / scale), with
/// scale = max / 65535 so the brightest pixel maps to full range.
struct Quantized {
  GrayRaster raster;
  double scale = 1.0;
};
Quantized quantize16(const RealImage& image);

/// Inverse of quantize16 (up to quantization error).
RealImage dequantize(const GrayRaster& raster, double scale, double pitch);

/// Binary complex-field layout, little-endian:
///   bytes 0..7   magic "SPTYFLD1"
///   bytes 8..15  uint64 width
///   bytes 16..23 uint64 height
///   bytes 24..31 float64 pitch (meters)
///   then width * height pairs of float64 (real, imag), row-major.
void write_field(const std::filesystem::path& path, const ComplexField& field);
ComplexField read_field(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// RFC 4180 field quoting.
std::string csv_escape(const std::string& value);

/// Shortest "%.17g"-style text that parses back to the same double.
std::string format_double(double value);

}  // namespace scatterpty::io
