#include "scatterpty/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <csetjmp>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "scatterpty/errors.hpp"

namespace scatterpty::io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary field I/O assumes a little-endian host");

constexpr char kFieldMagic[8] = {'S', 'P', 'T', 'Y', 'F', 'L', 'D', '1'};

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

// libpng reports errors by longjmp; the handler records the message in the
// buffer passed as error_ptr.
void png_error_handler(png_structp png, png_const_charp msg) {
  auto* buffer = static_cast<char*>(png_get_error_ptr(png));
  std::snprintf(buffer, 256, "%s", msg);
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

struct ReadGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~ReadGuard() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct WriteGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~WriteGuard() { png_destroy_write_struct(&png, &info); }
};

}  // namespace

GrayRaster read_png_gray(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  png_byte header[8];
  if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
    throw IoError(path.string() + " is not a PNG file");
  }
  char message[256] = {0};
  GrayRaster raster;
  std::vector<png_byte> row;
  ReadGuard g;
  g.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, message, png_error_handler,
                                 png_warning_handler);
  if (g.png == nullptr) throw IoError("png: out of memory");
  g.info = png_create_info_struct(g.png);
  if (setjmp(png_jmpbuf(g.png))) throw IoError(path.string() + ": " + message);

  png_init_io(g.png, file.get());
  png_set_sig_bytes(g.png, 8);
  png_read_info(g.png, g.info);
  const int color = png_get_color_type(g.png, g.info);
  const int depth = png_get_bit_depth(g.png, g.info);
  if (color != PNG_COLOR_TYPE_GRAY) {
    throw IoError(path.string() + ": only grayscale PNG images are supported");
  }
  if (depth < 8) png_set_expand_gray_1_2_4_to_8(g.png);
  png_read_update_info(g.png, g.info);
  raster.width = static_cast<int>(png_get_image_width(g.png, g.info));
  raster.height = static_cast<int>(png_get_image_height(g.png, g.info));
  raster.bit_depth = depth == 16 ? 16 : 8;
  row.resize(png_get_rowbytes(g.png, g.info));
  raster.pixels.resize(static_cast<std::size_t>(raster.width) * raster.height);
  for (int y = 0; y < raster.height; ++y) {
    png_read_row(g.png, row.data(), nullptr);
    std::uint16_t* dst = raster.pixels.data() + static_cast<std::size_t>(y) * raster.width;
    for (int x = 0; x < raster.width; ++x) {
      const auto i = static_cast<std::size_t>(x);
      dst[x] = raster.bit_depth == 16
                   ? static_cast<std::uint16_t>((row[2 * i] << 8) | row[2 * i + 1])
                   : row[i];
    }
  }
  png_read_end(g.png, nullptr);
  return raster;
}

void write_png_gray16(const std::filesystem::path& path, const GrayRaster& raster) {
  if (raster.pixels.size() != static_cast<std::size_t>(raster.width) * raster.height) {
    throw ParameterError("raster size does not match its dimensions");
  }
  FilePtr file = open_file(path, "wb");
  char message[256] = {0};
  std::vector<png_byte> row(static_cast<std::size_t>(raster.width) * 2);
  WriteGuard g;
  g.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, message, png_error_handler,
                                  png_warning_handler);
  if (g.png == nullptr) throw IoError("png: out of memory");
  g.info = png_create_info_struct(g.png);
  if (setjmp(png_jmpbuf(g.png))) throw IoError(path.string() + ": " + message);

  png_init_io(g.png, file.get());
  png_set_IHDR(g.png, g.info, static_cast<png_uint_32>(raster.width),
               static_cast<png_uint_32>(raster.height), 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(g.png, g.info);
  for (int y = 0; y < raster.height; ++y) {
    const std::uint16_t* src = raster.pixels.data() + static_cast<std::size_t>(y) * raster.width;
    for (int x = 0; x < raster.width; ++x) {
      row[2 * static_cast<std::size_t>(x)] = static_cast<png_byte>(src[x] >> 8);
      row[2 * static_cast<std::size_t>(x) + 1] = static_cast<png_byte>(src[x] & 0xff);
    }
    png_write_row(g.png, row.data());
  }
  png_write_end(g.png, nullptr);
}

Quantized quantize16(const RealImage& image) {
  Quantized q;
  const double peak = image.max();
  q.scale = peak > 0.0 ? peak / 65535.0 : 1.0;
  q.raster.width = image.width();
  q.raster.height = image.height();
  q.raster.bit_depth = 16;
  q.raster.pixels.resize(image.size());
  auto src = image.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double v = std::round(src[i] / q.scale);
    q.raster.pixels[i] = static_cast<std::uint16_t>(std::clamp(v, 0.0, 65535.0));
  }
  return q;
}

RealImage dequantize(const GrayRaster& raster, double scale, double pitch) {
  std::vector<double> v(raster.pixels.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = raster.pixels[i] * scale;
  return RealImage(raster.width, raster.height, pitch, std::move(v));
}

void write_field(const std::filesystem::path& path, const ComplexField& field) {
  FilePtr file = open_file(path, "wb");
  const std::uint64_t dims[2] = {static_cast<std::uint64_t>(field.width()),
                                 static_cast<std::uint64_t>(field.height())};
  const double pitch = field.pitch();
  bool ok = std::fwrite(kFieldMagic, 1, 8, file.get()) == 8 &&
            std::fwrite(dims, sizeof(std::uint64_t), 2, file.get()) == 2 &&
            std::fwrite(&pitch, sizeof(double), 1, file.get()) == 1 &&
            std::fwrite(field.raw(), sizeof(Complex), field.size(), file.get()) == field.size();
  if (!ok) throw IoError("short write to " + path.string());
}

ComplexField read_field(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  char magic[8];
  std::uint64_t dims[2];
  double pitch = 0.0;
  if (std::fread(magic, 1, 8, file.get()) != 8 || std::memcmp(magic, kFieldMagic, 8) != 0) {
    throw IoError(path.string() + " is not a field file");
  }
  if (std::fread(dims, sizeof(std::uint64_t), 2, file.get()) != 2 ||
      std::fread(&pitch, sizeof(double), 1, file.get()) != 1) {
    throw IoError(path.string() + ": truncated header");
  }
  if (dims[0] == 0 || dims[1] == 0 || dims[0] > (1u << 16) || dims[1] > (1u << 16)) {
    throw IoError(path.string() + ": implausible dimensions");
  }
  ComplexField field(static_cast<int>(dims[0]), static_cast<int>(dims[1]), pitch);
  if (std::fread(field.raw(), sizeof(Complex), field.size(), file.get()) != field.size()) {
    throw IoError(path.string() + ": truncated data");
  }
  return field;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("short write to " + path.string());
}

std::string csv_escape(const std::string& value) {
  if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_double(double value) {
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

}  // namespace scatterpty::io
