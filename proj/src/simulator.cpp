#include "scatterpty/simulator.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "scatterpty/errors.hpp"
#include "scatterpty/io.hpp"

namespace scatterpty {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ParameterError(std::string(name) + " must be positive and finite");
  }
}

// 5x7 glyphs, one string per row, '#' = lit cell.
struct Glyph {
  char ch;
  std::array<const char*, 7> rows;
};

constexpr std::array<Glyph, 39> kFont{{
    {'A', {".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
    {'B', {"####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."}},
    {'C', {".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."}},
    {'D', {"####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####."}},
    {'E', {"#####", "#....", "#....", "####.", "#....", "#....", "#####"}},
    {'F', {"#####", "#....", "#....", "####.", "#....", "#....", "#...."}},
    {'G', {".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".####"}},
    {'H', {"#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
    {'I', {".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."}},
    {'J', {"..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."}},
    {'K', {"#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"}},
    {'L', {"#....", "#....", "#....", "#....", "#....", "#....", "#####"}},
    {'M', {"#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"}},
    {'N', {"#...#", "#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#"}},
    {'O', {".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
    {'P', {"####.", "#...#", "#...#", "####.", "#....", "#....", "#...."}},
    {'Q', {".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"}},
    {'R', {"####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"}},
    {'S', {".####", "#....", "#....", ".###.", "....#", "....#", "####."}},
    {'T', {"#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."}},
    {'U', {"#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
    {'V', {"#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."}},
    {'W', {"#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#."}},
    {'X', {"#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"}},
    {'Y', {"#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."}},
    {'Z', {"#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"}},
    {'0', {".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."}},
    {'1', {"..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."}},
    {'2', {".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"}},
    {'3', {"#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."}},
    {'4', {"...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."}},
    {'5', {"#####", "#....", "####.", "....#", "....#", "#...#", ".###."}},
    {'6', {"..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."}},
    {'7', {"#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."}},
    {'8', {".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."}},
    {'9', {".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."}},
    {'-', {".....", ".....", ".....", "#####", ".....", ".....", "....."}},
    {'.', {".....", ".....", ".....", ".....", ".....", ".##..", ".##.."}},
    {' ', {".....", ".....", ".....", ".....", ".....", ".....", "....."}},
}};

const Glyph& find_glyph(char c) {
  const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (const Glyph& g : kFont) {
    if (g.ch == up) return g;
  }
  throw ParameterError(std::string("text target: no glyph for character '") + c + "'");
}

// Sets every sample whose centre lies in [x0, x1) x [y0, y1) to one.
void fill_box(ComplexField& f, const Box& b) {
  const double p = f.pitch();
  const int cx = f.center_x();
  const int cy = f.center_y();
  const int i0 = std::max(0, static_cast<int>(std::ceil(b.x0 / p)) + cx);
  const int i1 = std::min(f.width(), static_cast<int>(std::ceil(b.x1 / p)) + cx);
  const int j0 = std::max(0, static_cast<int>(std::ceil(b.y0 / p)) + cy);
  const int j1 = std::min(f.height(), static_cast<int>(std::ceil(b.y1 / p)) + cy);
  for (int j = j0; j < j1; ++j) {
    for (int i = i0; i < i1; ++i) f(i, j) = 1.0;
  }
}

std::pair<int, int> target_size(const TargetSpec& spec, double pitch) {
  const auto w = std::llround(spec.extent_x / pitch);
  const auto h = std::llround(spec.extent_y / pitch);
  if (w < 1 || h < 1) throw ParameterError("target extent is smaller than one sample");
  return {static_cast<int>(w), static_cast<int>(h)};
}

void check_inside(const Box& b, const TargetSpec& spec) {
  constexpr double slack = 1e-12;
  if (b.x0 < -spec.extent_x / 2 - slack || b.x1 > spec.extent_x / 2 + slack ||
      b.y0 < -spec.extent_y / 2 - slack || b.y1 > spec.extent_y / 2 + slack) {
    throw ParameterError("target layout does not fit the requested extent");
  }
}

ComplexField make_usaf(const TargetSpec& spec, double pitch) {
  const auto layout = usaf_layout(spec);
  for (const auto& e : layout) {
    if (e.bar_width < 2.0 * pitch) {
      throw ParameterError("group " + std::to_string(e.group) + " element " +
                           std::to_string(e.element) + " (" +
                           std::to_string(e.frequency * 1e-3) +
                           " lp/mm) is not resolvable at this pitch");
    }
  }
  const auto [w, h] = target_size(spec, pitch);
  ComplexField f(w, h, pitch);
  for (const auto& e : layout) {
    const double bw = e.bar_width;
    for (int k = 0; k < 3; ++k) {
      const double off = 2.0 * k * bw;
      fill_box(f, {e.horizontal.x0, e.horizontal.y0 + off, e.horizontal.x1,
                   e.horizontal.y0 + off + bw});
      fill_box(f, {e.vertical.x0 + off, e.vertical.y0, e.vertical.x0 + off + bw,
                   e.vertical.y1});
    }
  }
  return f;
}

ComplexField make_text(const TargetSpec& spec, double pitch) {
  const auto [w, h] = target_size(spec, pitch);
  ComplexField f(w, h, pitch);
  if (spec.text.empty()) return f;
  const double cell = spec.glyph_height / 7.0;
  if (cell < 2.0 * pitch) throw ParameterError("text glyph strokes are narrower than two samples");
  const auto n = static_cast<double>(spec.text.size());
  const double width = (6.0 * n - 1.0) * cell;
  const double x_start = -width / 2.0;
  const double y_start = -spec.glyph_height / 2.0;
  check_inside({x_start, y_start, x_start + width, y_start + spec.glyph_height}, spec);
  for (std::size_t c = 0; c < spec.text.size(); ++c) {
    const Glyph& g = find_glyph(spec.text[c]);
    const double gx = x_start + 6.0 * static_cast<double>(c) * cell;
    for (int row = 0; row < 7; ++row) {
      for (int col = 0; col < 5; ++col) {
        if (g.rows[static_cast<std::size_t>(row)][col] != '#') continue;
        fill_box(f, {gx + col * cell, y_start + row * cell, gx + (col + 1) * cell,
                     y_start + (row + 1) * cell});
      }
    }
  }
  return f;
}

ComplexField make_from_file(const TargetSpec& spec, double pitch) {
  const auto raster = io::read_png_gray(spec.path);
  const double full = raster.bit_depth == 16 ? 65535.0 : 255.0;
  std::vector<double> v(raster.pixels.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = raster.pixels[i] / full;
  const auto [w, h] = target_size(spec, pitch);
  RealImage img(raster.width, raster.height, spec.extent_x / raster.width, std::move(v));
  const double ratio = static_cast<double>(w) / raster.width;
  if (std::abs(ratio - 1.0) > 1e-12) img = resample_bicubic(img, ratio);
  img = embed_centered(img, w, h);
  ComplexField f(w, h, pitch);
  auto src = img.data();
  auto dst = f.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::min(src[i], 1.0);
  return f;
}

// Largest |x| or |y| (meters) of any nonzero sample, measured to the sample
// edge.
double occupied_radius(const ComplexField& f) {
  double r = 0.0;
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      if (f(x, y) == Complex{}) continue;
      const double dx = std::abs(x - f.center_x()) + 0.5;
      const double dy = std::abs(y - f.center_y()) + 0.5;
      r = std::max(r, std::max(dx, dy) * f.pitch());
    }
  }
  return r;
}

// Lateral walk-off of the highest retained spatial frequency over distance z.
double walk_off(double wavelength, double frequency, double z) {
  const double s = wavelength * frequency;
  return std::abs(z) * s / std::sqrt(std::max(1e-300, 1.0 - s * s));
}

}  // namespace

// ---------------------------------------------------------------------------

void OpticsGeometry::validate() const {
  require_positive(wavelength, "wavelength");
  require_positive(range_camera_target, "range_camera_target");
  require_positive(range_target_scatter, "range_target_scatter");
  require_positive(range_scatter_camera, "range_scatter_camera");
  if (camera_aperture != 0.0) require_positive(camera_aperture, "camera_aperture");
  require_positive(scatter_extent, "scatter_extent");
  require_positive(focal_length, "focal_length");
  require_positive(pixel_pitch, "pixel_pitch");
  require_positive(f_number, "f_number");
}

double OpticsGeometry::effective_camera_aperture() const {
  return camera_aperture > 0.0 ? camera_aperture : focal_length / f_number;
}

bool OpticsGeometry::detector_consistent() const {
  return pixel_pitch >= wavelength * f_number;
}

void PhotonBudget::validate() const {
  require_positive(scatter_fraction, "scatter_fraction");
  if (scatter_fraction > 1.0) throw ParameterError("scatter_fraction must be <= 1");
  require_positive(exposure_time, "exposure_time");
  require_positive(source_power, "source_power");
  if (illumination_density != 0.0) require_positive(illumination_density, "illumination_density");
  require_positive(min_detectable_photons, "min_detectable_photons");
}

double alpha_factor(const OpticsGeometry& g) {
  return g.pixel_pitch * g.scatter_extent * g.range_camera_target /
         (g.wavelength * g.range_target_scatter * g.focal_length);
}

double resolution_limit(const OpticsGeometry& g) {
  return g.wavelength * g.range_target_scatter / g.scatter_extent;
}

double direct_view_ifov(const OpticsGeometry& g) {
  return g.pixel_pitch * g.range_camera_target / g.focal_length;
}

double screen_gsd(const OpticsGeometry& g) {
  return g.pixel_pitch * g.range_scatter_camera / g.focal_length;
}

double fov_on_target(const OpticsGeometry& g) {
  return g.effective_camera_aperture() / g.range_scatter_camera;
}

double photon_gain(const PhotonBudget& b) {
  return std::sqrt(b.scatter_fraction * b.exposure_time * b.source_power /
                   (std::numbers::pi * b.min_detectable_photons));
}

double alpha_bound(const OpticsGeometry& g, const PhotonBudget& b) {
  return (g.pixel_pitch / (g.wavelength * g.f_number)) *
         (g.effective_camera_aperture() / (2.0 * g.range_scatter_camera)) * photon_gain(b);
}

double scatter_extent_bound(const OpticsGeometry& g, const PhotonBudget& b) {
  return (g.wavelength * g.range_target_scatter * g.effective_camera_aperture() /
          (2.0 * g.range_scatter_camera)) *
         std::sqrt(b.scatter_fraction * b.exposure_time * b.illumination_density /
                   (std::numbers::pi * b.min_detectable_photons));
}

double scatter_extent_bound_diffraction_limited(const OpticsGeometry& g, const PhotonBudget& b) {
  const double ac = g.effective_camera_aperture();
  return (g.range_target_scatter * ac * ac /
          (2.0 * g.range_scatter_camera * g.range_camera_target)) *
         photon_gain(b);
}

double diffraction_limited_density(const OpticsGeometry& g, double source_power) {
  const double ac = g.effective_camera_aperture();
  return source_power * ac * ac /
         (g.wavelength * g.wavelength * g.range_camera_target * g.range_camera_target);
}

double photon_count(double watts, double seconds, double wavelength) {
  constexpr double planck = 6.62607015e-34;
  constexpr double light_speed = 299792458.0;
  return watts * seconds * wavelength / (planck * light_speed);
}

// ---------------------------------------------------------------------------

void TargetSpec::validate() const {
  require_positive(extent_x, "target extent_x");
  require_positive(extent_y, "target extent_y");
  switch (kind) {
    case TargetKind::usaf_bars:
      if (groups.empty()) throw ParameterError("bar target needs at least one group");
      for (int g : groups) {
        if (g < -2 || g > 9) throw ParameterError("bar group out of range [-2, 9]");
      }
      break;
    case TargetKind::text_mask:
      require_positive(glyph_height, "glyph_height");
      break;
    case TargetKind::image_file:
      if (path.empty()) throw ParameterError("image target needs a path");
      break;
  }
}

double usaf_frequency_lp_mm(int group, int element) {
  return std::pow(2.0, group + (element - 1) / 6.0);
}

std::vector<UsafElement> usaf_layout(const TargetSpec& spec) {
  spec.validate();
  if (spec.kind != TargetKind::usaf_bars) {
    throw ParameterError("usaf_layout needs a bar target");
  }
  std::vector<UsafElement> out;
  double x = 0.0;
  double height = 0.0;
  for (std::size_t gi = 0; gi < spec.groups.size(); ++gi) {
    const int g = spec.groups[gi];
    const double w1 = 1e-3 / (2.0 * usaf_frequency_lp_mm(g, 1));
    double y = 0.0;
    for (int e = 1; e <= 6; ++e) {
      UsafElement el;
      el.group = g;
      el.element = e;
      el.frequency = usaf_frequency_lp_mm(g, e) * 1e3;
      el.bar_width = 1.0 / (2.0 * el.frequency);
      const double w = el.bar_width;
      el.horizontal = {x, y, x + 5.0 * w, y + 5.0 * w};
      el.vertical = {x + 6.0 * w, y, x + 11.0 * w, y + 5.0 * w};
      out.push_back(el);
      y += 6.0 * w;
    }
    height = std::max(height, y);
    x += 11.0 * w1;
    if (gi + 1 < spec.groups.size()) x += 2.0 * w1;
  }
  const double dx = -x / 2.0;
  const double dy = -height / 2.0;
  for (auto& e : out) {
    for (Box* b : {&e.horizontal, &e.vertical}) {
      b->x0 += dx;
      b->x1 += dx;
      b->y0 += dy;
      b->y1 += dy;
      check_inside(*b, spec);
    }
  }
  return out;
}

ComplexField make_target(const TargetSpec& spec, double pitch) {
  require_positive(pitch, "target pitch");
  spec.validate();
  switch (spec.kind) {
    case TargetKind::usaf_bars:
      return make_usaf(spec, pitch);
    case TargetKind::text_mask:
      return make_text(spec, pitch);
    case TargetKind::image_file:
      return make_from_file(spec, pitch);
  }
  throw ParameterError("unknown target kind");
}

std::pair<int, int> support_extent(const ComplexField& target) {
  int mx = -1;
  int my = -1;
  for (int y = 0; y < target.height(); ++y) {
    for (int x = 0; x < target.width(); ++x) {
      if (target(x, y) == Complex{}) continue;
      mx = std::max(mx, std::abs(x - target.center_x()));
      my = std::max(my, std::abs(y - target.center_y()));
    }
  }
  if (mx < 0) throw ParameterError("target is empty; no support can be derived");
  return {2 * mx + 2, 2 * my + 2};
}

// ---------------------------------------------------------------------------

SimulationGrid plan_simulation_grid(const ComplexField& target, double distance,
                                    const OpticsGeometry& geometry, double resample_ratio,
                                    const SimulationGrid& request) {
  geometry.validate();
  require_positive(distance, "propagation distance");
  if (!(resample_ratio > 0.0) || resample_ratio > 1.0) {
    throw ParameterError("resample ratio must lie in (0, 1]");
  }
  const double pitch = target.pitch();
  const double coarse_pitch = pitch / resample_ratio;
  const double band = 1.0 / (2.0 * coarse_pitch);
  const double radius = occupied_radius(target);
  const double fraction = resample_ratio < 1.0 ? request.stage_fraction.value_or(resample_ratio)
                                                : 1.0;

  const double fine_extent = 2.0 * (radius + walk_off(geometry.wavelength, band,
                                                      distance * fraction));
  const double screen_extent =
      std::max(geometry.scatter_extent,
               2.0 * (radius + walk_off(geometry.wavelength, band, distance)));

  SimulationGrid grid = request;
  grid.stage_fraction = resample_ratio < 1.0 ? std::optional<double>(fraction) : std::nullopt;
  const int min_target = std::max(target.width(), target.height());
  if (grid.target_grid == 0) {
    grid.target_grid = next_pow2(std::max(
        min_target, static_cast<int>(std::ceil(fine_extent / pitch - 1e-9))));
  } else if (grid.target_grid < min_target || grid.target_grid * pitch < fine_extent) {
    throw ParameterError("propagated footprint (" + std::to_string(fine_extent * 1e3) +
                         " mm) exceeds the target grid");
  }
  if (resample_ratio == 1.0) {
    const int need = static_cast<int>(std::ceil(screen_extent / pitch - 1e-9));
    if (request.target_grid == 0) grid.target_grid = next_pow2(std::max(grid.target_grid, need));
    if (grid.target_grid < need) {
      throw ParameterError("propagated footprint (" + std::to_string(screen_extent * 1e3) +
                           " mm) exceeds the grid");
    }
    if (grid.scatter_grid != 0 && grid.scatter_grid != grid.target_grid) {
      throw ParameterError("without resampling the scatter grid equals the target grid");
    }
    grid.scatter_grid = grid.target_grid;
    return grid;
  }
  const int resampled = static_cast<int>(std::llround(resample_ratio * grid.target_grid));
  const int need = std::max(resampled,
                            static_cast<int>(std::ceil(screen_extent / coarse_pitch - 1e-9)));
  if (grid.scatter_grid == 0) {
    grid.scatter_grid = next_pow2(need);
  } else if (grid.scatter_grid < need) {
    throw ParameterError("propagated footprint (" + std::to_string(screen_extent * 1e3) +
                         " mm) exceeds the scatter grid");
  }
  return grid;
}

ScatterMeasurement simulate_scatter_image(const ComplexField& target, double distance,
                                          const OpticsGeometry& geometry, double resample_ratio,
                                          const SimulationGrid& request) {
  const SimulationGrid grid =
      plan_simulation_grid(target, distance, geometry, resample_ratio, request);
  const ComplexField padded = embed_centered(target, grid.target_grid, grid.target_grid);
  const PropagationPlan plan =
      make_plan(geometry.wavelength, distance, target.pitch(), grid.target_grid, resample_ratio,
                grid.scatter_grid, grid.stage_fraction);
  const ComplexField screen = MasmPropagator(plan).forward(padded);
  return {intensity(screen), distance};
}

RealImage project_camera_to_screen(const RealImage& raw, const OpticsGeometry& geometry,
                                   int crop, double grid_pitch) {
  geometry.validate();
  require_positive(grid_pitch, "grid pitch");
  if (crop < 1) throw ParameterError("crop must be positive");
  if (crop > raw.width() || crop > raw.height()) {
    throw ParameterError("crop " + std::to_string(crop) + " exceeds the " +
                         std::to_string(raw.width()) + "x" + std::to_string(raw.height()) +
                         " camera frame");
  }
  RealImage screen = embed_centered(raw, crop, crop);
  screen.set_pitch(screen_gsd(geometry));
  const double ratio = screen.pitch() / grid_pitch;
  if (std::abs(ratio - 1.0) <= 1e-12) return screen;
  return resample_bicubic(screen, ratio);
}

double photon_scale_for_mean(const RealImage& intensity, double mean_photons_per_pixel) {
  if (!(mean_photons_per_pixel >= 0.0) || !std::isfinite(mean_photons_per_pixel)) {
    throw ParameterError("mean photons per pixel must be >= 0");
  }
  const double current = intensity.mean();
  return current > 0.0 ? mean_photons_per_pixel / current : 0.0;
}

ScatterMeasurement add_poisson_noise(const ScatterMeasurement& measurement,
                                     double mean_photons_per_pixel, std::uint64_t seed) {
  const double scale = photon_scale_for_mean(measurement.intensity, mean_photons_per_pixel);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    std::uint32_t{3}};
  std::mt19937_64 engine(seq);
  const RealImage& in = measurement.intensity;
  std::vector<double> counts(in.size(), 0.0);
  auto src = in.data();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double expected = src[i] * scale;
    if (expected > 0.0) {
      std::poisson_distribution<long long> draw(expected);
      counts[i] = static_cast<double>(draw(engine));
    }
  }
  return {RealImage(in.width(), in.height(), in.pitch(), std::move(counts)),
          measurement.distance};
}

}  // namespace scatterpty
