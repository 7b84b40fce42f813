#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scatterpty/field.hpp"
#include "scatterpty/propagation.hpp"
#include "scatterpty/retrieval.hpp"

namespace scatterpty {

// ---------------------------------------------------------------------------
// Geometry and photometry
// ---------------------------------------------------------------------------

/// Scalar constants of a scatter-imaging bench. All lengths in meters.
struct OpticsGeometry {
  double wavelength = 532e-9;
  double range_camera_target = 2.518;   // R_c
  double range_target_scatter = 2.654;  // R_s
  double range_scatter_camera = 0.139;  // R_sc
  double camera_aperture = 0.0;         // A_c; 0 derives focal_length / f_number
  double scatter_extent = 0.037;        // A_s
  double focal_length = 0.012;          // F
  double pixel_pitch = 6.9e-6;          // detector pitch
  double f_number = 1.6;

  void validate() const;
  double effective_camera_aperture() const;
  /// True when pixel_pitch >= wavelength * f_number, i.e. the detector does
  /// not oversample the lens diffraction limit.
  bool detector_consistent() const;

  bool operator==(const OpticsGeometry&) const = default;
};

/// Photometric quantities for the photon-budget bounds.
struct PhotonBudget {
  double scatter_fraction = 0.1;        // sigma
  double exposure_time = 0.1;           // T, seconds
  double source_power = 1e22;           // L, photons / s
  double illumination_density = 0.0;    // P, photons / s / m^2
  double min_detectable_photons = 1e5;  // N_p

  void validate() const;
  bool operator==(const PhotonBudget&) const = default;
};

/// Resolution improvement of scatter imaging over direct view:
/// pixel_pitch * A_s * R_c / (lambda * R_s * F).
double alpha_factor(const OpticsGeometry& g);

/// Smallest target feature recoverable from a scatter aperture A_s:
/// lambda * R_s / A_s.
double resolution_limit(const OpticsGeometry& g);

/// Direct-view instantaneous field of view on the target, pixel_pitch * R_c / F.
double direct_view_ifov(const OpticsGeometry& g);

/// Camera ground sample distance on the scatter screen, pixel_pitch * R_sc / F.
double screen_gsd(const OpticsGeometry& g);

/// Angular field of view at the target, A_c / R_sc (radians). Multiply by
/// R_s for a linear extent.
double fov_on_target(const OpticsGeometry& g);

/// sqrt(sigma T L / (pi N_p)).
double photon_gain(const PhotonBudget& b);

/// Photon-limited ceiling on alpha:
/// (pixel_pitch / (lambda f#)) * (A_c / (2 R_sc)) * photon_gain.
double alpha_bound(const OpticsGeometry& g, const PhotonBudget& b);

/// Largest usable scatter aperture for illumination density P:
/// (lambda R_s A_c / (2 R_sc)) * sqrt(sigma T P / (pi N_p)).
double scatter_extent_bound(const OpticsGeometry& g, const PhotonBudget& b);

/// Same bound with P set by diffraction from the observing aperture:
/// (R_s A_c^2 / (2 R_sc R_c)) * photon_gain.
double scatter_extent_bound_diffraction_limited(const OpticsGeometry& g, const PhotonBudget& b);

/// Illumination density L A_c^2 / (lambda^2 R_c^2).
double diffraction_limited_density(const OpticsGeometry& g, double source_power);

/// Photons emitted by a source of `watts` over `seconds` at `wavelength`.
double photon_count(double watts, double seconds, double wavelength);

// ---------------------------------------------------------------------------
// Targets
// ---------------------------------------------------------------------------

enum class TargetKind { usaf_bars, text_mask, image_file };

struct TargetSpec {
  TargetKind kind = TargetKind::usaf_bars;
  double extent_x = 5e-3;
  double extent_y = 4e-3;
  std::vector<int> groups{2, 3};  // usaf_bars
  std::string text;               // text_mask
  double glyph_height = 3e-3;     // text_mask
  std::string path;               // image_file

  void validate() const;
  bool operator==(const TargetSpec&) const = default;
};

struct Box {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;  // meters from target centre
};

/// One bar-target element: two triplets of bars of width bar_width and
/// length 5 * bar_width. `horizontal` bars run along x (modulation along y);
/// `vertical` bars run along y (modulation along x).
struct UsafElement {
  int group = 0;
  int element = 0;
  double frequency = 0.0;  // line pairs per meter
  double bar_width = 0.0;  // meters
  Box horizontal;
  Box vertical;
};

/// 2^(group + (element - 1) / 6) line pairs per millimetre.
double usaf_frequency_lp_mm(int group, int element);

/// Element placement for a bar chart: one column per group (in the order
/// given), elements 1..6 stacked top to bottom, each row holding a
/// horizontal and a vertical triplet. The layout is centred in the extent.
std::vector<UsafElement> usaf_layout(const TargetSpec& spec);

/// Binary amplitude mask of size round(extent / pitch) with unit values on
/// the features. Throws ParameterError when a bar is narrower than two
/// samples or the layout does not fit the extent.
ComplexField make_target(const TargetSpec& spec, double pitch);

/// Smallest centred rect(m/a) rect(n/b) support that passes every nonzero
/// sample of `target` at full weight: a = 2 * max|m| + 2 (likewise b), so
/// the half-weight boundary falls one sample outside the pattern.
std::pair<int, int> support_extent(const ComplexField& target);

// ---------------------------------------------------------------------------
// Forward model
// ---------------------------------------------------------------------------

/// Grid choices for simulate_scatter_image; zeros select the smallest power
/// of two that contains the propagated footprint (and A_s on the screen).
struct SimulationGrid {
  int target_grid = 0;
  int scatter_grid = 0;
  std::optional<double> stage_fraction;

  bool operator==(const SimulationGrid&) const = default;
};

/// Target and scatter grid sizes needed to propagate `target` over `distance`.
SimulationGrid plan_simulation_grid(const ComplexField& target, double distance,
                                    const OpticsGeometry& geometry, double resample_ratio,
                                    const SimulationGrid& request = {});

/// Noise-free screen irradiance |MASM{target, z}|^2 on the scatter grid
/// (pitch target_pitch / resample_ratio), in field units. Throws
/// ParameterError if a fixed grid cannot hold the propagated footprint.
ScatterMeasurement simulate_scatter_image(const ComplexField& target, double distance,
                                          const OpticsGeometry& geometry, double resample_ratio,
                                          const SimulationGrid& grid = {});

/// Crops the camera frame to crop x crop about its centre, assigns the
/// screen pitch pixel_pitch * R_sc / F, and resamples to `grid_pitch`.
RealImage project_camera_to_screen(const RealImage& raw, const OpticsGeometry& geometry,
                                   int crop, double grid_pitch);

/// Factor that rescales the intensity to the requested mean photons per
/// pixel (0 for an all-dark image).
double photon_scale_for_mean(const RealImage& intensity, double mean_photons_per_pixel);

/// Rescales to the requested mean photon count per pixel (averaged over the
/// full grid) and replaces each pixel with a seeded Poisson draw.
ScatterMeasurement add_poisson_noise(const ScatterMeasurement& measurement,
                                     double mean_photons_per_pixel, std::uint64_t seed);

}  // namespace scatterpty
