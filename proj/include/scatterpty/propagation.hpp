#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "scatterpty/field.hpp"

namespace scatterpty {

/// Highest spatial frequency (cycles/m, per axis) that an n-sample grid of the
/// given pitch can carry over `distance` without the sampled transfer-function
/// chirp aliasing: 1 / (lambda * sqrt((2 z / (n pitch))^2 + 1)).
double band_limit_frequency(int n, double pitch, double wavelength, double distance);

/// Angular-spectrum transfer function on an n x n grid in FFT order:
/// exp(j 2 pi z sqrt(1/lambda^2 - u^2 - v^2)) on propagating components, 0 on
/// evanescent ones (u^2 + v^2 >= 1/lambda^2), 0 beyond the chirp band limit,
/// and 0 where |u| or |v| exceeds `antialias_cutoff`.
AlignedVector<Complex> asm_transfer_function(
    int n, double pitch, double wavelength, double distance,
    double antialias_cutoff = std::numeric_limits<double>::infinity());

/// Single-stage band-limited angular spectrum propagation. The field must be
/// square and at least 4x4; negative distances backpropagate.
ComplexField asm_propagate(const ComplexField& field, double wavelength, double distance);

/// Multistage propagation schedule.
///
/// The field starts on a grid_size x grid_size grid of pitch input_pitch.
/// At each stage boundary it is resampled by resample_ratio^(1/k) (k =
/// number of boundaries); the last boundary also zero-pads to
/// output_grid_size. Spectral content above the next grid's Nyquist
/// frequency is removed before every downsampling step.
struct PropagationPlan {
  double wavelength = 0.0;
  double distance = 0.0;
  double input_pitch = 0.0;
  int grid_size = 0;
  double resample_ratio = 1.0;
  std::vector<double> stage_boundaries;
  int output_grid_size = 0;  // 0: round(resample_ratio * grid_size)

  void validate() const;
  double stage_ratio() const;
  double output_pitch() const;
  int resolved_output_grid() const;

  bool operator==(const PropagationPlan&) const = default;
};

/// Builds a plan with at most one resampling stage. When resample_ratio < 1
/// the boundary sits at distance * stage_fraction (default: resample_ratio).
PropagationPlan make_plan(double wavelength, double distance, double input_pitch, int grid_size,
                          double resample_ratio, int output_grid_size = 0,
                          std::optional<double> stage_fraction = std::nullopt);

/// Precomputed multistage propagator for one plan. Transfer functions are
/// built once; forward() and inverse() may be called concurrently.
class MasmPropagator {
 public:
  explicit MasmPropagator(PropagationPlan plan);

  /// Target plane (grid_size, input_pitch) -> scatter plane.
  ComplexField forward(const ComplexField& field) const;

  /// Scatter plane (output grid, output pitch) -> target plane.
  ComplexField inverse(const ComplexField& field) const;

  const PropagationPlan& plan() const noexcept { return plan_; }

 private:
  struct Stage {
    int size;          // grid samples per axis while propagating
    double pitch;      // pitch while propagating
    double distance;   // signed distance covered by this stage
    double ratio;      // resample ratio applied after this stage (1 = none)
    int next_size;     // grid size after resampling (and padding)
    AlignedVector<Complex> kernel;
  };

  PropagationPlan plan_;
  std::vector<Stage> stages_;
};

ComplexField masm_propagate(const ComplexField& field, const PropagationPlan& plan);
ComplexField masm_inverse(const ComplexField& field, const PropagationPlan& plan);

}  // namespace scatterpty
