#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "scatterpty/field.hpp"
#include "scatterpty/propagation.hpp"

namespace scatterpty {

/// One scatter-plane irradiance image and the target-to-screen distance it
/// was recorded at.
struct ScatterMeasurement {
  RealImage intensity;
  double distance = 0.0;
};

struct RetrievalConfig {
  int support_a = 0;  // support width in target samples
  int support_b = 0;  // support height in target samples
  int iterations = 200;
  double resample_ratio = 0.25;
  double target_pitch = 10e-6;
  std::uint64_t seed = 0;
  bool realness_constraint = true;
  bool plane_order_shuffle = true;
  double wavelength = 532e-9;
  /// Target-plane grid size; 0 derives round(scatter grid / resample_ratio).
  int target_grid = 0;
  /// Stage boundary as a fraction of each plane's distance; unset uses
  /// resample_ratio.
  std::optional<double> stage_fraction;

  void validate() const;
  bool operator==(const RetrievalConfig&) const = default;
};

struct RetrievalResult {
  ComplexField estimate;
  /// Amplitude misfit || |psi| - sqrt(I) || / || sqrt(I) || before each data
  /// projection, in visit order (iterations_run * plane count entries).
  std::vector<double> per_iteration_residual;
  int iterations_run = 0;
  /// Plane index visited at each residual entry.
  std::vector<int> visit_plane;
};

/// Overrides for tests and warm starts.
struct RetrievalHooks {
  /// Replaces the random phase drawn for the initial estimate; must have one
  /// entry per scatter-grid sample.
  std::optional<std::vector<double>> initial_phase;
};

/// Target-grid size the retrieval will use for these measurements.
int target_grid_size(const ScatterMeasurement& measurement, const RetrievalConfig& config);

/// Multistage plan mapping the target grid onto this measurement's screen.
PropagationPlan retrieval_plan(const ScatterMeasurement& measurement,
                               const RetrievalConfig& config);

/// Random-phase start: back-propagates sqrt(I) e^{j phi} with phi drawn i.i.d.
/// from N(0, 1) on a stream derived from config.seed.
ComplexField initialize_estimate(const ScatterMeasurement& measurement,
                                 const RetrievalConfig& config,
                                 const RetrievalHooks& hooks = {});

/// Keeps the phase of `field` and replaces its modulus with sqrt(intensity).
/// A sample that is exactly zero is given phase 0.
ComplexField project_data(const ComplexField& field, const ScatterMeasurement& measurement);

/// Optional modulus (realness / non-negativity) followed by the rect support
/// window.
ComplexField apply_constraints(const ComplexField& field, const RetrievalConfig& config);

/// Multi-plane error reduction. Throws ParameterError on an empty or
/// inconsistent measurement set and NumericalError if the estimate stops
/// being finite.
RetrievalResult run_retrieval(const std::vector<ScatterMeasurement>& measurements,
                              const RetrievalConfig& config, const RetrievalHooks& hooks = {});

}  // namespace scatterpty
