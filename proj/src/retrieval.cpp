#include "scatterpty/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "scatterpty/errors.hpp"

namespace scatterpty {

namespace {

// Independent engines for the initial phase and the plane-order shuffle, so
// changing the iteration count never changes the starting point.
enum class Stream : std::uint32_t { initial_phase = 1, plane_order = 2 };

std::mt19937_64 make_engine(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

std::vector<double> amplitudes(const RealImage& intensity) {
  std::vector<double> a(intensity.size());
  auto src = intensity.data();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::sqrt(src[i]);
  return a;
}

double magnitude(Complex v) { return std::sqrt(std::norm(v)); }

// Replaces the modulus with `amplitude` in place and returns the pre-projection
// misfit || |psi| - amplitude || / || amplitude ||.
double project_in_place(ComplexField& field, const std::vector<double>& amplitude) {
  double num = 0.0;
  double den = 0.0;
  auto d = field.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double r = magnitude(d[i]);
    const double diff = r - amplitude[i];
    num += diff * diff;
    den += amplitude[i] * amplitude[i];
    d[i] = r == 0.0 ? Complex(amplitude[i], 0.0) : d[i] * (amplitude[i] / r);
  }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

void constrain_in_place(ComplexField& field, const RetrievalConfig& config) {
  const int cx = field.center_x();
  const int cy = field.center_y();
  for (int y = 0; y < field.height(); ++y) {
    const double wy = rect_weight(y - cy, config.support_b);
    Complex* row = field.raw() + static_cast<std::size_t>(y) * field.width();
    for (int x = 0; x < field.width(); ++x) {
      const double w = wy == 0.0 ? 0.0 : wy * rect_weight(x - cx, config.support_a);
      if (w == 0.0) {
        row[x] = 0.0;
      } else if (config.realness_constraint) {
        row[x] = Complex(w * magnitude(row[x]), 0.0);
      } else {
        row[x] *= w;
      }
    }
  }
}

void check_measurement(const ScatterMeasurement& m) {
  if (m.intensity.empty()) throw ParameterError("measurement has no intensity data");
  if (!(m.distance > 0.0) || !std::isfinite(m.distance)) {
    throw ParameterError("measurement distance must be positive");
  }
  if (m.intensity.width() != m.intensity.height()) {
    throw ParameterError("measurement grids must be square");
  }
}

}  // namespace

void RetrievalConfig::validate() const {
  if (iterations < 1) throw ParameterError("iterations must be >= 1");
  if (support_a < 1 || support_b < 1) throw ParameterError("support sizes must be positive");
  if (!(resample_ratio > 0.0) || resample_ratio > 1.0) {
    throw ParameterError("resample ratio must lie in (0, 1]");
  }
  if (!(target_pitch > 0.0)) throw ParameterError("target pitch must be positive");
  if (!(wavelength > 0.0)) throw ParameterError("wavelength must be positive");
  if (target_grid < 0) throw ParameterError("target grid must be >= 0");
  if (target_grid != 0 && (support_a > target_grid || support_b > target_grid)) {
    throw ParameterError("support does not fit the target grid");
  }
  if (stage_fraction && !(*stage_fraction > 0.0 && *stage_fraction < 1.0)) {
    throw ParameterError("stage fraction must lie in (0, 1)");
  }
}

int target_grid_size(const ScatterMeasurement& measurement, const RetrievalConfig& config) {
  if (config.target_grid != 0) return config.target_grid;
  return static_cast<int>(
      std::llround(measurement.intensity.width() / config.resample_ratio));
}

PropagationPlan retrieval_plan(const ScatterMeasurement& measurement,
                               const RetrievalConfig& config) {
  const int n = target_grid_size(measurement, config);
  const double expected_pitch = config.target_pitch / config.resample_ratio;
  if (std::abs(measurement.intensity.pitch() - expected_pitch) > 1e-6 * expected_pitch) {
    throw ParameterError("measurement pitch " + std::to_string(measurement.intensity.pitch()) +
                         " m does not equal target_pitch / resample_ratio");
  }
  return make_plan(config.wavelength, measurement.distance, config.target_pitch, n,
                   config.resample_ratio, measurement.intensity.width(), config.stage_fraction);
}

ComplexField initialize_estimate(const ScatterMeasurement& measurement,
                                 const RetrievalConfig& config, const RetrievalHooks& hooks) {
  check_measurement(measurement);
  const RealImage& img = measurement.intensity;
  std::vector<double> phase;
  if (hooks.initial_phase) {
    if (hooks.initial_phase->size() != img.size()) {
      throw ParameterError("initial phase override has the wrong number of samples");
    }
    phase = *hooks.initial_phase;
  } else {
    auto engine = make_engine(config.seed, Stream::initial_phase);
    std::normal_distribution<double> normal(0.0, 1.0);
    phase.resize(img.size());
    for (double& p : phase) p = normal(engine);
  }
  ComplexField start(img.width(), img.height(), img.pitch());
  auto src = img.data();
  auto dst = start.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::polar(std::sqrt(src[i]), phase[i]);
  return MasmPropagator(retrieval_plan(measurement, config)).inverse(start);
}

ComplexField project_data(const ComplexField& field, const ScatterMeasurement& measurement) {
  if (field.width() != measurement.intensity.width() ||
      field.height() != measurement.intensity.height()) {
    throw ParameterError("project_data: field and measurement grids differ");
  }
  ComplexField out = field;
  project_in_place(out, amplitudes(measurement.intensity));
  return out;
}

ComplexField apply_constraints(const ComplexField& field, const RetrievalConfig& config) {
  if (config.support_a < 1 || config.support_b < 1 || config.support_a > field.width() ||
      config.support_b > field.height()) {
    throw ParameterError("support does not fit the field");
  }
  ComplexField out = field;
  constrain_in_place(out, config);
  return out;
}

RetrievalResult run_retrieval(const std::vector<ScatterMeasurement>& measurements,
                              const RetrievalConfig& config, const RetrievalHooks& hooks) {
  if (measurements.empty()) throw ParameterError("run_retrieval needs at least one measurement");
  config.validate();
  for (const auto& m : measurements) check_measurement(m);
  const RealImage& first = measurements.front().intensity;
  for (const auto& m : measurements) {
    if (m.intensity.width() != first.width() || m.intensity.height() != first.height() ||
        std::abs(m.intensity.pitch() - first.pitch()) > 1e-9 * first.pitch()) {
      throw ParameterError("all measurements must share one grid and pitch");
    }
  }
  const int n = target_grid_size(measurements.front(), config);
  if (config.support_a > n || config.support_b > n) {
    throw ParameterError("support does not fit the target grid");
  }

  std::vector<MasmPropagator> propagators;
  std::vector<std::vector<double>> amp;
  propagators.reserve(measurements.size());
  amp.reserve(measurements.size());
  for (const auto& m : measurements) {
    propagators.emplace_back(retrieval_plan(m, config));
    amp.push_back(amplitudes(m.intensity));
  }

  RetrievalResult result;
  ComplexField estimate = initialize_estimate(measurements.front(), config, hooks);
  if (!all_finite(estimate)) throw NumericalError("initial estimate is not finite", 0);

  auto order_engine = make_engine(config.seed, Stream::plane_order);
  std::vector<int> order(measurements.size());
  const std::size_t visits = static_cast<std::size_t>(config.iterations) * measurements.size();
  result.per_iteration_residual.reserve(visits);
  result.visit_plane.reserve(visits);

  for (int it = 0; it < config.iterations; ++it) {
    std::iota(order.begin(), order.end(), 0);
    if (config.plane_order_shuffle) std::shuffle(order.begin(), order.end(), order_engine);
    for (int k : order) {
      const auto idx = static_cast<std::size_t>(k);
      constrain_in_place(estimate, config);
      ComplexField scatter = propagators[idx].forward(estimate);
      const double residual = project_in_place(scatter, amp[idx]);
      result.per_iteration_residual.push_back(residual);
      result.visit_plane.push_back(k);
      estimate = propagators[idx].inverse(scatter);
      if (!std::isfinite(residual) || !all_finite(estimate)) {
        throw NumericalError("estimate became non-finite at iteration " + std::to_string(it + 1),
                             it + 1);
      }
    }
    result.iterations_run = it + 1;
  }
  constrain_in_place(estimate, config);
  result.estimate = std::move(estimate);
  return result;
}

}  // namespace scatterpty
