#include "scatterpty/propagation.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "scatterpty/errors.hpp"
#include "scatterpty/fft.hpp"

namespace scatterpty {

namespace {

constexpr double kPitchTolerance = 1e-9;

bool same_pitch(double a, double b) { return std::abs(a - b) <= kPitchTolerance * b; }

void apply_kernel(ComplexField& field, const AlignedVector<Complex>& kernel, bool conjugate) {
  fft::forward(field);
  auto d = field.data();
  if (conjugate) {
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= std::conj(kernel[i]);
  } else {
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= kernel[i];
  }
  fft::inverse(field);
}

void check_square(const ComplexField& field) {
  if (!field.square()) {
    throw ParameterError("propagation requires a square grid, got " +
                         std::to_string(field.width()) + "x" + std::to_string(field.height()));
  }
  if (field.width() < 4) throw ParameterError("propagation requires at least a 4x4 grid");
}

}  // namespace

double band_limit_frequency(int n, double pitch, double wavelength, double distance) {
  const double du = 1.0 / (n * pitch);
  const double s = 2.0 * du * distance;
  return 1.0 / (wavelength * std::sqrt(s * s + 1.0));
}

AlignedVector<Complex> asm_transfer_function(int n, double pitch, double wavelength,
                                             double distance, double antialias_cutoff) {
  if (n < 4) throw ParameterError("transfer function grid must be at least 4x4");
  if (!(wavelength > 0.0) || !(pitch > 0.0)) {
    throw ParameterError("wavelength and pitch must be positive");
  }
  const double extent = n * pitch;
  const double inv_l2 = 1.0 / (wavelength * wavelength);
  const double limit = std::min(band_limit_frequency(n, pitch, wavelength, distance),
                                antialias_cutoff);
  const double two_pi_z = 2.0 * std::numbers::pi * distance;

  std::vector<double> freq(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) freq[static_cast<std::size_t>(k)] = fft::signed_index(k, n) / extent;

  AlignedVector<Complex> h(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int q = 0; q < n; ++q) {
    const double v = freq[static_cast<std::size_t>(q)];
    Complex* row = h.data() + static_cast<std::size_t>(q) * n;
    if (std::abs(v) > limit) {
      for (int p = 0; p < n; ++p) row[p] = 0.0;
      continue;
    }
    for (int p = 0; p < n; ++p) {
      const double u = freq[static_cast<std::size_t>(p)];
      const double arg = inv_l2 - u * u - v * v;
      if (std::abs(u) > limit || arg <= 0.0) {
        row[p] = 0.0;
        continue;
      }
      const double phase = two_pi_z * std::sqrt(arg);
      row[p] = Complex(std::cos(phase), std::sin(phase));
    }
  }
  return h;
}

ComplexField asm_propagate(const ComplexField& field, double wavelength, double distance) {
  check_square(field);
  const auto kernel = asm_transfer_function(field.width(), field.pitch(), wavelength, distance);
  ComplexField out = field;
  apply_kernel(out, kernel, false);
  return out;
}

void PropagationPlan::validate() const {
  if (!(wavelength > 0.0) || !std::isfinite(wavelength)) {
    throw ParameterError("plan wavelength must be positive");
  }
  if (!(input_pitch > 0.0) || !std::isfinite(input_pitch)) {
    throw ParameterError("plan input pitch must be positive");
  }
  if (!std::isfinite(distance)) throw ParameterError("plan distance must be finite");
  if (grid_size < 4) throw ParameterError("plan grid size must be >= 4");
  if (!(resample_ratio > 0.0) || resample_ratio > 1.0) {
    throw ParameterError("resample ratio must lie in (0, 1]");
  }
  if (stage_boundaries.empty()) {
    if (resample_ratio != 1.0) {
      throw ParameterError("a resample ratio below 1 needs at least one stage boundary");
    }
    if (output_grid_size != 0 && output_grid_size != grid_size) {
      throw ParameterError("a single-stage plan cannot change the grid size");
    }
    return;
  }
  const double sign = distance > 0.0 ? 1.0 : -1.0;
  if (distance == 0.0) throw ParameterError("stage boundaries need a nonzero distance");
  double prev = 0.0;
  for (double b : stage_boundaries) {
    if (!(sign * b > sign * prev) || !(sign * b < sign * distance)) {
      throw ParameterError("stage boundaries must be strictly monotone inside (0, distance)");
    }
    prev = b;
  }
  int n = grid_size;
  const double r = stage_ratio();
  for (std::size_t i = 0; i < stage_boundaries.size(); ++i) {
    n = static_cast<int>(std::llround(r * n));
    if (n < 4) throw ParameterError("plan resampling shrinks the grid below 4x4");
  }
  if (output_grid_size != 0 && output_grid_size < n) {
    throw ParameterError("output grid " + std::to_string(output_grid_size) +
                         " is smaller than the resampled grid " + std::to_string(n));
  }
}

double PropagationPlan::stage_ratio() const {
  if (stage_boundaries.empty()) return 1.0;
  return std::pow(resample_ratio, 1.0 / static_cast<double>(stage_boundaries.size()));
}

double PropagationPlan::output_pitch() const {
  double p = input_pitch;
  const double r = stage_ratio();
  for (std::size_t i = 0; i < stage_boundaries.size(); ++i) p /= r;
  return p;
}

int PropagationPlan::resolved_output_grid() const {
  if (output_grid_size != 0) return output_grid_size;
  int n = grid_size;
  const double r = stage_ratio();
  for (std::size_t i = 0; i < stage_boundaries.size(); ++i) {
    n = static_cast<int>(std::llround(r * n));
  }
  return n;
}

PropagationPlan make_plan(double wavelength, double distance, double input_pitch, int grid_size,
                          double resample_ratio, int output_grid_size,
                          std::optional<double> stage_fraction) {
  PropagationPlan plan;
  plan.wavelength = wavelength;
  plan.distance = distance;
  plan.input_pitch = input_pitch;
  plan.grid_size = grid_size;
  plan.resample_ratio = resample_ratio;
  plan.output_grid_size = output_grid_size;
  if (resample_ratio < 1.0) {
    const double fraction = stage_fraction.value_or(resample_ratio);
    if (!(fraction > 0.0 && fraction < 1.0)) {
      throw ParameterError("stage fraction must lie in (0, 1)");
    }
    plan.stage_boundaries = {distance * fraction};
  }
  plan.validate();
  return plan;
}

MasmPropagator::MasmPropagator(PropagationPlan plan) : plan_(std::move(plan)) {
  plan_.validate();
  const double r = plan_.stage_ratio();
  int n = plan_.grid_size;
  double pitch = plan_.input_pitch;
  double start = 0.0;
  const std::size_t boundaries = plan_.stage_boundaries.size();
  for (std::size_t i = 0; i <= boundaries; ++i) {
    Stage s;
    s.size = n;
    s.pitch = pitch;
    const double end = i < boundaries ? plan_.stage_boundaries[i] : plan_.distance;
    s.distance = end - start;
    start = end;
    if (i < boundaries) {
      s.ratio = r;
      const int resampled = static_cast<int>(std::llround(r * n));
      s.next_size = i + 1 == boundaries ? plan_.resolved_output_grid() : resampled;
      const double cutoff = r < 1.0 ? r / (2.0 * pitch)
                                    : std::numeric_limits<double>::infinity();
      s.kernel = asm_transfer_function(n, pitch, plan_.wavelength, s.distance, cutoff);
      n = resampled;
      pitch /= r;
      if (s.next_size != n) n = s.next_size;
    } else {
      s.ratio = 1.0;
      s.next_size = n;
      s.kernel = asm_transfer_function(n, pitch, plan_.wavelength, s.distance);
    }
    stages_.push_back(std::move(s));
  }
}

ComplexField MasmPropagator::forward(const ComplexField& field) const {
  check_square(field);
  if (field.width() != plan_.grid_size || !same_pitch(field.pitch(), plan_.input_pitch)) {
    throw ParameterError("field does not match the plan's target grid (" +
                         std::to_string(plan_.grid_size) + " samples)");
  }
  ComplexField current = field;
  for (const Stage& s : stages_) {
    apply_kernel(current, s.kernel, false);
    if (s.ratio != 1.0) {
      current = resample_bicubic(current, s.ratio);
      if (current.width() != s.next_size) {
        current = embed_centered(current, s.next_size, s.next_size);
      }
    }
  }
  return current;
}

ComplexField MasmPropagator::inverse(const ComplexField& field) const {
  check_square(field);
  if (field.width() != plan_.resolved_output_grid() ||
      !same_pitch(field.pitch(), plan_.output_pitch())) {
    throw ParameterError("field does not match the plan's scatter grid (" +
                         std::to_string(plan_.resolved_output_grid()) + " samples)");
  }
  ComplexField current = field;
  for (auto it = stages_.rbegin(); it != stages_.rend(); ++it) {
    const Stage& s = *it;
    if (s.ratio != 1.0) {
      const int resampled = static_cast<int>(std::llround(s.ratio * s.size));
      if (current.width() != resampled) current = embed_centered(current, resampled, resampled);
      current = resample_bicubic(current, 1.0 / s.ratio);
      if (current.width() != s.size) current = embed_centered(current, s.size, s.size);
      current.set_pitch(s.pitch);
    }
    apply_kernel(current, s.kernel, true);
  }
  return current;
}

ComplexField masm_propagate(const ComplexField& field, const PropagationPlan& plan) {
  return MasmPropagator(plan).forward(field);
}

ComplexField masm_inverse(const ComplexField& field, const PropagationPlan& plan) {
  return MasmPropagator(plan).inverse(field);
}

}  // namespace scatterpty
