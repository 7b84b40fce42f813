#pragma once

#include "scatterpty/field.hpp"

namespace scatterpty::fft {

/// FFTW planner effort. `estimate` plans are chosen deterministically, so
/// results are bit-reproducible across processes; `measure` plans are faster
/// but picked by timing, so only reproducible within one process (plans are
/// cached per grid shape).
enum class PlannerEffort { estimate, measure };

void set_planner_effort(PlannerEffort effort);
PlannerEffort planner_effort();

/// In-place unnormalized forward 2-D DFT (FFT order, no shifts).
void forward(ComplexField& field);

/// In-place inverse 2-D DFT, scaled by 1 / (width * height).
void inverse(ComplexField& field);

/// Signed DFT frequency index of bin k on an n-point axis.
inline int signed_index(int k, int n) noexcept { return k < (n + 1) / 2 ? k : k - n; }

}  // namespace scatterpty::fft
