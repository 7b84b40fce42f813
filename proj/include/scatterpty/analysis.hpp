#pragma once

#include <string>
#include <vector>

#include "scatterpty/field.hpp"
#include "scatterpty/simulator.hpp"

namespace scatterpty {

struct ElementContrast {
  int group = 0;
  int element = 0;
  double frequency_lp_mm = 0.0;
  double contrast = 0.0;
};

struct MetricReport {
  double nrmse_aligned = 0.0;
  double resolved_lp_mm = 0.0;
  std::vector<ElementContrast> contrast_by_element;
  double alpha_achieved = 0.0;
  bool has_bar_metrics = false;
};

/// Relative L2 error of |estimate| against |truth|, minimised over the
/// identity and a 180 degree rotation about the grid centre.
double aligned_nrmse(const ComplexField& estimate, const ComplexField& truth);

/// Returns `estimate` or its 180 degree rotation, whichever is closer to
/// `truth` in modulus.
ComplexField align_orientation(const ComplexField& estimate, const ComplexField& truth);

/// Michelson contrast of one element. The profile runs along the bar normal
/// through the triplet centre, averaged over three adjacent lines; bar and
/// space levels are the means of the interpolated samples at the bar and
/// space centres. Result is the mean over the horizontal and vertical
/// triplets, clamped to [0, 1].
double bar_contrast(const RealImage& image, int group, int element, const TargetSpec& layout);

std::vector<ElementContrast> contrast_by_element(const RealImage& image,
                                                 const TargetSpec& layout);

/// Highest element frequency (lp/mm) reached by walking elements in
/// increasing frequency while each one has contrast >= threshold. 0 when the
/// coarsest element already fails.
double resolved_frequency(const std::vector<ElementContrast>& contrasts, double threshold);
double resolved_frequency(const RealImage& image, const TargetSpec& layout, double threshold);

/// Full report. Bar metrics are filled only for bar-chart targets; alpha is
/// the direct-view ifov divided by the resolved half period.
MetricReport analyze_reconstruction(const ComplexField& estimate, const ComplexField& truth,
                                    const TargetSpec& layout, const OpticsGeometry& geometry,
                                    double threshold);

/// RFC 4180 table: one metric per row (metric,group,element,frequency_lp_mm,value).
std::string metrics_csv(const MetricReport& report);
std::string metrics_summary(const MetricReport& report, double threshold);

}  // namespace scatterpty
