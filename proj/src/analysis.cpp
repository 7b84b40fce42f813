#include "scatterpty/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "scatterpty/errors.hpp"
#include "scatterpty/io.hpp"

namespace scatterpty {

namespace {

double modulus_error(const ComplexField& a, const ComplexField& b) {
  double num = 0.0;
  double den = 0.0;
  auto pa = a.data();
  auto pb = b.data();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double mb = std::abs(pb[i]);
    const double d = std::abs(pa[i]) - mb;
    num += d * d;
    den += mb * mb;
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : 1.0;
  return std::sqrt(num / den);
}

void check_same_grid(const ComplexField& a, const ComplexField& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ParameterError("estimate and truth grids differ (" + std::to_string(a.width()) + "x" +
                         std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                         std::to_string(b.height()) + ")");
  }
}

// Linear interpolation at physical position (x, y) measured from the centre.
double sample(const RealImage& img, double x, double y) {
  const double fx = x / img.pitch() + img.center_x();
  const double fy = y / img.pitch() + img.center_y();
  const int ix = static_cast<int>(std::floor(fx));
  const int iy = static_cast<int>(std::floor(fy));
  if (ix < 0 || iy < 0 || ix + 1 >= img.width() || iy + 1 >= img.height()) {
    throw ParameterError("bar element lies outside the image");
  }
  const double tx = fx - ix;
  const double ty = fy - iy;
  return (1 - ty) * ((1 - tx) * img(ix, iy) + tx * img(ix + 1, iy)) +
         ty * ((1 - tx) * img(ix, iy + 1) + tx * img(ix + 1, iy + 1));
}

double michelson(double bars, double spaces) {
  const double sum = bars + spaces;
  if (sum <= 0.0) return 0.0;
  return std::clamp((bars - spaces) / sum, 0.0, 1.0);
}

// Modulation along `normal` (0 = x, 1 = y) across one bar triplet.
double triplet_contrast(const RealImage& img, const Box& box, double w, int normal) {
  const double p = img.pitch();
  double bars = 0.0;
  double spaces = 0.0;
  for (int line = -1; line <= 1; ++line) {
    for (int k = 0; k < 5; ++k) {
      double x, y;
      if (normal == 1) {
        x = 0.5 * (box.x0 + box.x1) + line * p;
        y = box.y0 + (k + 0.5) * w;
      } else {
        x = box.x0 + (k + 0.5) * w;
        y = 0.5 * (box.y0 + box.y1) + line * p;
      }
      (k % 2 == 0 ? bars : spaces) += sample(img, x, y);
    }
  }
  return michelson(bars / 9.0, spaces / 6.0);
}

}  // namespace

double aligned_nrmse(const ComplexField& estimate, const ComplexField& truth) {
  check_same_grid(estimate, truth);
  return std::min(modulus_error(estimate, truth), modulus_error(rotate180(estimate), truth));
}

ComplexField align_orientation(const ComplexField& estimate, const ComplexField& truth) {
  check_same_grid(estimate, truth);
  ComplexField flipped = rotate180(estimate);
  return modulus_error(flipped, truth) < modulus_error(estimate, truth) ? flipped : estimate;
}

double bar_contrast(const RealImage& image, int group, int element, const TargetSpec& layout) {
  for (const auto& e : usaf_layout(layout)) {
    if (e.group != group || e.element != element) continue;
    const double h = triplet_contrast(image, e.horizontal, e.bar_width, 1);
    const double v = triplet_contrast(image, e.vertical, e.bar_width, 0);
    return 0.5 * (h + v);
  }
  throw ParameterError("group " + std::to_string(group) + " element " + std::to_string(element) +
                       " is not part of the chart");
}

std::vector<ElementContrast> contrast_by_element(const RealImage& image,
                                                 const TargetSpec& layout) {
  std::vector<ElementContrast> out;
  for (const auto& e : usaf_layout(layout)) {
    out.push_back({e.group, e.element, e.frequency * 1e-3,
                   0.5 * (triplet_contrast(image, e.horizontal, e.bar_width, 1) +
                          triplet_contrast(image, e.vertical, e.bar_width, 0))});
  }
  return out;
}

double resolved_frequency(const std::vector<ElementContrast>& contrasts, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ParameterError("threshold must lie in (0, 1)");
  }
  std::vector<ElementContrast> sorted = contrasts;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.frequency_lp_mm < b.frequency_lp_mm;
  });
  double resolved = 0.0;
  for (const auto& c : sorted) {
    if (c.contrast < threshold) break;
    resolved = c.frequency_lp_mm;
  }
  return resolved;
}

double resolved_frequency(const RealImage& image, const TargetSpec& layout, double threshold) {
  return resolved_frequency(contrast_by_element(image, layout), threshold);
}

MetricReport analyze_reconstruction(const ComplexField& estimate, const ComplexField& truth,
                                    const TargetSpec& layout, const OpticsGeometry& geometry,
                                    double threshold) {
  MetricReport r;
  r.nrmse_aligned = aligned_nrmse(estimate, truth);
  if (layout.kind != TargetKind::usaf_bars) return r;
  const RealImage img = modulus(align_orientation(estimate, truth));
  r.has_bar_metrics = true;
  r.contrast_by_element = contrast_by_element(img, layout);
  r.resolved_lp_mm = resolved_frequency(r.contrast_by_element, threshold);
  r.alpha_achieved = direct_view_ifov(geometry) * 2.0 * r.resolved_lp_mm * 1e3;
  return r;
}

std::string metrics_csv(const MetricReport& report) {
  std::ostringstream out;
  out << "metric,group,element,frequency_lp_mm,value\r\n";
  out << "nrmse_aligned,,,," << io::format_double(report.nrmse_aligned) << "\r\n";
  if (report.has_bar_metrics) {
    out << "resolved_lp_mm,,,," << io::format_double(report.resolved_lp_mm) << "\r\n";
    out << "alpha_achieved,,,," << io::format_double(report.alpha_achieved) << "\r\n";
    for (const auto& c : report.contrast_by_element) {
      out << "contrast," << c.group << ',' << c.element << ','
          << io::format_double(c.frequency_lp_mm) << ',' << io::format_double(c.contrast)
          << "\r\n";
    }
  }
  return out.str();
}

std::string metrics_summary(const MetricReport& report, double threshold) {
  std::ostringstream out;
  out << "aligned NRMSE        " << io::format_double(report.nrmse_aligned) << '\n';
  if (!report.has_bar_metrics) {
    out << "bar metrics          n/a (target is not a bar chart)\n";
    return out.str();
  }
  out << "resolved frequency   " << io::format_double(report.resolved_lp_mm)
      << " lp/mm (contrast >= " << io::format_double(threshold) << ")\n";
  out << "achieved alpha       " << io::format_double(report.alpha_achieved) << '\n';
  for (const auto& c : report.contrast_by_element) {
    char line[96];
    std::snprintf(line, sizeof line, "  group %d element %d  %7.3f lp/mm  contrast %.4f\n",
                  c.group, c.element, c.frequency_lp_mm, c.contrast);
    out << line;
  }
  return out.str();
}

}  // namespace scatterpty
