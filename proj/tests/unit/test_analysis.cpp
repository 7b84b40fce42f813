#include <doctest.h>

#include "scatterpty/analysis.hpp"
#include "scatterpty/errors.hpp"
#include "support.hpp"

using namespace scatterpty;

namespace {

TargetSpec chart(std::vector<int> groups, double ex = 5e-3, double ey = 4e-3) {
  TargetSpec s;
  s.groups = std::move(groups);
  s.extent_x = ex;
  s.extent_y = ey;
  return s;
}

// Separable Gaussian-blurred bar, evaluated in closed form.
double blurred_bar(const Box& b, double x, double y, double sigma) {
  return oracle::blurred_box(x, b.x0, b.x1, sigma) * oracle::blurred_box(y, b.y0, b.y1, sigma);
}

std::vector<Box> bars_of(const UsafElement& e) {
  std::vector<Box> out;
  const double w = e.bar_width;
  for (int k = 0; k < 3; ++k) {
    const double off = 2.0 * k * w;
    out.push_back({e.horizontal.x0, e.horizontal.y0 + off, e.horizontal.x1, e.horizontal.y0 + off + w});
    out.push_back({e.vertical.x0 + off, e.vertical.y0, e.vertical.x0 + off + w, e.vertical.y1});
  }
  return out;
}

RealImage blurred_chart(const TargetSpec& spec, double pitch, double sigma) {
  const int w = static_cast<int>(std::lround(spec.extent_x / pitch));
  const int h = static_cast<int>(std::lround(spec.extent_y / pitch));
  RealImage img(w, h, pitch);
  for (const auto& e : usaf_layout(spec)) {
    for (const auto& b : bars_of(e)) {
      const int x0 = std::max(0, img.center_x() + static_cast<int>(std::floor((b.x0 - 6 * sigma) / pitch)));
      const int x1 = std::min(w - 1, img.center_x() + static_cast<int>(std::ceil((b.x1 + 6 * sigma) / pitch)));
      const int y0 = std::max(0, img.center_y() + static_cast<int>(std::floor((b.y0 - 6 * sigma) / pitch)));
      const int y1 = std::min(h - 1, img.center_y() + static_cast<int>(std::ceil((b.y1 + 6 * sigma) / pitch)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          img(x, y) += blurred_bar(b, (x - img.center_x()) * pitch, (y - img.center_y()) * pitch, sigma);
        }
      }
    }
  }
  return img;
}

// Contrast of the blurred chart evaluated directly at the probe points.
double oracle_contrast(const TargetSpec& spec, const UsafElement& e, double pitch, double sigma) {
  std::vector<Box> bars;
  for (const auto& other : usaf_layout(spec)) {
    for (const auto& b : bars_of(other)) bars.push_back(b);
  }
  auto value = [&](double x, double y) {
    double s = 0.0;
    for (const auto& b : bars) s += blurred_bar(b, x, y, sigma);
    return s;
  };
  auto triplet = [&](const Box& box, int normal) {
    double on = 0.0, off = 0.0;
    for (int line = -1; line <= 1; ++line) {
      for (int k = 0; k < 5; ++k) {
        const double along = (k + 0.5) * e.bar_width;
        const double v = normal == 1
                             ? value(0.5 * (box.x0 + box.x1) + line * pitch, box.y0 + along)
                             : value(box.x0 + along, 0.5 * (box.y0 + box.y1) + line * pitch);
        (k % 2 == 0 ? on : off) += v;
      }
    }
    on /= 9.0;
    off /= 6.0;
    return std::clamp((on - off) / (on + off), 0.0, 1.0);
  };
  return 0.5 * (triplet(e.horizontal, 1) + triplet(e.vertical, 0));
}

}  // namespace

TEST_CASE("aligned NRMSE edge cases") {
  ComplexField zero(8, 8, 1.0);
  ComplexField one(8, 8, 1.0);
  one(3, 4) = 2.0;
  CHECK(aligned_nrmse(zero, zero) == 0.0);
  CHECK(aligned_nrmse(zero, one) == 1.0);
  CHECK(aligned_nrmse(one, zero) == 1.0);
  CHECK(aligned_nrmse(one, one) == 0.0);
  CHECK_THROWS_AS(aligned_nrmse(ComplexField(4, 4, 1.0), one), ParameterError);
}

TEST_CASE("aligned NRMSE ignores phase and 180 degree rotation") {
  auto r = gen::rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 * gen::integer(r, 4, 20);
    ComplexField truth(n, n, 1.0);
    const auto noise = gen::random_field(r, n - 2, n - 2, 1.0);
    // keep row and column 0 empty so the rotation stays on the grid
    for (int y = 1; y < n - 1; ++y) {
      for (int x = 1; x < n - 1; ++x) truth(x, y) = noise(x - 1, y - 1);
    }
    ComplexField est = truth;
    for (auto& v : est.data()) v *= std::polar(1.0, gen::uniform(r, -3.0, 3.0));
    CHECK(aligned_nrmse(est, truth) < 1e-14);
    CHECK(aligned_nrmse(rotate180(est), truth) < 1e-14);
    const auto aligned = align_orientation(rotate180(truth), truth);
    CHECK(relative_error(aligned, truth) < 1e-14);

    // equal-norm pairs: the truth normalisation makes it symmetric
    ComplexField other(n, n, 1.0);
    const auto noise2 = gen::random_field(r, n - 2, n - 2, 1.0);
    for (int y = 1; y < n - 1; ++y) {
      for (int x = 1; x < n - 1; ++x) other(x, y) = noise2(x - 1, y - 1);
    }
    const double scale = std::sqrt(energy(truth) / energy(other));
    for (auto& v : other.data()) v *= scale;
    CHECK(aligned_nrmse(other, truth) == doctest::Approx(aligned_nrmse(truth, other)).epsilon(1e-12));
  }
}

TEST_CASE("contrast of a perfect chart is one and resolves to the finest element") {
  const auto spec = chart({2, 3});
  const auto img = modulus(make_target(spec, 10e-6));
  for (const auto& c : contrast_by_element(img, spec)) CHECK(c.contrast == doctest::Approx(1.0));
  CHECK(resolved_frequency(img, spec, 0.1) == doctest::Approx(14.25).epsilon(1e-3));
  const RealImage flat(500, 400, 10e-6, std::vector<double>(500 * 400, 3.0));
  CHECK(bar_contrast(flat, 3, 4, spec) == 0.0);
  CHECK(resolved_frequency(flat, spec, 0.1) == 0.0);
  CHECK(resolved_frequency(RealImage(500, 400, 10e-6), spec, 0.1) == 0.0);
  CHECK_THROWS_AS(bar_contrast(img, 4, 1, spec), ParameterError);
  CHECK_THROWS_AS(bar_contrast(RealImage(50, 50, 10e-6), 3, 1, spec), ParameterError);
  CHECK_THROWS_AS(resolved_frequency(img, spec, 0.0), ParameterError);
  CHECK_THROWS_AS(resolved_frequency(img, spec, 1.0), ParameterError);
}

TEST_CASE("contrast matches the blurred-edge closed form") {
  const auto spec = chart({3}, 1e-3, 2e-3);
  const double pitch = 1e-6;
  for (double sigma : {8e-6, 15e-6, 25e-6}) {
    const auto img = blurred_chart(spec, pitch, sigma);
    for (const auto& e : usaf_layout(spec)) {
      CHECK(bar_contrast(img, e.group, e.element, spec) ==
            doctest::Approx(oracle_contrast(spec, e, pitch, sigma)).epsilon(1e-3));
    }
  }
}

TEST_CASE("contrast is scale invariant and resolution falls with blur") {
  const auto spec = chart({2, 3});
  const double pitch = 5e-6;
  auto r = gen::rng(42);
  double last = 1e9;
  for (double sigma : {5e-6, 15e-6, 25e-6, 35e-6, 50e-6}) {
    const auto img = blurred_chart(spec, pitch, sigma);
    const double k = gen::uniform(r, 1e-3, 1e3);
    RealImage scaled = img;
    for (double& v : scaled.data()) v *= k;
    for (int el = 1; el <= 6; ++el) {
      CHECK(bar_contrast(scaled, 3, el, spec) == doctest::Approx(bar_contrast(img, 3, el, spec)).epsilon(1e-12));
    }
    const double f = resolved_frequency(img, spec, 0.1);
    CHECK(f <= last);
    last = f;
  }
  CHECK(last < 11.31);
}

TEST_CASE("resolved frequency walks elements in frequency order") {
  std::vector<ElementContrast> c{{3, 2, 8.98, 0.5}, {2, 1, 4.0, 0.9}, {3, 1, 8.0, 0.3},
                                 {3, 3, 10.08, 0.05}, {3, 4, 11.31, 0.6}};
  CHECK(resolved_frequency(c, 0.1) == doctest::Approx(8.98));
  CHECK(resolved_frequency(c, 0.4) == doctest::Approx(4.0));
  CHECK(resolved_frequency(c, 0.95) == 0.0);
  CHECK(resolved_frequency({}, 0.1) == 0.0);
}

TEST_CASE("report: achieved alpha and table layout") {
  const OpticsGeometry g;
  CHECK(direct_view_ifov(g) * 2.0 * 11.31e3 == doctest::Approx(32.8).epsilon(0.01));
  const auto spec = chart({2, 3});
  const auto truth = make_target(spec, 10e-6);
  const auto rep = analyze_reconstruction(rotate180(truth), truth, spec, g, 0.1);
  CHECK(rep.has_bar_metrics);
  CHECK(rep.nrmse_aligned < 0.05);
  CHECK(rep.resolved_lp_mm == doctest::Approx(14.25).epsilon(1e-3));
  CHECK(rep.alpha_achieved == doctest::Approx(direct_view_ifov(g) * 2.0 * 14.25e3).epsilon(1e-3));
  const auto csv = metrics_csv(rep);
  CHECK(csv.rfind("metric,group,element,frequency_lp_mm,value\r\n", 0) == 0);
  CHECK(csv.find("contrast,3,4,") != std::string::npos);
  std::size_t rows = 0;
  for (char ch : csv) rows += ch == '\n';
  CHECK(rows == 1 + 3 + 12);

  const auto dark = analyze_reconstruction(ComplexField(500, 400, 10e-6), truth, spec, g, 0.1);
  CHECK(dark.nrmse_aligned == 1.0);
  CHECK(dark.resolved_lp_mm == 0.0);
  CHECK(dark.alpha_achieved == 0.0);

  TargetSpec text;
  text.kind = TargetKind::text_mask;
  text.text = "A";
  const auto t = make_target(text, 10e-6);
  const auto trep = analyze_reconstruction(t, t, text, g, 0.1);
  CHECK(!trep.has_bar_metrics);
  CHECK(metrics_csv(trep).find("contrast") == std::string::npos);
}
