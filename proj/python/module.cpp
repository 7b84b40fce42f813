#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "scatterpty/analysis.hpp"
#include "scatterpty/errors.hpp"
#include "scatterpty/propagation.hpp"
#include "scatterpty/retrieval.hpp"
#include "scatterpty/simulator.hpp"

namespace py = pybind11;
using namespace scatterpty;

namespace {

using ComplexArray = py::array_t<Complex, py::array::c_style | py::array::forcecast>;
using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

ComplexField to_field(const ComplexArray& a, double pitch) {
  if (a.ndim() != 2) throw ParameterError("expected a 2-D array");
  const int h = static_cast<int>(a.shape(0));
  const int w = static_cast<int>(a.shape(1));
  ComplexField f(w, h, pitch);
  std::copy(a.data(), a.data() + a.size(), f.raw());
  return f;
}

RealImage to_image(const RealArray& a, double pitch) {
  if (a.ndim() != 2) throw ParameterError("expected a 2-D array");
  return RealImage(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), pitch,
                   std::vector<double>(a.data(), a.data() + a.size()));
}

ComplexArray from_field(const ComplexField& f) {
  ComplexArray out({f.height(), f.width()});
  std::copy(f.raw(), f.raw() + f.size(), out.mutable_data());
  return out;
}

RealArray from_image(const RealImage& img) {
  RealArray out({img.height(), img.width()});
  std::copy(img.data().begin(), img.data().end(), out.mutable_data());
  return out;
}

TargetSpec bar_spec(std::vector<int> groups, double extent_x, double extent_y) {
  TargetSpec s;
  s.groups = std::move(groups);
  s.extent_x = extent_x;
  s.extent_y = extent_y;
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Scatter ptychography core: propagation, retrieval, simulation and metrics.";

  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<OpticsGeometry>(m, "OpticsGeometry")
      .def(py::init<>())
      .def_readwrite("wavelength", &OpticsGeometry::wavelength)
      .def_readwrite("range_camera_target", &OpticsGeometry::range_camera_target)
      .def_readwrite("range_target_scatter", &OpticsGeometry::range_target_scatter)
      .def_readwrite("range_scatter_camera", &OpticsGeometry::range_scatter_camera)
      .def_readwrite("camera_aperture", &OpticsGeometry::camera_aperture)
      .def_readwrite("scatter_extent", &OpticsGeometry::scatter_extent)
      .def_readwrite("focal_length", &OpticsGeometry::focal_length)
      .def_readwrite("pixel_pitch", &OpticsGeometry::pixel_pitch)
      .def_readwrite("f_number", &OpticsGeometry::f_number);

  py::class_<PhotonBudget>(m, "PhotonBudget")
      .def(py::init<>())
      .def_readwrite("scatter_fraction", &PhotonBudget::scatter_fraction)
      .def_readwrite("exposure_time", &PhotonBudget::exposure_time)
      .def_readwrite("source_power", &PhotonBudget::source_power)
      .def_readwrite("illumination_density", &PhotonBudget::illumination_density)
      .def_readwrite("min_detectable_photons", &PhotonBudget::min_detectable_photons);

  m.def("alpha_factor", &alpha_factor);
  m.def("resolution_limit", &resolution_limit);
  m.def("direct_view_ifov", &direct_view_ifov);
  m.def("screen_gsd", &screen_gsd);
  m.def("fov_on_target", &fov_on_target);
  m.def("alpha_bound", &alpha_bound);
  m.def("photon_gain", &photon_gain);
  m.def("photon_count", &photon_count, py::arg("watts"), py::arg("seconds"),
        py::arg("wavelength"));
  m.def("usaf_frequency_lp_mm", &usaf_frequency_lp_mm);

  m.def(
      "make_usaf_target",
      [](std::vector<int> groups, double extent_x, double extent_y, double pitch) {
        return from_field(make_target(bar_spec(std::move(groups), extent_x, extent_y), pitch));
      },
      py::arg("groups") = std::vector<int>{2, 3}, py::arg("extent_x") = 5e-3,
      py::arg("extent_y") = 4e-3, py::arg("pitch") = 10e-6);
  m.def(
      "make_text_target",
      [](const std::string& text, double glyph_height, double extent_x, double extent_y,
         double pitch) {
        TargetSpec s;
        s.kind = TargetKind::text_mask;
        s.text = text;
        s.glyph_height = glyph_height;
        s.extent_x = extent_x;
        s.extent_y = extent_y;
        return from_field(make_target(s, pitch));
      },
      py::arg("text"), py::arg("glyph_height"), py::arg("extent_x"), py::arg("extent_y"),
      py::arg("pitch") = 10e-6);

  m.def(
      "asm_propagate",
      [](const ComplexArray& field, double pitch, double wavelength, double distance) {
        return from_field(asm_propagate(to_field(field, pitch), wavelength, distance));
      },
      py::arg("field"), py::arg("pitch"), py::arg("wavelength"), py::arg("distance"));

  m.def(
      "masm_propagate",
      [](const ComplexArray& field, double pitch, double wavelength, double distance,
         double resample_ratio, int output_grid, std::optional<double> stage_fraction) {
        const auto f = to_field(field, pitch);
        const auto plan = make_plan(wavelength, distance, pitch, f.width(), resample_ratio,
                                    output_grid, stage_fraction);
        const auto out = MasmPropagator(plan).forward(f);
        return py::make_tuple(from_field(out), out.pitch());
      },
      py::arg("field"), py::arg("pitch"), py::arg("wavelength"), py::arg("distance"),
      py::arg("resample_ratio") = 1.0, py::arg("output_grid") = 0,
      py::arg("stage_fraction") = py::none());

  m.def(
      "masm_inverse",
      [](const ComplexArray& field, double target_pitch, int target_grid, double wavelength,
         double distance, double resample_ratio, std::optional<double> stage_fraction) {
        const auto plan = make_plan(wavelength, distance, target_pitch, target_grid,
                                    resample_ratio, static_cast<int>(field.shape(1)),
                                    stage_fraction);
        return from_field(MasmPropagator(plan).inverse(to_field(field, plan.output_pitch())));
      },
      py::arg("field"), py::arg("target_pitch"), py::arg("target_grid"), py::arg("wavelength"),
      py::arg("distance"), py::arg("resample_ratio") = 1.0,
      py::arg("stage_fraction") = py::none());

  m.def(
      "simulate_scatter_image",
      [](const ComplexArray& target, double pitch, double distance, const OpticsGeometry& g,
         double resample_ratio, int target_grid, int scatter_grid,
         std::optional<double> stage_fraction) {
        SimulationGrid grid{target_grid, scatter_grid, stage_fraction};
        const auto m = simulate_scatter_image(to_field(target, pitch), distance, g,
                                              resample_ratio, grid);
        return py::make_tuple(from_image(m.intensity), m.intensity.pitch());
      },
      py::arg("target"), py::arg("pitch"), py::arg("distance"), py::arg("geometry"),
      py::arg("resample_ratio") = 0.25, py::arg("target_grid") = 0, py::arg("scatter_grid") = 0,
      py::arg("stage_fraction") = py::none());

  m.def(
      "add_poisson_noise",
      [](const RealArray& intensity, double mean, std::uint64_t seed) {
        const auto out = add_poisson_noise({to_image(intensity, 1.0), 1.0}, mean, seed);
        return from_image(out.intensity);
      },
      py::arg("intensity"), py::arg("mean_photons_per_pixel"), py::arg("seed"));

  m.def(
      "run_retrieval",
      [](const std::vector<RealArray>& intensities, const std::vector<double>& distances,
         int support_a, int support_b, int iterations, double resample_ratio,
         double target_pitch, std::uint64_t seed, bool realness, bool shuffle, int target_grid,
         std::optional<double> stage_fraction, double wavelength) {
        if (intensities.size() != distances.size()) {
          throw ParameterError("one distance is needed per intensity image");
        }
        std::vector<ScatterMeasurement> ms;
        for (std::size_t i = 0; i < intensities.size(); ++i) {
          ms.push_back({to_image(intensities[i], target_pitch / resample_ratio), distances[i]});
        }
        RetrievalConfig c;
        c.support_a = support_a;
        c.support_b = support_b;
        c.iterations = iterations;
        c.resample_ratio = resample_ratio;
        c.target_pitch = target_pitch;
        c.seed = seed;
        c.realness_constraint = realness;
        c.plane_order_shuffle = shuffle;
        c.target_grid = target_grid;
        c.stage_fraction = stage_fraction;
        c.wavelength = wavelength;
        RetrievalResult r;
        {
          py::gil_scoped_release release;
          r = run_retrieval(ms, c);
        }
        py::dict out;
        out["estimate"] = from_field(r.estimate);
        out["residuals"] = r.per_iteration_residual;
        out["visit_plane"] = r.visit_plane;
        out["iterations_run"] = r.iterations_run;
        return out;
      },
      py::arg("intensities"), py::arg("distances"), py::arg("support_a"), py::arg("support_b"),
      py::arg("iterations") = 200, py::arg("resample_ratio") = 0.25,
      py::arg("target_pitch") = 10e-6, py::arg("seed") = 0, py::arg("realness") = true,
      py::arg("shuffle") = true, py::arg("target_grid") = 0,
      py::arg("stage_fraction") = py::none(), py::arg("wavelength") = 532e-9);

  m.def(
      "aligned_nrmse",
      [](const ComplexArray& estimate, const ComplexArray& truth) {
        return aligned_nrmse(to_field(estimate, 1.0), to_field(truth, 1.0));
      },
      py::arg("estimate"), py::arg("truth"));

  m.def(
      "resolved_frequency",
      [](const RealArray& image, double pitch, std::vector<int> groups, double extent_x,
         double extent_y, double threshold) {
        return resolved_frequency(to_image(image, pitch),
                                  bar_spec(std::move(groups), extent_x, extent_y), threshold);
      },
      py::arg("image"), py::arg("pitch"), py::arg("groups") = std::vector<int>{2, 3},
      py::arg("extent_x") = 5e-3, py::arg("extent_y") = 4e-3, py::arg("threshold") = 0.1);

  m.def(
      "bar_contrast",
      [](const RealArray& image, double pitch, int group, int element, std::vector<int> groups,
         double extent_x, double extent_y) {
        return bar_contrast(to_image(image, pitch), group, element,
                            bar_spec(std::move(groups), extent_x, extent_y));
      },
      py::arg("image"), py::arg("pitch"), py::arg("group"), py::arg("element"),
      py::arg("groups") = std::vector<int>{2, 3}, py::arg("extent_x") = 5e-3,
      py::arg("extent_y") = 4e-3);
}
