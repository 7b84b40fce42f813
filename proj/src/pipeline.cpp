#include "scatterpty/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "scatterpty/errors.hpp"
#include "scatterpty/io.hpp"

namespace scatterpty {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kRecordFormat = "scatterpty-plane/1";

std::string plane_stem(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "plane_%02d", index);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

ComplexField real_to_field(const RealImage& img) { return to_complex(img); }

RealImage field_to_real(const ComplexField& f) {
  std::vector<double> v(f.size());
  auto src = f.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::max(0.0, src[i].real());
  return RealImage(f.width(), f.height(), f.pitch(), std::move(v));
}

void write_image_pair(const fs::path& dir, const std::string& stem, const RealImage& img,
                      double& raster_scale) {
  const auto q = io::quantize16(img);
  raster_scale = q.scale;
  io::write_png_gray16(dir / (stem + ".png"), q.raster);
  io::write_field(dir / (stem + ".bin"), real_to_field(img));
}

std::vector<fs::path> expand_inputs(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> out;
  for (const auto& p : inputs) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        const auto name = e.path().filename().string();
        if (name.rfind("plane_", 0) == 0 && e.path().extension() == ".json") {
          found.push_back(e.path());
        }
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  if (out.empty()) throw ParameterError("no measurement sidecars found");
  return out;
}

ComplexField build_target(const PipelineConfig& config) {
  return make_target(config.target, config.retrieval.target_pitch);
}

std::vector<double> parse_residual_column(const std::string& csv) {
  std::vector<double> out;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) continue;
    out.push_back(std::strtod(line.c_str() + comma + 1, nullptr));
  }
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string plane_record_json(const PlaneRecord& r) {
  json j;
  j["format"] = kRecordFormat;
  j["plane_index"] = r.plane_index;
  j["offset_m"] = r.offset;
  j["distance_m"] = r.distance;
  j["pitch_m"] = r.pitch;
  j["photon_scale"] = r.photon_scale;
  j["raster_scale"] = r.raster_scale;
  j["frame"] = r.frame;
  j["crop_px"] = r.crop;
  j["raster"] = r.raster;
  j["raw"] = r.raw;
  j["target_grid_px"] = r.target_grid;
  j["scatter_grid_px"] = r.scatter_grid;
  j["stage_fraction"] = r.stage_fraction ? json(*r.stage_fraction) : json(nullptr);
  return j.dump(2) + "\n";
}

PlaneRecord parse_plane_record(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(origin + ": " + e.what());
  }
  PlaneRecord r;
  try {
    if (j.value("format", "") != kRecordFormat) {
      throw ParameterError(origin + ": not a plane record");
    }
    r.plane_index = j.at("plane_index").get<int>();
    r.offset = j.value("offset_m", 0.0);
    r.distance = j.at("distance_m").get<double>();
    r.pitch = j.at("pitch_m").get<double>();
    r.photon_scale = j.value("photon_scale", 0.0);
    r.raster_scale = j.value("raster_scale", 1.0);
    r.frame = j.value("frame", "screen");
    r.crop = j.value("crop_px", 0);
    r.raster = j.value("raster", "");
    r.raw = j.value("raw", "");
    r.target_grid = j.value("target_grid_px", 0);
    r.scatter_grid = j.value("scatter_grid_px", 0);
    if (j.contains("stage_fraction") && !j["stage_fraction"].is_null()) {
      r.stage_fraction = j["stage_fraction"].get<double>();
    }
  } catch (const json::exception& e) {
    throw ParameterError(origin + ": " + e.what());
  }
  if (r.frame != "screen" && r.frame != "camera") {
    throw ParameterError(origin + ": frame must be 'screen' or 'camera'");
  }
  if (!(r.distance > 0.0) || !(r.pitch > 0.0)) {
    throw ParameterError(origin + ": distance and pitch must be positive");
  }
  if (r.raster.empty() && r.raw.empty()) throw ParameterError(origin + ": no image file named");
  return r;
}

RetrievalConfig resolve_retrieval(const PipelineConfig& config, const ComplexField& target,
                                  int target_grid) {
  RetrievalConfig r = config.retrieval;
  if (r.support_a == 0 || r.support_b == 0) {
    const auto [a, b] = support_extent(target);
    if (r.support_a == 0) r.support_a = a;
    if (r.support_b == 0) r.support_b = b;
  }
  if (r.target_grid == 0) r.target_grid = target_grid;
  return r;
}

std::vector<fs::path> cmd_simulate(const PipelineConfig& config, const fs::path& out_dir) {
  config.validate();
  ensure_dir(out_dir);
  const auto& q = config.retrieval;
  const ComplexField target = build_target(config);
  const auto distances = config.distances();
  SimulationGrid request = config.grid;
  request.stage_fraction = q.stage_fraction;
  const double farthest = *std::max_element(distances.begin(), distances.end());
  const SimulationGrid grid =
      plan_simulation_grid(target, farthest, config.geometry, q.resample_ratio, request);

  double scale = 0.0;
  write_image_pair(out_dir, "target", modulus(target), scale);
  io::write_text(out_dir / "config.ini", serialize_config(config));

  std::vector<fs::path> sidecars;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    ScatterMeasurement m =
        simulate_scatter_image(target, distances[i], config.geometry, q.resample_ratio, grid);
    PlaneRecord r;
    r.plane_index = static_cast<int>(i);
    r.offset = config.planes[i];
    r.distance = distances[i];
    r.pitch = m.intensity.pitch();
    r.target_grid = grid.target_grid;
    r.scatter_grid = grid.scatter_grid;
    r.stage_fraction = grid.stage_fraction;
    if (config.noise) {
      r.photon_scale = photon_scale_for_mean(m.intensity, config.noise->mean_photons_per_pixel);
      m = add_poisson_noise(m, config.noise->mean_photons_per_pixel, config.noise->seed + i);
    }
    const std::string stem = plane_stem(r.plane_index);
    r.raster = stem + ".png";
    r.raw = stem + ".bin";
    write_image_pair(out_dir, stem, m.intensity, r.raster_scale);
    const fs::path sidecar = out_dir / (stem + ".json");
    io::write_text(sidecar, plane_record_json(r));
    sidecars.push_back(sidecar);
  }
  return sidecars;
}

Ingested ingest_measurements(const std::vector<fs::path>& inputs, const PipelineConfig& config) {
  const auto& q = config.retrieval;
  const double grid_pitch = q.target_pitch / q.resample_ratio;
  Ingested out;
  int scatter = 0;
  std::vector<PlaneRecord> records;
  std::vector<RealImage> images;
  for (const auto& path : expand_inputs(inputs)) {
    PlaneRecord r = parse_plane_record(io::read_text(path), path.string());
    const fs::path dir = path.parent_path();
    RealImage img;
    if (!r.raw.empty() && fs::exists(dir / r.raw)) {
      img = field_to_real(io::read_field(dir / r.raw));
      img.set_pitch(r.pitch);
    } else {
      img = io::dequantize(io::read_png_gray(dir / r.raster), r.raster_scale, r.pitch);
    }
    if (r.frame == "camera") {
      const int crop = r.crop > 0 ? r.crop : std::min(img.width(), img.height());
      img = project_camera_to_screen(img, config.geometry, crop, grid_pitch);
    }
    if (r.photon_scale > 0.0) {
      for (double& v : img.data()) v /= r.photon_scale;
    }
    scatter = std::max({scatter, img.width(), img.height(), r.scatter_grid});
    if (out.target_grid == 0) out.target_grid = r.target_grid;
    if (!out.stage_fraction) out.stage_fraction = r.stage_fraction;
    records.push_back(r);
    images.push_back(std::move(img));
  }
  scatter = next_pow2(scatter);
  for (std::size_t i = 0; i < images.size(); ++i) {
    RealImage img = images[i];
    if (img.width() != scatter || img.height() != scatter) img = embed_centered(img, scatter, scatter);
    if (std::abs(img.pitch() - grid_pitch) > 1e-6 * grid_pitch) {
      throw ParameterError("plane " + std::to_string(records[i].plane_index) + " has pitch " +
                           io::format_double(img.pitch()) + " m, expected " +
                           io::format_double(grid_pitch) + " m");
    }
    out.measurements.push_back({std::move(img), records[i].distance});
  }
  return out;
}

std::string residual_csv(const RetrievalResult& result, const std::vector<double>& distances) {
  std::ostringstream out;
  out << "iteration,visit,plane,distance_m,residual\r\n";
  const std::size_t planes = distances.size();
  for (std::size_t v = 0; v < result.per_iteration_residual.size(); ++v) {
    const int plane = result.visit_plane[v];
    out << (v / planes + 1) << ',' << v << ',' << plane << ','
        << io::format_double(distances[static_cast<std::size_t>(plane)]) << ','
        << io::format_double(result.per_iteration_residual[v]) << "\r\n";
  }
  return out.str();
}

RetrievalResult cmd_reconstruct(const std::vector<fs::path>& inputs, const PipelineConfig& config,
                                const fs::path& out_dir) {
  config.validate();
  Ingested data = ingest_measurements(inputs, config);
  PipelineConfig effective = config;
  if (!effective.retrieval.stage_fraction) effective.retrieval.stage_fraction = data.stage_fraction;
  const ComplexField target = build_target(effective);
  const RetrievalConfig rc = resolve_retrieval(effective, target, data.target_grid);
  RetrievalResult result = run_retrieval(data.measurements, rc);

  ensure_dir(out_dir);
  io::write_field(out_dir / "estimate.bin", result.estimate);
  const auto q = io::quantize16(modulus(result.estimate));
  io::write_png_gray16(out_dir / "estimate.png", q.raster);
  json meta;
  meta["pitch_m"] = result.estimate.pitch();
  meta["raster_scale"] = q.scale;
  meta["support_a_px"] = rc.support_a;
  meta["support_b_px"] = rc.support_b;
  meta["iterations"] = result.iterations_run;
  meta["seed"] = rc.seed;
  io::write_text(out_dir / "estimate.json", meta.dump(2) + "\n");
  std::vector<double> distances;
  for (const auto& m : data.measurements) distances.push_back(m.distance);
  io::write_text(out_dir / "residuals.csv", residual_csv(result, distances));
  return result;
}

MetricReport cmd_analyze(const fs::path& recon_dir, const PipelineConfig& config,
                         const fs::path& out_dir) {
  config.validate();
  const ComplexField estimate = io::read_field(recon_dir / "estimate.bin");
  const ComplexField target = build_target(config);
  if (std::abs(estimate.pitch() - target.pitch()) > 1e-9 * target.pitch()) {
    throw ParameterError("reconstruction pitch differs from the configured target pitch");
  }
  if (estimate.width() < target.width() || estimate.height() < target.height()) {
    throw ParameterError("reconstruction grid is smaller than the target");
  }
  const ComplexField truth = embed_centered(target, estimate.width(), estimate.height());
  const MetricReport report =
      analyze_reconstruction(estimate, truth, config.target, config.geometry, config.threshold);

  ensure_dir(out_dir);
  io::write_text(out_dir / "metrics.csv", metrics_csv(report));
  io::write_text(out_dir / "summary.txt", metrics_summary(report, config.threshold));
  if (config.emit_plots) {
    const fs::path residuals = recon_dir / "residuals.csv";
    if (fs::exists(residuals)) {
      PlotSeries s{"residual", {}, parse_residual_column(io::read_text(residuals))};
      for (std::size_t i = 0; i < s.y.size(); ++i) s.x.push_back(static_cast<double>(i + 1));
      io::write_text(out_dir / "residuals.svg",
                     svg_line_plot("Amplitude residual per plane visit", "visit",
                                   "log10 residual", {s}, true,
                                   std::numeric_limits<double>::quiet_NaN()));
    }
    if (report.has_bar_metrics) {
      PlotSeries s{"contrast", {}, {}};
      auto sorted = report.contrast_by_element;
      std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        return a.frequency_lp_mm < b.frequency_lp_mm;
      });
      for (const auto& c : sorted) {
        s.x.push_back(c.frequency_lp_mm);
        s.y.push_back(c.contrast);
      }
      io::write_text(out_dir / "contrast.svg",
                     svg_line_plot("Bar contrast", "frequency (lp/mm)", "contrast", {s}, false,
                                   config.threshold));
    }
  }
  return report;
}

std::string cmd_report(const PipelineConfig& config) {
  config.validate();
  const auto& g = config.geometry;
  std::ostringstream out;
  auto line = [&out](const char* name, double value, const char* unit) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-34s %.6g %s\n", name, value, unit);
    out << buf;
  };
  line("resolution improvement alpha", alpha_factor(g), "");
  line("minimum feature lambda R_s / A_s", resolution_limit(g) * 1e6, "um");
  line("direct-view ifov", direct_view_ifov(g) * 1e3, "mm");
  line("screen ground sample distance", screen_gsd(g) * 1e6, "um");
  line("camera aperture", g.effective_camera_aperture() * 1e3, "mm");
  line("field of view at target", fov_on_target(g), "rad");
  line("field of view at target (linear)", fov_on_target(g) * g.range_target_scatter * 1e3, "mm");
  out << "detector pitch >= lambda f/#        " << (g.detector_consistent() ? "yes" : "no")
      << '\n';
  if (config.budget) {
    PhotonBudget b = *config.budget;
    line("photon gain sqrt(sTL/(pi Np))", photon_gain(b), "");
    line("photon-limited alpha bound", alpha_bound(g, b), "");
    line("A_s bound (diffraction-limited P)",
         scatter_extent_bound_diffraction_limited(g, b) * 1e3, "mm");
    if (b.illumination_density > 0.0) {
      line("A_s bound (given P)", scatter_extent_bound(g, b) * 1e3, "mm");
    }
  }
  return out.str();
}

std::string svg_line_plot(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<PlotSeries>& series,
                          bool log_y, double reference) {
  constexpr double W = 640, H = 420, L = 70, R = 20, T = 40, B = 55;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto ty = [log_y](double y) { return log_y ? std::log10(y) : y; };
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (log_y && !(s.y[i] > 0.0)) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  }
  if (std::isfinite(reference)) {
    y0 = std::min(y0, ty(reference));
    y1 = std::max(y1, ty(reference));
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (ty(y) - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream o;
  char buf[256];
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
    << xml_escape(title) << "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" "
                "stroke=\"black\"/>\n",
                L, T, W - L - R, H - T - B);
  o << buf;
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0;
    const double yv = y0 + (y1 - y0) * k / 4.0;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.4g</text>\n", px(xv),
                  H - B + 16, xv);
    o << buf;
    const double ypix = H - B - (yv - y0) / (y1 - y0) * (H - T - B);
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.4g</text>\n",
                  L - 6, ypix + 4, yv);
    o << buf;
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 14 << "\" text-anchor=\"middle\">"
    << xml_escape(x_label) << "</text>\n";
  o << "<text transform=\"translate(18 " << (T + H - B) / 2
    << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(y_label) << "</text>\n";
  if (std::isfinite(reference)) {
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" x2=\"%g\" y1=\"%.1f\" y2=\"%.1f\" stroke=\"gray\" "
                  "stroke-dasharray=\"5,4\"/>\n",
                  L, W - R, py(reference), py(reference));
    o << buf;
  }
  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  for (std::size_t s = 0; s < series.size(); ++s) {
    o << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << colours[s % 4]
      << "\" points=\"";
    const auto& ser = series[s];
    for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
      if (log_y && !(ser.y[i] > 0.0)) continue;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(ser.x[i]), py(ser.y[i]));
      o << buf;
    }
    o << "\"><title>" << xml_escape(ser.label) << "</title></polyline>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace scatterpty
