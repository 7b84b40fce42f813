#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "scatterpty/analysis.hpp"
#include "scatterpty/config.hpp"
#include "scatterpty/retrieval.hpp"

namespace scatterpty {

/// Per-plane metadata written next to each simulated image.
struct PlaneRecord {
  int plane_index = 0;
  double offset = 0.0;    // stage offset, meters
  double distance = 0.0;  // target to screen, meters
  double pitch = 0.0;     // sample pitch of the stored image, meters
  double photon_scale = 0.0;  // photons per field-intensity unit; 0 = noise free
  double raster_scale = 1.0;  // stored value = raster value * raster_scale
  std::string frame = "screen";  // "screen" or "camera"
  int crop = 0;                  // camera frames: central crop in pixels
  std::string raster;            // 16-bit PNG file name
  std::string raw;               // lossless field file name (may be empty)
  int target_grid = 0;
  int scatter_grid = 0;
  std::optional<double> stage_fraction;
};

std::string plane_record_json(const PlaneRecord& record);
PlaneRecord parse_plane_record(const std::string& json, const std::string& origin);

/// Fills in the support (from the target's bounding box) and target grid
/// when the configuration leaves them at 0.
RetrievalConfig resolve_retrieval(const PipelineConfig& config, const ComplexField& target,
                                  int target_grid);

/// Writes target.{png,bin}, plane_NN.{png,bin,json} and config.ini to
/// `out_dir`. Returns the sidecar paths in plane order.
std::vector<std::filesystem::path> cmd_simulate(const PipelineConfig& config,
                                                const std::filesystem::path& out_dir);

/// Loads measurements from sidecar files (or every plane_*.json in a
/// directory), projecting camera frames onto the screen grid and dividing
/// out the photon scale.
struct Ingested {
  std::vector<ScatterMeasurement> measurements;
  int target_grid = 0;
  std::optional<double> stage_fraction;
};
Ingested ingest_measurements(const std::vector<std::filesystem::path>& inputs,
                             const PipelineConfig& config);

/// Runs the retrieval and writes estimate.{png,bin,json} and residuals.csv.
RetrievalResult cmd_reconstruct(const std::vector<std::filesystem::path>& inputs,
                                const PipelineConfig& config,
                                const std::filesystem::path& out_dir);

/// Reads estimate.bin from `recon_dir`, compares with the configured target
/// and writes metrics.csv and summary.txt (plus SVG plots when enabled).
MetricReport cmd_analyze(const std::filesystem::path& recon_dir, const PipelineConfig& config,
                         const std::filesystem::path& out_dir);

/// Photometry and resolution figures for the configured geometry.
std::string cmd_report(const PipelineConfig& config);

/// Residual log as RFC 4180 CSV: iteration,visit,plane,distance_m,residual.
std::string residual_csv(const RetrievalResult& result, const std::vector<double>& distances);

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Standalone SVG line plot. `log_y` plots log10(y) for positive samples;
/// `reference` draws a dashed horizontal line when finite.
std::string svg_line_plot(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<PlotSeries>& series,
                          bool log_y, double reference);

}  // namespace scatterpty
