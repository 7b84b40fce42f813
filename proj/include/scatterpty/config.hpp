#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "scatterpty/errors.hpp"
#include "scatterpty/retrieval.hpp"
#include "scatterpty/simulator.hpp"

namespace scatterpty {

struct NoiseConfig {
  double mean_photons_per_pixel = 0.0;
  std::uint64_t seed = 0;
  bool operator==(const NoiseConfig&) const = default;
};

struct PipelineConfig {
  OpticsGeometry geometry;
  TargetSpec target;
  std::vector<double> planes{0.0, 0.050};  // stage offsets added to R_s
  RetrievalConfig retrieval;               // support 0 derives it from the target
  std::optional<NoiseConfig> noise;
  std::optional<PhotonBudget> budget;
  SimulationGrid grid;  // stage_fraction is taken from retrieval
  std::filesystem::path output_dir = "out";
  bool emit_plots = false;
  double threshold = 0.1;

  void validate() const;
  /// Target-to-screen distance for each plane.
  std::vector<double> distances() const;
  bool operator==(const PipelineConfig&) const = default;
};

/// Invalid configuration text or values. `line` is 0 when the problem is not
/// tied to one line.
class ConfigError : public ParameterError {
 public:
  ConfigError(const std::string& what, std::string field, int line)
      : ParameterError(what), field_(std::move(field)), line_(line) {}
  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }

 private:
  std::string field_;
  int line_;
};

/// INI text with units in the key names (wavelength_nm, r_s_mm, ...). A
/// value that does not survive the unit scaling exactly is written with an
/// SI key instead (wavelength_m), so parse(serialize(c)) == c.
PipelineConfig parse_config(const std::string& text);
std::string serialize_config(const PipelineConfig& config);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace scatterpty
