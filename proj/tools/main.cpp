#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

#include "scatterpty/errors.hpp"
#include "scatterpty/fft.hpp"
#include "scatterpty/io.hpp"
#include "scatterpty/pipeline.hpp"

namespace fs = std::filesystem;
using namespace scatterpty;

namespace {

enum Exit { kOk = 0, kIo = 1, kValidation = 2, kNumerical = 3 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string planes;
  std::optional<int> iterations;
  std::optional<double> threshold;
  bool emit_plots = false;
  std::string out;
  std::vector<std::string> inputs;
  bool measure = false;
};

std::vector<double> parse_planes_mm(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ParameterError("--planes: '" + item + "' is not a number");
    out.push_back(v / 1e3);
  }
  if (out.empty()) throw ParameterError("--planes needs at least one offset");
  return out;
}

PipelineConfig effective_config(const Options& o) {
  PipelineConfig c = o.config.empty() ? PipelineConfig{} : load_config(o.config);
  if (o.seed) {
    c.retrieval.seed = *o.seed;
    if (c.noise) c.noise->seed = *o.seed;
  }
  if (!o.planes.empty()) c.planes = parse_planes_mm(o.planes);
  if (o.iterations) c.retrieval.iterations = *o.iterations;
  if (o.threshold) c.threshold = *o.threshold;
  if (o.emit_plots) c.emit_plots = true;
  if (!o.out.empty()) c.output_dir = o.out;
  c.validate();
  return c;
}

std::vector<fs::path> input_paths(const Options& o, const PipelineConfig& c, const char* fallback) {
  std::vector<fs::path> paths(o.inputs.begin(), o.inputs.end());
  if (paths.empty()) paths.push_back(c.output_dir / fallback);
  return paths;
}

template <class F>
int guarded(F&& body) {
  try {
    body();
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error";
    if (e.line() > 0) std::cerr << " (line " << e.line() << ")";
    std::cerr << ": " << e.what() << '\n';
    return kValidation;
  } catch (const ParameterError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure at iteration " << e.iteration() << ": " << e.what() << '\n';
    return kNumerical;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scatter ptychography: simulate, reconstruct and analyze"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "INI configuration file");
    sub->add_option("--seed", o.seed, "Seed for retrieval and noise");
    sub->add_option("--planes", o.planes, "Comma-separated stage offsets in mm");
    sub->add_option("--iterations", o.iterations, "Retrieval iterations")->check(CLI::Range(0, 1 << 30));
    sub->add_option("--threshold", o.threshold, "Bar contrast threshold");
    sub->add_flag("--emit-plots", o.emit_plots, "Write SVG plots");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_flag("--fft-measure", o.measure, "Tune FFT plans before running");
  };

  auto* simulate = app.add_subcommand("simulate", "Write synthetic scatter images");
  auto* reconstruct = app.add_subcommand("reconstruct", "Recover the target from scatter images");
  auto* analyze = app.add_subcommand("analyze", "Score a reconstruction against the target");
  auto* report = app.add_subcommand("report", "Print resolution and photon-budget figures");
  for (auto* sub : {simulate, reconstruct, analyze, report}) common(sub);
  reconstruct->add_option("--input", o.inputs,
                          "Sidecar files or directories (default: <out>/simulate)");
  analyze->add_option("--input", o.inputs, "Reconstruction directory (default: <out>/reconstruct)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }
  if (o.measure) fft::set_planner_effort(fft::PlannerEffort::measure);

  return guarded([&] {
    const PipelineConfig c = effective_config(o);
    if (simulate->parsed()) {
      for (const auto& p : cmd_simulate(c, c.output_dir / "simulate")) {
        std::cout << p.string() << '\n';
      }
    } else if (reconstruct->parsed()) {
      const auto result =
          cmd_reconstruct(input_paths(o, c, "simulate"), c, c.output_dir / "reconstruct");
      std::printf("iterations %d, final residual %s\n", result.iterations_run,
                  io::format_double(result.per_iteration_residual.back()).c_str());
    } else if (analyze->parsed()) {
      const fs::path recon = o.inputs.empty() ? c.output_dir / "reconstruct" : fs::path(o.inputs.front());
      const auto report_data = cmd_analyze(recon, c, c.output_dir / "analyze");
      std::cout << metrics_summary(report_data, c.threshold);
    } else {
      std::cout << cmd_report(c);
    }
  });
}
