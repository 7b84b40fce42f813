#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <limits>

#include <sys/wait.h>
#include <unistd.h>

#include "scatterpty/errors.hpp"
#include "scatterpty/io.hpp"
#include "scatterpty/pipeline.hpp"
#include "support.hpp"

using namespace scatterpty;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test case.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) {
    dir = fs::temp_directory_path() / ("scatterpty_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
};

PipelineConfig desk_config() {
  return parse_config(R"(
[geometry]
r_s_mm = 500
a_s_mm = 10
[target]
kind = text_mask
extent_x_mm = 2
extent_y_mm = 2
text = A
glyph_height_mm = 1.4
[planes]
offsets_mm = 0, 20
[retrieval]
iterations = 40
stage_fraction = 0.1
seed = 7
)");
}

std::string slurp(const fs::path& p) { return io::read_text(p); }

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SCATTERPTY_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("plane records round-trip through JSON") {
  PlaneRecord r;
  r.plane_index = 3;
  r.offset = 0.025;
  r.distance = 2.679;
  r.pitch = 40e-6;
  r.photon_scale = 1.5e9;
  r.raster_scale = 3.25e-7;
  r.frame = "camera";
  r.crop = 400;
  r.raster = "plane_03.png";
  r.raw = "plane_03.bin";
  r.target_grid = 1024;
  r.scatter_grid = 1024;
  r.stage_fraction = 0.1;
  const auto back = parse_plane_record(plane_record_json(r), "mem");
  CHECK(back.plane_index == 3);
  CHECK(back.distance == r.distance);
  CHECK(back.pitch == r.pitch);
  CHECK(back.photon_scale == r.photon_scale);
  CHECK(back.frame == "camera");
  CHECK(back.crop == 400);
  CHECK(back.stage_fraction == r.stage_fraction);
  CHECK_THROWS_AS(parse_plane_record("{", "mem"), IoError);
  CHECK_THROWS_AS(parse_plane_record(R"({"format":"other"})", "mem"), ParameterError);
  CHECK_THROWS_AS(parse_plane_record(R"({"format":"scatterpty-plane/1","plane_index":0})", "mem"),
                  ParameterError);
}

TEST_CASE("residual log layout") {
  RetrievalResult r;
  r.per_iteration_residual = {0.5, 0.25, 0.125, 0.0625};
  r.visit_plane = {1, 0, 0, 1};
  r.iterations_run = 2;
  const auto csv = residual_csv(r, {2.654, 2.704});
  CHECK(csv ==
        "iteration,visit,plane,distance_m,residual\r\n"
        "1,0,1,2.704,0.5\r\n1,1,0,2.654,0.25\r\n2,2,0,2.654,0.125\r\n2,3,1,2.704,0.0625\r\n");
}

TEST_CASE("simulation output is byte-identical across runs") {
  Scratch s("determinism");
  auto c = desk_config();
  c.noise = NoiseConfig{50.0, 11};
  const auto a = cmd_simulate(c, s.dir / "a");
  const auto b = cmd_simulate(c, s.dir / "b");
  REQUIRE(a.size() == 2);
  for (const auto& name : {"target.png", "target.bin", "config.ini", "plane_00.png", "plane_00.bin",
                           "plane_00.json", "plane_01.png", "plane_01.bin", "plane_01.json"}) {
    CHECK_MESSAGE(slurp(s.dir / "a" / name) == slurp(s.dir / "b" / name), name);
  }
  CHECK(load_config(s.dir / "a" / "config.ini") == c);
}

TEST_CASE("simulate, reconstruct and analyze through the library") {
  Scratch s("pipeline");
  const auto c = desk_config();
  const auto sidecars = cmd_simulate(c, s.dir / "sim");

  const auto raw = ingest_measurements({s.dir / "sim"}, c);
  REQUIRE(raw.measurements.size() == 2);
  CHECK(raw.measurements[0].distance == doctest::Approx(0.5));
  CHECK(raw.measurements[1].distance == doctest::Approx(0.52));
  CHECK(raw.stage_fraction == 0.1);

  // without the lossless files the 16-bit rasters are used
  fs::remove(s.dir / "sim" / "plane_00.bin");
  fs::remove(s.dir / "sim" / "plane_01.bin");
  const auto png = ingest_measurements(sidecars, c);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& x = raw.measurements[k].intensity;
    const auto& y = png.measurements[k].intensity;
    REQUIRE(x.width() == y.width());
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x.data()[i] - y.data()[i]));
    CHECK(worst <= 0.5 * x.max() / 65535.0 * (1 + 1e-9));
  }

  const auto result = cmd_reconstruct(sidecars, c, s.dir / "rec");
  CHECK(result.iterations_run == 40);
  CHECK(fs::exists(s.dir / "rec" / "estimate.png"));
  const auto csv = slurp(s.dir / "rec" / "residuals.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 80);

  auto plots = c;
  plots.emit_plots = true;
  const auto rep = cmd_analyze(s.dir / "rec", plots, s.dir / "ana");
  CHECK(rep.nrmse_aligned < 0.4);
  CHECK(!rep.has_bar_metrics);
  CHECK(fs::exists(s.dir / "ana" / "metrics.csv"));
  CHECK(fs::exists(s.dir / "ana" / "summary.txt"));
  CHECK(slurp(s.dir / "ana" / "residuals.svg").find("<svg ") != std::string::npos);

  auto other = c;
  other.retrieval.target_pitch = 5e-6;
  CHECK_THROWS_AS(cmd_analyze(s.dir / "rec", other, s.dir / "ana2"), ParameterError);
  CHECK_THROWS_AS(ingest_measurements({s.dir / "empty_dir_that_is_missing"}, c), IoError);
}

TEST_CASE("camera frames are projected onto the screen grid") {
  Scratch s("camera");
  const auto c = desk_config();
  const double gsd = screen_gsd(c.geometry);
  const int n = 120;
  RealImage frame(n, n, c.geometry.pixel_pitch);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double dx = (x - n / 2) * gsd, dy = (y - n / 2) * gsd;
      frame(x, y) = std::exp(-(dx * dx + dy * dy) / (2.0 * 0.8e-3 * 0.8e-3));
    }
  }
  const auto q = io::quantize16(frame);
  io::write_png_gray16(s.dir / "cam.png", q.raster);
  PlaneRecord r;
  r.distance = 0.5;
  r.pitch = c.geometry.pixel_pitch;
  r.raster_scale = q.scale;
  r.frame = "camera";
  r.crop = 100;
  r.raster = "cam.png";
  io::write_text(s.dir / "plane_00.json", plane_record_json(r));

  const auto in = ingest_measurements({s.dir}, c);
  REQUIRE(in.measurements.size() == 1);
  const auto& img = in.measurements[0].intensity;
  CHECK(img.pitch() == doctest::Approx(40e-6));
  CHECK(img.width() == 256);  // 100 * 79.9 / 40 = 200 samples, padded to 2^k
  double total = 0.0, expect = 0.0;
  for (double v : img.data()) total += v;
  for (int y = n / 2 - 50; y < n / 2 + 50; ++y) {
    for (int x = n / 2 - 50; x < n / 2 + 50; ++x) expect += frame(x, y);
  }
  CHECK(total * 40e-6 * 40e-6 == doctest::Approx(expect * gsd * gsd).epsilon(0.01));
  const int c0 = img.width() / 2;
  CHECK(img(c0, c0) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("command line exit codes") {
  Scratch s("cli");
  const std::string cfg = (s.dir / "desk.ini").string();
  io::write_text(cfg, serialize_config(desk_config()));
  const std::string out = (s.dir / "run").string();

  CHECK(run_cli("report --config " + cfg) == 0);
  CHECK(run_cli("simulate --config " + cfg + " --out " + out) == 0);
  CHECK(run_cli("reconstruct --config " + cfg + " --out " + out + " --iterations 5") == 0);
  CHECK(run_cli("analyze --config " + cfg + " --out " + out + " --emit-plots") == 0);
  CHECK(fs::exists(fs::path(out) / "analyze" / "metrics.csv"));
  CHECK(fs::exists(fs::path(out) / "analyze" / "contrast.svg") == false);  // text target
  CHECK(fs::exists(fs::path(out) / "analyze" / "residuals.svg"));

  CHECK(run_cli("") == 2);
  CHECK(run_cli("reconstruct --config " + cfg + " --iterations 0") == 2);
  CHECK(run_cli("simulate --config " + cfg + " --planes 0,abc") == 2);
  io::write_text(s.dir / "bad.ini", "[retrieval]\nmystery = 1\n");
  CHECK(run_cli("report --config " + (s.dir / "bad.ini").string()) == 2);
  CHECK(run_cli("report --config " + (s.dir / "missing.ini").string()) == 1);
  CHECK(run_cli("reconstruct --config " + cfg + " --input " + (s.dir / "nothing.json").string()) == 1);

  // data whose amplitude overflows during the update
  const fs::path sim = fs::path(out) / "simulate";
  auto field = io::read_field(sim / "plane_00.bin");
  for (auto& v : field.data()) v = std::numeric_limits<double>::max();
  io::write_field(sim / "plane_00.bin", field);
  CHECK(run_cli("reconstruct --config " + cfg + " --out " + out + " --input " + (sim / "plane_00.json").string()) == 3);
}
