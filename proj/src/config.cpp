#include "scatterpty/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "scatterpty/io.hpp"

namespace scatterpty {

namespace pt = boost::property_tree;

namespace {

struct Unit {
  const char* suffix;
  double per_si;  // value in unit = SI value * per_si
};

constexpr Unit kNm{"_nm", 1e9};
constexpr Unit kUm{"_um", 1e6};
constexpr Unit kMm{"_mm", 1e3};

// Finds the 1-based line of `key` inside `[section]` so value errors can point
// at the offending line.
int locate(const std::string& text, const std::string& section, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  std::string current;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == '[') {
      const auto close = line.find(']', first);
      current = line.substr(first + 1, close == std::string::npos ? close : close - first - 1);
      continue;
    }
    if (current != section) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string k = line.substr(first, eq - first);
    k.erase(k.find_last_not_of(" \t") + 1);
    if (k == key) return n;
  }
  return 0;
}

class Reader {
 public:
  Reader(const std::string& text, const pt::ptree& tree) : text_(text), tree_(tree) {}

  bool has_section(const std::string& section) const {
    return tree_.get_child_optional(section).has_value();
  }

  std::optional<std::string> raw(const std::string& section, const std::string& key) {
    seen_.insert(section + "." + key);
    auto child = tree_.get_child_optional(pt::ptree::path_type(section + "." + key, '.'));
    if (!child) return std::nullopt;
    return child->data();
  }

  [[noreturn]] void fail(const std::string& section, const std::string& key,
                         const std::string& why) const {
    throw ConfigError(section + "." + key + ": " + why, section + "." + key,
                      locate(text_, section, key));
  }

  double number(const std::string& section, const std::string& key, const std::string& value) {
    double v = 0.0;
    const char* b = value.data();
    const char* e = b + value.size();
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e || !std::isfinite(v)) {
      fail(section, key, "'" + value + "' is not a finite number");
    }
    return v;
  }

  // Reads `base + unit.suffix` or `base + "_m"`, in that order, into `out`.
  void length(const std::string& section, const std::string& base, const Unit& unit,
              double& out) {
    const auto scaled = raw(section, base + unit.suffix);
    const auto si = raw(section, base + "_m");
    if (scaled && si) fail(section, base + unit.suffix, "also given as " + base + "_m");
    if (scaled) out = number(section, base + unit.suffix, *scaled) / unit.per_si;
    if (si) out = number(section, base + "_m", *si);
  }

  void real(const std::string& section, const std::string& key, double& out) {
    if (auto v = raw(section, key)) out = number(section, key, *v);
  }

  template <class Int>
  void integer(const std::string& section, const std::string& key, Int& out) {
    auto v = raw(section, key);
    if (!v) return;
    Int parsed{};
    const char* b = v->data();
    const char* e = b + v->size();
    auto [ptr, ec] = std::from_chars(b, e, parsed);
    if (ec != std::errc() || ptr != e) fail(section, key, "'" + *v + "' is not an integer");
    out = parsed;
  }

  void boolean(const std::string& section, const std::string& key, bool& out) {
    auto v = raw(section, key);
    if (!v) return;
    if (*v == "true" || *v == "1" || *v == "yes") {
      out = true;
    } else if (*v == "false" || *v == "0" || *v == "no") {
      out = false;
    } else {
      fail(section, key, "'" + *v + "' is not a boolean");
    }
  }

  std::vector<double> number_list(const std::string& section, const std::string& key,
                                  const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item.erase(0, item.find_first_not_of(" \t"));
      item.erase(item.find_last_not_of(" \t") + 1);
      if (item.empty()) continue;
      out.push_back(number(section, key, item));
    }
    return out;
  }

  void reject_unknown() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty() && !body.data().empty()) {
        throw ConfigError("key '" + section + "' is outside any section", section, 0);
      }
      for (const auto& [key, value] : body) {
        if (!seen_.count(section + "." + key)) {
          throw ConfigError("unknown key " + section + "." + key, section + "." + key,
                            locate(text_, section, key));
        }
      }
    }
  }

 private:
  const std::string& text_;
  const pt::ptree& tree_;
  std::set<std::string> seen_;
};

class Writer {
 public:
  void section(const std::string& name) {
    if (!out_.str().empty()) out_ << '\n';
    out_ << '[' << name << "]\n";
  }
  void put(const std::string& key, const std::string& value) {
    out_ << key << " = " << value << '\n';
  }
  void real(const std::string& key, double v) { put(key, io::format_double(v)); }

  void length(const std::string& base, const Unit& unit, double v) {
    const std::string scaled = io::format_double(v * unit.per_si);
    if (std::strtod(scaled.c_str(), nullptr) / unit.per_si == v) {
      put(base + unit.suffix, scaled);
    } else {
      put(base + "_m", io::format_double(v));
    }
  }

  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

const char* kind_name(TargetKind k) {
  switch (k) {
    case TargetKind::usaf_bars:
      return "usaf_bars";
    case TargetKind::text_mask:
      return "text_mask";
    case TargetKind::image_file:
      return "image_file";
  }
  return "usaf_bars";
}

std::string join(const std::vector<std::string>& items) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) s += (i ? ", " : "") + items[i];
  return s;
}

}  // namespace

void PipelineConfig::validate() const {
  geometry.validate();
  target.validate();
  if (planes.empty()) throw ParameterError("at least one plane is required");
  for (std::size_t i = 0; i < planes.size(); ++i) {
    if (!std::isfinite(planes[i])) throw ParameterError("plane offsets must be finite");
    if (geometry.range_target_scatter + planes[i] <= 0.0) {
      throw ParameterError("plane offset puts the target behind the screen");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (planes[i] == planes[j]) throw ParameterError("plane offsets must be distinct");
    }
  }
  if (retrieval.iterations < 1) throw ParameterError("iterations must be >= 1");
  if (retrieval.support_a < 0 || retrieval.support_b < 0) {
    throw ParameterError("support sizes must be >= 0 (0 derives them from the target)");
  }
  RetrievalConfig probe = retrieval;
  probe.support_a = std::max(1, probe.support_a);
  probe.support_b = std::max(1, probe.support_b);
  probe.validate();
  if (std::abs(retrieval.wavelength - geometry.wavelength) > 1e-15) {
    throw ParameterError("retrieval and geometry wavelengths differ");
  }
  if (noise && (!(noise->mean_photons_per_pixel >= 0.0) ||
                !std::isfinite(noise->mean_photons_per_pixel))) {
    throw ParameterError("noise mean photons per pixel must be >= 0");
  }
  if (budget) budget->validate();
  if (grid.target_grid < 0 || grid.scatter_grid < 0) {
    throw ParameterError("grid overrides must be >= 0");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) throw ParameterError("threshold must lie in (0, 1)");
}

std::vector<double> PipelineConfig::distances() const {
  std::vector<double> z;
  for (double p : planes) z.push_back(geometry.range_target_scatter + p);
  return z;
}

PipelineConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.message(), "", static_cast<int>(e.line()));
  }
  Reader r(text, tree);
  PipelineConfig c;

  auto& g = c.geometry;
  r.length("geometry", "wavelength", kNm, g.wavelength);
  r.length("geometry", "r_c", kMm, g.range_camera_target);
  r.length("geometry", "r_s", kMm, g.range_target_scatter);
  r.length("geometry", "r_sc", kMm, g.range_scatter_camera);
  r.length("geometry", "a_c", kMm, g.camera_aperture);
  r.length("geometry", "a_s", kMm, g.scatter_extent);
  r.length("geometry", "focal_length", kMm, g.focal_length);
  r.length("geometry", "pixel_pitch", kUm, g.pixel_pitch);
  r.real("geometry", "f_number", g.f_number);

  auto& t = c.target;
  if (auto kind = r.raw("target", "kind")) {
    if (*kind == "usaf_bars") {
      t.kind = TargetKind::usaf_bars;
    } else if (*kind == "text_mask") {
      t.kind = TargetKind::text_mask;
    } else if (*kind == "image_file") {
      t.kind = TargetKind::image_file;
    } else {
      r.fail("target", "kind", "expected usaf_bars, text_mask or image_file");
    }
  }
  r.length("target", "extent_x", kMm, t.extent_x);
  r.length("target", "extent_y", kMm, t.extent_y);
  if (auto groups = r.raw("target", "groups")) {
    t.groups.clear();
    for (double v : r.number_list("target", "groups", *groups)) {
      if (v != std::floor(v)) r.fail("target", "groups", "groups must be integers");
      t.groups.push_back(static_cast<int>(v));
    }
  }
  if (auto text_value = r.raw("target", "text")) t.text = *text_value;
  r.length("target", "glyph_height", kMm, t.glyph_height);
  if (auto path = r.raw("target", "path")) t.path = *path;

  if (auto mm = r.raw("planes", "offsets_mm")) {
    c.planes = r.number_list("planes", "offsets_mm", *mm);
    for (double& p : c.planes) p /= 1e3;
  }
  if (auto m = r.raw("planes", "offsets_m")) c.planes = r.number_list("planes", "offsets_m", *m);

  auto& q = c.retrieval;
  r.integer("retrieval", "support_a_px", q.support_a);
  r.integer("retrieval", "support_b_px", q.support_b);
  r.integer("retrieval", "iterations", q.iterations);
  r.real("retrieval", "resample_ratio", q.resample_ratio);
  r.length("retrieval", "target_pitch", kUm, q.target_pitch);
  r.integer("retrieval", "seed", q.seed);
  r.boolean("retrieval", "realness_constraint", q.realness_constraint);
  r.boolean("retrieval", "plane_order_shuffle", q.plane_order_shuffle);
  r.integer("retrieval", "target_grid_px", q.target_grid);
  if (auto f = r.raw("retrieval", "stage_fraction")) {
    q.stage_fraction = r.number("retrieval", "stage_fraction", *f);
  }
  q.wavelength = g.wavelength;

  r.integer("simulation", "target_grid_px", c.grid.target_grid);
  r.integer("simulation", "scatter_grid_px", c.grid.scatter_grid);

  if (r.has_section("noise")) {
    NoiseConfig n;
    r.real("noise", "mean_photons_per_pixel", n.mean_photons_per_pixel);
    r.integer("noise", "seed", n.seed);
    c.noise = n;
  }
  if (r.has_section("budget")) {
    PhotonBudget b;
    r.real("budget", "scatter_fraction", b.scatter_fraction);
    r.real("budget", "exposure_time_s", b.exposure_time);
    r.real("budget", "source_power_photons_per_s", b.source_power);
    r.real("budget", "illumination_density_photons_per_s_m2", b.illumination_density);
    r.real("budget", "min_detectable_photons", b.min_detectable_photons);
    c.budget = b;
  }

  if (auto dir = r.raw("output", "dir")) c.output_dir = *dir;
  r.boolean("output", "emit_plots", c.emit_plots);
  r.real("output", "threshold", c.threshold);

  r.reject_unknown();
  c.validate();
  return c;
}

std::string serialize_config(const PipelineConfig& c) {
  Writer w;
  const auto& g = c.geometry;
  w.section("geometry");
  w.length("wavelength", kNm, g.wavelength);
  w.length("r_c", kMm, g.range_camera_target);
  w.length("r_s", kMm, g.range_target_scatter);
  w.length("r_sc", kMm, g.range_scatter_camera);
  w.length("a_c", kMm, g.camera_aperture);
  w.length("a_s", kMm, g.scatter_extent);
  w.length("focal_length", kMm, g.focal_length);
  w.length("pixel_pitch", kUm, g.pixel_pitch);
  w.real("f_number", g.f_number);

  const auto& t = c.target;
  w.section("target");
  w.put("kind", kind_name(t.kind));
  w.length("extent_x", kMm, t.extent_x);
  w.length("extent_y", kMm, t.extent_y);
  std::vector<std::string> groups;
  for (int v : t.groups) groups.push_back(std::to_string(v));
  w.put("groups", join(groups));
  if (!t.text.empty()) w.put("text", t.text);
  w.length("glyph_height", kMm, t.glyph_height);
  if (!t.path.empty()) w.put("path", t.path);

  w.section("planes");
  std::vector<std::string> mm;
  bool exact = true;
  for (double p : c.planes) {
    mm.push_back(io::format_double(p * 1e3));
    exact = exact && std::strtod(mm.back().c_str(), nullptr) / 1e3 == p;
  }
  if (exact) {
    w.put("offsets_mm", join(mm));
  } else {
    std::vector<std::string> m;
    for (double p : c.planes) m.push_back(io::format_double(p));
    w.put("offsets_m", join(m));
  }

  const auto& q = c.retrieval;
  w.section("retrieval");
  w.put("support_a_px", std::to_string(q.support_a));
  w.put("support_b_px", std::to_string(q.support_b));
  w.put("iterations", std::to_string(q.iterations));
  w.real("resample_ratio", q.resample_ratio);
  w.length("target_pitch", kUm, q.target_pitch);
  w.put("seed", std::to_string(q.seed));
  w.put("realness_constraint", q.realness_constraint ? "true" : "false");
  w.put("plane_order_shuffle", q.plane_order_shuffle ? "true" : "false");
  w.put("target_grid_px", std::to_string(q.target_grid));
  if (q.stage_fraction) w.real("stage_fraction", *q.stage_fraction);

  w.section("simulation");
  w.put("target_grid_px", std::to_string(c.grid.target_grid));
  w.put("scatter_grid_px", std::to_string(c.grid.scatter_grid));

  if (c.noise) {
    w.section("noise");
    w.real("mean_photons_per_pixel", c.noise->mean_photons_per_pixel);
    w.put("seed", std::to_string(c.noise->seed));
  }
  if (c.budget) {
    w.section("budget");
    w.real("scatter_fraction", c.budget->scatter_fraction);
    w.real("exposure_time_s", c.budget->exposure_time);
    w.real("source_power_photons_per_s", c.budget->source_power);
    w.real("illumination_density_photons_per_s_m2", c.budget->illumination_density);
    w.real("min_detectable_photons", c.budget->min_detectable_photons);
  }

  w.section("output");
  w.put("dir", c.output_dir.string());
  w.put("emit_plots", c.emit_plots ? "true" : "false");
  w.real("threshold", c.threshold);
  return w.str();
}

PipelineConfig load_config(const std::filesystem::path& path) {
  return parse_config(io::read_text(path));
}

}  // namespace scatterpty
