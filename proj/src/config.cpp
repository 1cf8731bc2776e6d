#include "nsi/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace nsi {

using nlohmann::json;

namespace {

void bad(const std::string& key, const std::string& why) { throw std::invalid_argument(key + ": " + why); }

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) bad(where, "expected an object");
  for (const auto& [k, v] : obj.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) bad(where + "." + k, "unknown key");
  }
}

double number(const json& v, const std::string& key) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  if (!v.is_number()) bad(key, "expected a number");
  return v.get<double>();
}

template <typename T>
void read(const json& obj, const char* name, T& out, const std::string& where) {
  if (!obj.contains(name)) return;
  const auto& v = obj.at(name);
  const std::string key = where + "." + name;
  if constexpr (std::is_same_v<T, double>) {
    out = number(v, key);
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) bad(key, "expected an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (v.get<long long>() < 0) bad(key, "must be >= 0");
    }
    out = v.get<T>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) bad(key, "expected a string");
    out = v.get<std::string>();
  }
}

double require(const json& obj, const char* name, const std::string& where) {
  if (!obj.contains(name)) bad(where + "." + name, "missing");
  return number(obj.at(name), where + "." + name);
}

Roi parse_roi(const json& j, const std::string& where) {
  allow_keys(j, where, {"x_min", "x_max", "z_min", "z_max"});
  return {require(j, "x_min", where), require(j, "x_max", where), require(j, "z_min", where), require(j, "z_max", where)};
}

std::vector<double> parse_angles(const json& j, const std::string& where) {
  if (j.is_array()) {
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
  }
  allow_keys(j, where, {"from", "to", "count"});
  if (!j.contains("count") || !j.at("count").is_number_integer()) bad(where + ".count", "expected an integer");
  return angle_range(require(j, "from", where), require(j, "to", where), j.at("count").get<Index>());
}

template <typename T>
std::vector<T> parse_list(const json& j, const std::string& where) {
  if (!j.is_array()) bad(where, "expected a list");
  std::vector<T> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string key = where + "[" + std::to_string(i) + "]";
    if constexpr (std::is_integral_v<T>) {
      if (!j[i].is_number_integer()) bad(key, "expected an integer");
      out.push_back(j[i].get<T>());
    } else {
      out.push_back(number(j[i], key));
    }
  }
  return out;
}

void check_roi(const Roi& r, const ImageGrid& g, const std::string& key) {
  if (!(r.x_max > r.x_min && r.z_max > r.z_min)) bad(key, "needs x_min < x_max and z_min < z_max");
  if (r.x_max < g.lateral_x[0] || r.x_min > g.lateral_x[g.cols() - 1] || r.z_max < g.axial_z[0] ||
      r.z_min > g.axial_z[g.rows() - 1]) {
    bad(key, "does not intersect the image grid");
  }
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::HannCoherent: return "hann_coherent";
    case Method::HannIncoherent: return "hann_incoherent";
    case Method::Cnsi: return "cnsi";
    case Method::Icnsi: return "icnsi";
    case Method::Gcf: return "gcf";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (const Method m : {Method::HannCoherent, Method::HannIncoherent, Method::Cnsi, Method::Icnsi, Method::Gcf}) {
    if (method_name(m) == name) return m;
  }
  if (name == "hann") return Method::HannCoherent;
  throw std::invalid_argument("unknown method '" + name + "' (hann_coherent|hann_incoherent|cnsi|icnsi|gcf)");
}

std::vector<double> angle_range(double lo_deg, double hi_deg, Index count) {
  if (count < 1) throw std::invalid_argument("angle_range: count must be >= 1");
  if (count == 1) {
    if (lo_deg != hi_deg) throw std::invalid_argument("angle_range: a single angle needs from == to");
    return {lo_deg};
  }
  std::vector<double> out(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) {
    // integer-step form keeps -16..16 / 33 on exact integers
    out[static_cast<std::size_t>(i)] =
        (lo_deg * static_cast<double>(count - 1 - i) + hi_deg * static_cast<double>(i)) / static_cast<double>(count - 1);
  }
  return out;
}

ImageGrid ExperimentConfig::image_grid() const {
  const double dx = grid.dx > 0.0 ? grid.dx : pitch / 2.0;
  const double dz = grid.dz > 0.0 ? grid.dz : pulse.wavelength() / 16.0;
  return ImageGrid::uniform(grid.x_min, grid.x_max, dx, grid.z_min, grid.z_max, dz);
}

std::pair<double, double> ExperimentConfig::profile_range() const {
  const double tz = metrics.point_target ? metrics.point_target->z : 0.5 * (grid.z_min + grid.z_max);
  return {metrics.profile_z_min.value_or(tz - 2e-3), metrics.profile_z_max.value_or(tz + 3e-3)};
}

void ExperimentConfig::validate() const {
  if (n_elements < 2) bad("array.n_elements", "must be >= 2");
  if (!(pitch > 0.0)) bad("array.pitch", "must be > 0");
  try {
    pulse.validate();
    acquisition.validate(pulse);
  } catch (const std::invalid_argument& e) {
    bad("pulse/acquisition", e.what());
  }

  const int sources = (scatterers.empty() ? 0 : 1) + (phantom ? 1 : 0) + (rf_input ? 1 : 0);
  if (sources > 1) bad("scatterers/phantom/rf_input", "give exactly one data source");
  if (sources == 0) bad("scatterers", "no data source (scatterers, phantom or rf_input)");
  for (std::size_t i = 0; i < scatterers.size(); ++i) {
    if (!(scatterers[i].z > 0.0)) bad("scatterers[" + std::to_string(i) + "].z", "must be > 0");
  }
  if (phantom) {
    const auto& r = phantom->region;
    if (!(r.x_max > r.x_min && r.z_max > r.z_min && r.z_min > 0.0)) bad("phantom", "bad region bounds");
    if (!(phantom->density >= 0.0)) bad("phantom.density", "must be >= 0");
    for (const auto& inc : phantom->inclusions) {
      if (!(inc.radius > 0.0)) bad("phantom.inclusions.radius", "must be > 0");
      if (!(inc.amplitude_scale >= 0.0)) bad("phantom.inclusions.amplitude_scale", "must be >= 0");
    }
  }
  if (!rf_input) {
    // the record must hold every echo; corners bound the phantom's echo times
    std::vector<Scatterer> probe = scatterers;
    if (phantom) {
      const auto& r = phantom->region;
      probe = {{r.x_min, r.z_min, 1.0}, {r.x_max, r.z_min, 1.0}, {r.x_min, r.z_max, 1.0}, {r.x_max, r.z_max, 1.0}};
    }
    const GaussianPulse p(pulse);
    try {
      detail::check_record_fits(probe, geometry(), pulse, acquisition,
                                std::vector<double>(acquisition.angles_deg.size(), 0.0), p.half_support());
    } catch (const TruncationError& e) {
      bad("acquisition.record_length", e.what());
    }
  }

  if (std::isnan(snr_db)) bad("noise.snr_db", "is NaN");
  if (!(grid.z_min > 0.0)) bad("grid.z_min", "must be > 0");
  if (!(grid.x_max > grid.x_min && grid.z_max > grid.z_min)) bad("grid", "needs x_min < x_max and z_min < z_max");
  if (grid.dx < 0.0 || grid.dz < 0.0) bad("grid", "spacing must be > 0 (0 selects the default)");
  const ImageGrid g = image_grid();
  if (g.dz() > pulse.wavelength() / 4.0 * (1.0 + 1e-9)) bad("grid.dz", "must be <= wavelength / 4");
  if (g.rows() < 8) bad("grid", "needs at least 8 axial samples for envelope detection");
  if (g.cols() < 3) bad("grid", "needs at least 3 lateral samples");
  if (!(dc_offset > 0.0)) bad("dc_offset", "must be > 0");
  if (gcf_m0 < 0) bad("gcf_m0", "must be >= 0");
  if (!(0.0 < lpf.pass_edge && lpf.pass_edge < lpf.stop_edge && lpf.stop_edge < 1.0)) {
    bad("lpf", "needs 0 < pass_edge < stop_edge < 1");
  }
  if (!(lpf.stop_atten_db > 0.0)) bad("lpf.stop_atten_db", "must be > 0");
  if (!(dynamic_range_db > 0.0)) bad("output.dynamic_range_db", "must be > 0");

  if (metrics.point_target) {
    const auto& t = metrics.point_target.value();
    if (!(t.z > 0.0)) bad("metrics.point_target.z", "must be > 0");
    const auto [z0, z1] = profile_range();
    if (!(z1 > z0)) bad("metrics.profile_z_max", "must exceed profile_z_min");
    if (z1 < g.axial_z[0] || z0 > g.axial_z[g.rows() - 1]) bad("metrics.profile_z_min", "axial range misses the grid");
    const auto w = default_lobe_windows(t.x, t.z, pulse.wavelength(), pitch, acquisition.f_number);
    for (const auto& win : w.grating) {
      if (win.lo < g.lateral_x[0] || win.hi > g.lateral_x[g.cols() - 1]) {
        bad("grid", "lateral extent does not cover the grating-lobe windows of the point target");
      }
    }
  }
  if (metrics.cnr_target.has_value() != metrics.cnr_background.has_value()) {
    bad("metrics.cnr_target", "CNR needs both target and background");
  }
  if (metrics.cnr_target) {
    check_roi(*metrics.cnr_target, g, "metrics.cnr_target");
    check_roi(*metrics.cnr_background, g, "metrics.cnr_background");
    if (detail::overlaps(*metrics.cnr_target, *metrics.cnr_background)) bad("metrics.cnr_background", "overlaps the target ROI");
  }
  if (metrics.speckle) check_roi(*metrics.speckle, g, "metrics.speckle");

  const auto n_cfg = static_cast<Index>(acquisition.angles_deg.size());
  for (const double c : sweep.dc_offset) {
    if (!(c > 0.0)) bad("sweep.dc_offset", "values must be > 0");
  }
  for (const Index n : sweep.n_angles) {
    if (n < 1 || n > n_cfg) bad("sweep.n_angles", std::to_string(n) + " outside 1.." + std::to_string(n_cfg));
    if (n == 1 ? n_cfg % 2 == 0 : (n_cfg - 1) % (n - 1) != 0) {
      bad("sweep.n_angles", std::to_string(n) + " is not a symmetric uniform subset of " + std::to_string(n_cfg) + " angles");
    }
  }
  for (const double s : sweep.snr_db) {
    if (std::isnan(s)) bad("sweep.snr_db", "NaN value");
  }
}

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("malformed JSON: ") + e.what());
  }
  allow_keys(root, "config",
             {"array", "pulse", "acquisition", "seed", "scatterers", "phantom", "rf_input", "noise", "grid", "method",
              "dc_offset", "gcf_m0", "lpf", "metrics", "sweep", "output"});
  ExperimentConfig c;

  if (root.contains("array")) {
    const auto& j = root["array"];
    allow_keys(j, "array", {"n_elements", "pitch"});
    read(j, "n_elements", c.n_elements, "array");
    read(j, "pitch", c.pitch, "array");
  }
  if (root.contains("pulse")) {
    const auto& j = root["pulse"];
    allow_keys(j, "pulse", {"center_frequency", "fractional_bandwidth", "sound_speed"});
    read(j, "center_frequency", c.pulse.center_frequency, "pulse");
    read(j, "fractional_bandwidth", c.pulse.fractional_bandwidth, "pulse");
    read(j, "sound_speed", c.pulse.sound_speed, "pulse");
  }
  if (root.contains("acquisition")) {
    const auto& j = root["acquisition"];
    allow_keys(j, "acquisition", {"angles_deg", "sampling_frequency", "f_number", "record_length"});
    if (j.contains("angles_deg")) c.acquisition.angles_deg = parse_angles(j["angles_deg"], "acquisition.angles_deg");
    read(j, "sampling_frequency", c.acquisition.sampling_frequency, "acquisition");
    read(j, "f_number", c.acquisition.f_number, "acquisition");
    read(j, "record_length", c.acquisition.record_length, "acquisition");
  }
  read(root, "seed", c.acquisition.seed, "config");

  if (root.contains("scatterers")) {
    const auto& arr = root["scatterers"];
    if (!arr.is_array()) bad("scatterers", "expected a list");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = "scatterers[" + std::to_string(i) + "]";
      allow_keys(arr[i], where, {"x", "z", "amplitude"});
      Scatterer s{require(arr[i], "x", where), require(arr[i], "z", where), 1.0};
      read(arr[i], "amplitude", s.amplitude, where);
      c.scatterers.push_back(s);
    }
  }
  if (root.contains("phantom")) {
    const auto& j = root["phantom"];
    allow_keys(j, "phantom", {"x_min", "x_max", "z_min", "z_max", "density", "inclusions"});
    PhantomSpec p;
    p.region = {require(j, "x_min", "phantom"), require(j, "x_max", "phantom"), require(j, "z_min", "phantom"),
                require(j, "z_max", "phantom")};
    p.density = require(j, "density", "phantom");
    if (j.contains("inclusions")) {
      const auto& arr = j["inclusions"];
      if (!arr.is_array()) bad("phantom.inclusions", "expected a list");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string where = "phantom.inclusions[" + std::to_string(i) + "]";
        allow_keys(arr[i], where, {"x", "z", "radius", "amplitude_scale"});
        Inclusion inc{require(arr[i], "x", where), require(arr[i], "z", where), require(arr[i], "radius", where), 0.0};
        read(arr[i], "amplitude_scale", inc.amplitude_scale, where);
        p.inclusions.push_back(inc);
      }
    }
    c.phantom = p;
  }
  if (root.contains("rf_input")) {
    std::string path;
    read(root, "rf_input", path, "config");
    c.rf_input = path;
  }
  if (root.contains("noise")) {
    const auto& j = root["noise"];
    allow_keys(j, "noise", {"snr_db"});
    if (j.contains("snr_db") && !j["snr_db"].is_null()) c.snr_db = number(j["snr_db"], "noise.snr_db");
  }
  if (root.contains("grid")) {
    const auto& j = root["grid"];
    allow_keys(j, "grid", {"x_min", "x_max", "dx", "z_min", "z_max", "dz"});
    read(j, "x_min", c.grid.x_min, "grid");
    read(j, "x_max", c.grid.x_max, "grid");
    read(j, "dx", c.grid.dx, "grid");
    read(j, "z_min", c.grid.z_min, "grid");
    read(j, "z_max", c.grid.z_max, "grid");
    read(j, "dz", c.grid.dz, "grid");
  }
  if (root.contains("method")) {
    std::string m;
    read(root, "method", m, "config");
    try {
      c.method = parse_method(m);
    } catch (const std::invalid_argument& e) {
      bad("method", e.what());
    }
  }
  read(root, "dc_offset", c.dc_offset, "config");
  read(root, "gcf_m0", c.gcf_m0, "config");
  if (root.contains("lpf")) {
    const auto& j = root["lpf"];
    allow_keys(j, "lpf", {"pass_edge", "stop_edge", "stop_atten_db"});
    read(j, "pass_edge", c.lpf.pass_edge, "lpf");
    read(j, "stop_edge", c.lpf.stop_edge, "lpf");
    read(j, "stop_atten_db", c.lpf.stop_atten_db, "lpf");
  }
  if (root.contains("metrics")) {
    const auto& j = root["metrics"];
    allow_keys(j, "metrics", {"point_target", "profile_z_min", "profile_z_max", "cnr_target", "cnr_background", "speckle"});
    if (j.contains("point_target")) {
      const auto& t = j["point_target"];
      allow_keys(t, "metrics.point_target", {"x", "z"});
      c.metrics.point_target = Scatterer{require(t, "x", "metrics.point_target"), require(t, "z", "metrics.point_target"), 1.0};
    }
    if (j.contains("profile_z_min")) c.metrics.profile_z_min = number(j["profile_z_min"], "metrics.profile_z_min");
    if (j.contains("profile_z_max")) c.metrics.profile_z_max = number(j["profile_z_max"], "metrics.profile_z_max");
    if (j.contains("cnr_target")) c.metrics.cnr_target = parse_roi(j["cnr_target"], "metrics.cnr_target");
    if (j.contains("cnr_background")) c.metrics.cnr_background = parse_roi(j["cnr_background"], "metrics.cnr_background");
    if (j.contains("speckle")) c.metrics.speckle = parse_roi(j["speckle"], "metrics.speckle");
  }
  if (root.contains("sweep")) {
    const auto& j = root["sweep"];
    allow_keys(j, "sweep", {"dc_offset", "n_angles", "snr_db"});
    if (j.contains("dc_offset")) c.sweep.dc_offset = parse_list<double>(j["dc_offset"], "sweep.dc_offset");
    if (j.contains("n_angles")) c.sweep.n_angles = parse_list<Index>(j["n_angles"], "sweep.n_angles");
    if (j.contains("snr_db")) c.sweep.snr_db = parse_list<double>(j["snr_db"], "sweep.snr_db");
  }
  if (root.contains("output")) {
    const auto& j = root["output"];
    allow_keys(j, "output", {"dir", "dynamic_range_db"});
    std::string dir = c.output_dir.string();
    read(j, "dir", dir, "output");
    c.output_dir = dir;
    read(j, "dynamic_range_db", c.dynamic_range_db, "output");
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  auto cfg = parse_config(ss.str());
  // relative RF input paths resolve against the config file
  if (cfg.rf_input && cfg.rf_input->is_relative()) cfg.rf_input = path.parent_path() / *cfg.rf_input;
  return cfg;
}

}  // namespace nsi
