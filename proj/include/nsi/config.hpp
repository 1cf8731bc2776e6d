#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nsi/core.hpp"
#include "nsi/metrics.hpp"
#include "nsi/simulate.hpp"

namespace nsi {

enum class Method { HannCoherent, HannIncoherent, Cnsi, Icnsi, Gcf };

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct GridSpec {
  double x_min = -8e-3, x_max = 8e-3, dx = 0.0;  // dx = 0: pitch / 2
  double z_min = 2e-3, z_max = 10e-3, dz = 0.0;  // dz = 0: wavelength / 16
};

struct PhantomSpec {
  PhantomRegion region;
  double density = 0.0;  // scatterers per m^2
  std::vector<Inclusion> inclusions;
};

struct MetricsSpec {
  std::optional<Scatterer> point_target;   // enables profile, GL level and FWHM
  std::optional<double> profile_z_min;     // default target_z - 2 mm
  std::optional<double> profile_z_max;     // default target_z + 3 mm
  std::optional<Roi> cnr_target;
  std::optional<Roi> cnr_background;
  std::optional<Roi> speckle;
};

struct SweepSpec {
  std::vector<double> dc_offset;
  std::vector<Index> n_angles;
  std::vector<double> snr_db;  // +inf means noise-free
};

struct LpfSpec {
  double pass_edge = 0.3;
  double stop_edge = 0.8;
  double stop_atten_db = 60.0;
};

/**
 * @brief Everything one run needs. Lengths in meters, frequencies in Hz,
 * angles in degrees.
 */
struct ExperimentConfig {
  Index n_elements = 128;
  double pitch = 0.3048e-3;
  PulseModel pulse;
  AcquisitionConfig acquisition;

  std::vector<Scatterer> scatterers;
  std::optional<PhantomSpec> phantom;
  std::optional<std::filesystem::path> rf_input;

  double snr_db = std::numeric_limits<double>::infinity();
  GridSpec grid;
  Method method = Method::Cnsi;
  double dc_offset = 1.0;
  Index gcf_m0 = 2;
  LpfSpec lpf;
  MetricsSpec metrics;
  SweepSpec sweep;

  std::filesystem::path output_dir = "out";
  double dynamic_range_db = 60.0;

  [[nodiscard]] ArrayGeometry geometry() const { return ArrayGeometry::linear(n_elements, pitch); }
  [[nodiscard]] ImageGrid image_grid() const;
  /// Profile depth range, from the explicit bounds or the point target.
  [[nodiscard]] std::pair<double, double> profile_range() const;

  /// Throws std::invalid_argument naming the first offending key.
  void validate() const;
};

/// Parses the JSON document; unknown keys are rejected. Does not validate.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Uniform angles from lo to hi inclusive.
std::vector<double> angle_range(double lo_deg, double hi_deg, Index count);

}  // namespace nsi
