#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nsi/compound.hpp"
#include "nsi/errors.hpp"

namespace nsi {

struct LateralProfile {
  Eigen::VectorXd lateral_x;
  Eigen::VectorXd power_db;  // max == 0
  double z_min = 0.0;
  double z_max = 0.0;
};

/// Closed lateral interval [lo, hi] in meters.
struct Window {
  double lo = 0.0;
  double hi = 0.0;
};

struct Roi {
  double x_min = 0.0, x_max = 0.0;
  double z_min = 0.0, z_max = 0.0;
};

struct GratingLobeReport {
  double main_lobe_db = 0.0;
  double gl_left_db = 0.0;
  double gl_right_db = 0.0;
  double gl_level_db = 0.0;
  Window main_window;
  std::vector<Window> gl_windows;
};

struct GratingAngles {
  std::optional<double> minus;  // sin(steer) - lambda / pitch
  std::optional<double> plus;   // sin(steer) + lambda / pitch
};

/**
 * @brief Axially integrated power per lateral column, in dB re the strongest column.
 *
 * Columns with zero power, or below floor_db, read floor_db.
 */
template <typename Scalar>
LateralProfile lateral_integrated_power_profile(const EnvelopeImage<Scalar>& e, double z_min, double z_max,
                                                double floor_db = -300.0) {
  const auto& z = e.grid.axial_z;
  std::vector<Index> rows;
  for (Index i = 0; i < z.size(); ++i) {
    if (z[i] >= z_min && z[i] <= z_max) rows.push_back(i);
  }
  if (rows.empty()) throw std::invalid_argument("lateral_integrated_power_profile: axial range misses the grid");
  const Index cols = e.values.cols();
  Eigen::VectorXd power = Eigen::VectorXd::Zero(cols);
  for (Index j = 0; j < cols; ++j) {
    double acc = 0.0;
    for (const Index i : rows) {
      const auto v = static_cast<double>(e.values(i, j));
      acc += v * v;
    }
    power[j] = acc;
  }
  const double peak = power.maxCoeff();
  if (!(peak > 0.0)) throw std::invalid_argument("lateral_integrated_power_profile: no power in axial range");
  LateralProfile p{e.grid.lateral_x, Eigen::VectorXd(cols), z_min, z_max};
  for (Index j = 0; j < cols; ++j) {
    const double db = power[j] > 0.0 ? 10.0 * std::log10(power[j] / peak) : floor_db;
    p.power_db[j] = std::max(db, floor_db);
  }
  return p;
}

/// Grating-lobe directions from sin(g) = sin(steer) -/+ lambda / pitch; evanescent branches are empty.
inline GratingAngles predicted_grating_angle(double steer_deg, double wavelength, double pitch) {
  if (!(pitch > 0.0)) throw std::invalid_argument("predicted_grating_angle: pitch must be > 0");
  const double s = std::sin(steer_deg * std::numbers::pi / 180.0);
  const double r = wavelength / pitch;
  GratingAngles g;
  auto branch = [](double v) -> std::optional<double> {
    if (std::abs(v) > 1.0) return std::nullopt;
    return std::asin(v) * 180.0 / std::numbers::pi;
  };
  g.minus = branch(s - r);
  g.plus = branch(s + r);
  return g;
}

namespace detail {

inline double window_max(const LateralProfile& p, const Window& w, const char* what) {
  if (!(w.hi >= w.lo)) throw std::invalid_argument(std::string(what) + ": window has hi < lo");
  const double x0 = p.lateral_x[0];
  const double x1 = p.lateral_x[p.lateral_x.size() - 1];
  if (w.lo < x0 || w.hi > x1) throw std::invalid_argument(std::string(what) + ": window outside profile extent");
  double best = -std::numeric_limits<double>::infinity();
  for (Index j = 0; j < p.lateral_x.size(); ++j) {
    if (p.lateral_x[j] >= w.lo && p.lateral_x[j] <= w.hi) best = std::max(best, p.power_db[j]);
  }
  if (std::isinf(best)) throw std::invalid_argument(std::string(what) + ": window contains no profile sample");
  return best;
}

}  // namespace detail

/// Peak level in the grating-lobe windows relative to the main-window peak.
inline GratingLobeReport grating_lobe_level(const LateralProfile& profile, const Window& main_window,
                                            const std::vector<Window>& gl_windows) {
  if (gl_windows.empty()) throw std::invalid_argument("grating_lobe_level: no grating-lobe windows");
  for (const auto& w : gl_windows) {
    if (!(w.hi < main_window.lo || w.lo > main_window.hi)) {
      throw std::invalid_argument("grating_lobe_level: grating-lobe window overlaps the main window");
    }
  }
  GratingLobeReport r;
  r.main_window = main_window;
  r.gl_windows = gl_windows;
  const double main = detail::window_max(profile, main_window, "grating_lobe_level");
  r.main_lobe_db = main - main;
  std::vector<double> levels;
  for (const auto& w : gl_windows) levels.push_back(detail::window_max(profile, w, "grating_lobe_level") - main);
  r.gl_left_db = levels.front();
  r.gl_right_db = levels.size() > 1 ? levels[1] : levels.front();
  r.gl_level_db = *std::max_element(levels.begin(), levels.end());
  return r;
}

inline double grating_lobe_reduction(double gl_ref_db, double gl_test_db) { return gl_ref_db - gl_test_db; }

/**
 * @brief Default search windows around a point target at (x, z).
 *
 * Grating-lobe windows span the broadside receive grating angle +/- margin_deg,
 * projected to lateral offsets at the target depth. The main window covers
 * +/- 3 nominal beamwidths (lambda * F#).
 */
struct LobeWindows {
  Window main;
  std::vector<Window> grating;
};

inline LobeWindows default_lobe_windows(double target_x, double target_z, double wavelength, double pitch,
                                        double f_number, double margin_deg = 5.0) {
  const auto g = predicted_grating_angle(0.0, wavelength, pitch);
  if (!g.plus) throw std::invalid_argument("default_lobe_windows: no propagating grating lobe for this array");
  const double deg = std::numbers::pi / 180.0;
  const double near = target_z * std::tan((*g.plus - margin_deg) * deg);
  const double far = target_z * std::tan(std::min(89.0, *g.plus + margin_deg) * deg);
  const double half_main = 3.0 * wavelength * f_number;
  LobeWindows w;
  w.main = {target_x - half_main, target_x + half_main};
  w.grating = {{target_x - far, target_x - near}, {target_x + near, target_x + far}};
  return w;
}

// ---------------------------------------------------------------------------
// Region statistics
// ---------------------------------------------------------------------------

namespace detail {

template <typename Scalar>
std::vector<double> roi_values(const EnvelopeImage<Scalar>& e, const Roi& roi, Index min_pixels, const char* who) {
  if (!(roi.x_max >= roi.x_min && roi.z_max >= roi.z_min)) throw std::invalid_argument(std::string(who) + ": inverted ROI");
  std::vector<double> v;
  for (Index j = 0; j < e.grid.cols(); ++j) {
    const double x = e.grid.lateral_x[j];
    if (x < roi.x_min || x > roi.x_max) continue;
    for (Index i = 0; i < e.grid.rows(); ++i) {
      const double z = e.grid.axial_z[i];
      if (z >= roi.z_min && z <= roi.z_max) v.push_back(static_cast<double>(e.values(i, j)));
    }
  }
  if (static_cast<Index>(v.size()) < min_pixels) {
    throw std::invalid_argument(std::string(who) + ": ROI holds " + std::to_string(v.size()) + " pixels, need " +
                                std::to_string(min_pixels));
  }
  return v;
}

struct Moments {
  double mean;
  double sd;
};

inline Moments moments(const std::vector<double>& v) {
  double mean = 0.0;
  for (const double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (const double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  return {mean, std::sqrt(var)};
}

inline bool overlaps(const Roi& a, const Roi& b) {
  return a.x_min <= b.x_max && b.x_min <= a.x_max && a.z_min <= b.z_max && b.z_min <= a.z_max;
}

}  // namespace detail

/// |mu_t - mu_b| / sqrt(sigma_t^2 + sigma_b^2) on linear envelope values.
template <typename Scalar>
double cnr(const EnvelopeImage<Scalar>& image, const Roi& target, const Roi& background) {
  if (detail::overlaps(target, background)) throw std::invalid_argument("cnr: target and background ROIs overlap");
  const auto t = detail::moments(detail::roi_values(image, target, 25, "cnr"));
  const auto b = detail::moments(detail::roi_values(image, background, 25, "cnr"));
  const double diff = std::abs(t.mean - b.mean);
  const double spread = std::sqrt(t.sd * t.sd + b.sd * b.sd);
  if (spread == 0.0) {
    if (diff == 0.0) return 0.0;
    throw std::domain_error("cnr: both ROIs constant with different means, CNR is infinite");
  }
  return diff / spread;
}

/// Mean over standard deviation of the linear envelope inside the ROI.
template <typename Scalar>
double speckle_snr(const EnvelopeImage<Scalar>& image, const Roi& roi) {
  const auto m = detail::moments(detail::roi_values(image, roi, 100, "speckle_snr"));
  if (m.sd == 0.0) throw std::domain_error("speckle_snr: zero standard deviation");
  return m.mean / m.sd;
}

/**
 * @brief Width of the connected region around the global peak that stays above
 * peak + level_db, with linear interpolation at both crossings.
 */
inline double fwhm_lateral(const Eigen::VectorXd& x, const Eigen::VectorXd& values_db, double level_db = -6.0) {
  if (x.size() != values_db.size() || x.size() < 3) throw std::invalid_argument("fwhm_lateral: need matching vectors of >= 3 samples");
  Index peak = 0;
  values_db.maxCoeff(&peak);
  const double threshold = values_db[peak] + level_db;
  Index l = peak;
  while (l > 0 && values_db[l - 1] > threshold) --l;
  Index r = peak;
  while (r + 1 < values_db.size() && values_db[r + 1] > threshold) ++r;
  if (l == 0 || r == values_db.size() - 1) throw ExtentError("fwhm_lateral: level not crossed within the profile");
  auto cross = [&](Index inside, Index outside) {
    const double t = (values_db[inside] - threshold) / (values_db[inside] - values_db[outside]);
    return x[inside] + t * (x[outside] - x[inside]);
  };
  return cross(r, r + 1) - cross(l, l - 1);
}

inline double fwhm_lateral(const LateralProfile& p, double level_db = -6.0) {
  return fwhm_lateral(p.lateral_x, p.power_db, level_db);
}

}  // namespace nsi
