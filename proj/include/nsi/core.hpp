#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsi/types.hpp"

namespace nsi {

/**
 * @brief Uniform linear array, element positions centered on x = 0.
 */
struct ArrayGeometry {
  Index n_elements = 0;
  double pitch = 0.0;  // [m]
  Eigen::VectorXd element_x;

  static ArrayGeometry linear(Index n_elements, double pitch) {
    if (n_elements < 1 || !(pitch > 0.0)) {
      throw std::invalid_argument("ArrayGeometry: need n_elements >= 1 and pitch > 0");
    }
    ArrayGeometry g;
    g.n_elements = n_elements;
    g.pitch = pitch;
    g.element_x.resize(n_elements);
    const double half = 0.5 * static_cast<double>(n_elements - 1);
    for (Index i = 0; i < n_elements; ++i) {
      g.element_x[i] = (static_cast<double>(i) - half) * pitch;
    }
    return g;
  }

  [[nodiscard]] double aperture() const { return static_cast<double>(n_elements - 1) * pitch; }
};

/**
 * @brief Two-way pulse description. Bandwidth is the -6 dB fractional width.
 */
struct PulseModel {
  double center_frequency = 7.82e6;  // [Hz]
  double fractional_bandwidth = 0.6;
  double sound_speed = 1540.0;  // [m/s]

  [[nodiscard]] double wavelength() const { return sound_speed / center_frequency; }

  void validate() const {
    if (!(center_frequency > 0.0)) throw std::invalid_argument("PulseModel: center_frequency must be > 0");
    if (!(fractional_bandwidth > 0.0 && fractional_bandwidth < 2.0)) {
      throw std::invalid_argument("PulseModel: fractional_bandwidth must lie in (0, 2)");
    }
    if (!(sound_speed > 0.0)) throw std::invalid_argument("PulseModel: sound_speed must be > 0");
  }
};

struct AcquisitionConfig {
  std::vector<double> angles_deg{0.0};
  double sampling_frequency = 4.0 * 7.82e6 * 2.0;  // [Hz]
  double f_number = 1.5;
  Index record_length = 2048;
  std::uint64_t seed = 1;

  void validate(const PulseModel& pulse) const {
    if (angles_deg.empty()) throw std::invalid_argument("AcquisitionConfig: no steering angles");
    for (std::size_t i = 0; i < angles_deg.size(); ++i) {
      if (!(std::abs(angles_deg[i]) < 90.0)) throw std::invalid_argument("AcquisitionConfig: |angle| must be < 90 deg");
      if (i > 0 && !(angles_deg[i] > angles_deg[i - 1])) {
        throw std::invalid_argument("AcquisitionConfig: angles must be strictly increasing");
      }
    }
    if (!(f_number > 0.0)) throw std::invalid_argument("AcquisitionConfig: f_number must be > 0");
    if (!(sampling_frequency >= 4.0 * pulse.center_frequency)) {
      throw std::invalid_argument("AcquisitionConfig: sampling_frequency must be >= 4 x center_frequency");
    }
    if (record_length < 1) throw std::invalid_argument("AcquisitionConfig: record_length must be >= 1");
  }
};

/**
 * @brief Rectilinear pixel grid. Rows follow axial_z, columns follow lateral_x.
 */
struct ImageGrid {
  Eigen::VectorXd lateral_x;
  Eigen::VectorXd axial_z;

  static ImageGrid uniform(double x_min, double x_max, double dx, double z_min, double z_max, double dz) {
    if (!(dx > 0.0 && dz > 0.0) || x_max < x_min || z_max < z_min) {
      throw std::invalid_argument("ImageGrid: bad extent or spacing");
    }
    ImageGrid g;
    const auto nx = static_cast<Index>(std::floor((x_max - x_min) / dx + 1e-9)) + 1;
    const auto nz = static_cast<Index>(std::floor((z_max - z_min) / dz + 1e-9)) + 1;
    g.lateral_x = Eigen::VectorXd::LinSpaced(nx, x_min, x_min + static_cast<double>(nx - 1) * dx);
    g.axial_z = Eigen::VectorXd::LinSpaced(nz, z_min, z_min + static_cast<double>(nz - 1) * dz);
    return g;
  }

  [[nodiscard]] Index rows() const { return axial_z.size(); }
  [[nodiscard]] Index cols() const { return lateral_x.size(); }

  [[nodiscard]] double dx() const { return cols() > 1 ? lateral_x[1] - lateral_x[0] : 0.0; }
  [[nodiscard]] double dz() const { return rows() > 1 ? axial_z[1] - axial_z[0] : 0.0; }

  bool operator==(const ImageGrid& other) const {
    return lateral_x.size() == other.lateral_x.size() && axial_z.size() == other.axial_z.size() &&
           lateral_x == other.lateral_x && axial_z == other.axial_z;
  }

  void require_positive_depth() const {
    if (rows() == 0 || cols() == 0) throw std::invalid_argument("ImageGrid: empty grid");
    if (axial_z.minCoeff() <= 0.0) throw std::invalid_argument("ImageGrid: pixel with z <= 0");
  }
};

// ---------------------------------------------------------------------------
// Apodization
// ---------------------------------------------------------------------------

/// +1 on the first n/2 elements, -1 on the rest.
template <typename Scalar = double>
VectorX<Scalar> zero_mean_apodization(Index n) {
  if (n < 2 || n % 2 != 0) {
    throw std::invalid_argument("zero_mean_apodization: n must be even and >= 2, got " + std::to_string(n));
  }
  VectorX<Scalar> w(n);
  w.head(n / 2).setConstant(Scalar(1));
  w.tail(n / 2).setConstant(Scalar(-1));
  return w;
}

/// Zero-mean window plus a DC offset; the flipped variant is its reversal.
template <typename Scalar = double>
VectorX<Scalar> dc_apodization(Index n, Scalar offset, bool flipped) {
  if (!(offset > Scalar(0))) throw std::invalid_argument("dc_apodization: offset must be > 0");
  VectorX<Scalar> w = zero_mean_apodization<Scalar>(n).array() + offset;
  if (flipped) w.reverseInPlace();
  return w;
}

/// Symmetric Hann window, zero at both ends. n == 1 gives [1].
template <typename Scalar = double>
VectorX<Scalar> hann_apodization(Index n) {
  if (n < 1) throw std::invalid_argument("hann_apodization: n must be >= 1");
  VectorX<Scalar> w(n);
  if (n == 1) {
    w[0] = Scalar(1);
    return w;
  }
  const Scalar denom = static_cast<Scalar>(n - 1);
  for (Index i = 0; i < n; ++i) {
    w[i] = Scalar(0.5) * (Scalar(1) - std::cos(Scalar(2) * std::numbers::pi_v<Scalar> * static_cast<Scalar>(i) / denom));
  }
  // exact mirror so w_i == w_{n-1-i} bit for bit
  for (Index i = 0; i < n / 2; ++i) w[n - 1 - i] = w[i];
  return w;
}

/**
 * @brief Receive apodization choice. DC variants carry the offset c.
 */
struct ApodizationKind {
  enum class Kind { Hann, Uniform, ZeroMean, DcOffset, DcOffsetFlipped };

  Kind kind = Kind::Hann;
  double offset = 0.0;

  static ApodizationKind hann() { return {Kind::Hann, 0.0}; }
  static ApodizationKind uniform() { return {Kind::Uniform, 0.0}; }
  static ApodizationKind zero_mean() { return {Kind::ZeroMean, 0.0}; }
  static ApodizationKind dc_offset(double c) { return checked({Kind::DcOffset, c}); }
  static ApodizationKind dc_offset_flipped(double c) { return checked({Kind::DcOffsetFlipped, c}); }

  template <typename Scalar = double>
  [[nodiscard]] VectorX<Scalar> weights(Index n) const {
    switch (kind) {
      case Kind::Hann: return hann_apodization<Scalar>(n);
      case Kind::Uniform:
        if (n < 1) throw std::invalid_argument("uniform apodization: n must be >= 1");
        return VectorX<Scalar>::Ones(n);
      case Kind::ZeroMean: return zero_mean_apodization<Scalar>(n);
      case Kind::DcOffset: return dc_apodization<Scalar>(n, static_cast<Scalar>(offset), false);
      case Kind::DcOffsetFlipped: return dc_apodization<Scalar>(n, static_cast<Scalar>(offset), true);
    }
    throw std::logic_error("unreachable apodization kind");
  }

  [[nodiscard]] std::string name() const {
    switch (kind) {
      case Kind::Hann: return "hann";
      case Kind::Uniform: return "uniform";
      case Kind::ZeroMean: return "zm";
      case Kind::DcOffset: return "dc1";
      case Kind::DcOffsetFlipped: return "dc2";
    }
    return "?";
  }

  bool operator==(const ApodizationKind&) const = default;

 private:
  static ApodizationKind checked(ApodizationKind a) {
    if (!(a.offset > 0.0)) throw std::invalid_argument("ApodizationKind: DC offset must be > 0");
    return a;
  }
};

// ---------------------------------------------------------------------------
// Subaperture selection
// ---------------------------------------------------------------------------

/**
 * @brief Receive subaperture for one pixel. first_element may be negative and
 * first_element + length may exceed the array; those slots are zero-padded.
 */
struct Subaperture {
  Index first_element = 0;
  Index length = 2;
  Index pad_left = 0;
  Index pad_right = 0;

  [[nodiscard]] Index physical_count() const { return length - pad_left - pad_right; }
  bool operator==(const Subaperture&) const = default;
};

/// Active aperture length for depth z: floor(z / (F# pitch)) rounded down to even.
inline Index subaperture_length(double z, double f_number, const ArrayGeometry& geometry) {
  const Index max_even = std::max<Index>(2, geometry.n_elements - geometry.n_elements % 2);
  const double width = z / f_number;
  // guard against 34.9999999 -> 34 style rounding noise only at the 1e-9 level
  auto n = static_cast<Index>(std::floor(width / geometry.pitch + 1e-9));
  n -= n % 2;
  return std::clamp<Index>(n, 2, max_even);
}

inline Subaperture subaperture_for_pixel(double z, double lateral_center_x, double f_number,
                                         const ArrayGeometry& geometry) {
  if (!(z > 0.0)) throw std::invalid_argument("subaperture_for_pixel: z must be > 0");
  Subaperture s;
  s.length = subaperture_length(z, f_number, geometry);
  const Index half = s.length / 2;
  auto center = static_cast<Index>(std::lround((lateral_center_x - geometry.element_x[0]) / geometry.pitch));
  // keep at least one physical element inside the window
  center = std::clamp<Index>(center, -half + 1, geometry.n_elements + half - 1);
  s.first_element = center - half;
  s.pad_left = std::max<Index>(0, -s.first_element);
  s.pad_right = std::max<Index>(0, s.first_element + s.length - geometry.n_elements);
  return s;
}

}  // namespace nsi
