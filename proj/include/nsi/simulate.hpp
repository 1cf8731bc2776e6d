#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsi/core.hpp"
#include "nsi/errors.hpp"

namespace nsi {

struct Scatterer {
  double x = 0.0;  // [m]
  double z = 0.0;  // [m]
  double amplitude = 1.0;
};

/**
 * @brief Per-angle RF records. samples[a] is n_samples x n_elements, one column
 * per element trace.
 *
 * Sample k of angle a is taken at time time_zero[a] + k / fs, measured in the
 * frame where the transmitted wavefront crosses the array center at t = 0.
 */
template <typename Scalar = double>
struct ChannelData {
  ArrayGeometry geometry;
  PulseModel pulse;
  AcquisitionConfig acquisition;
  std::vector<MatrixX<Scalar>> samples;
  std::vector<double> time_zero;

  [[nodiscard]] Index n_angles() const { return static_cast<Index>(samples.size()); }
  [[nodiscard]] Index n_elements() const { return geometry.n_elements; }
  [[nodiscard]] Index n_samples() const { return acquisition.record_length; }

  void validate() const {
    pulse.validate();
    acquisition.validate(pulse);
    if (samples.size() != acquisition.angles_deg.size() || time_zero.size() != samples.size()) {
      throw std::invalid_argument("ChannelData: angle count mismatch");
    }
    for (const auto& m : samples) {
      if (m.rows() != acquisition.record_length || m.cols() != geometry.n_elements) {
        throw std::invalid_argument("ChannelData: trace matrix has wrong shape");
      }
      if (!m.allFinite()) throw std::invalid_argument("ChannelData: non-finite sample");
    }
  }

  static ChannelData zeros(ArrayGeometry geometry, PulseModel pulse, AcquisitionConfig acquisition) {
    ChannelData d{std::move(geometry), pulse, std::move(acquisition), {}, {}};
    d.samples.assign(d.acquisition.angles_deg.size(),
                     MatrixX<Scalar>::Zero(d.acquisition.record_length, d.geometry.n_elements));
    d.time_zero.assign(d.acquisition.angles_deg.size(), 0.0);
    return d;
  }
};

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Transmit firing delays for a steered plane wave, shifted so the earliest element fires at 0.
inline Eigen::VectorXd plane_wave_tx_delays(double theta_deg, const Eigen::VectorXd& element_x, double sound_speed) {
  if (!(std::abs(theta_deg) < 90.0)) throw std::invalid_argument("plane_wave_tx_delays: |theta| must be < 90 deg");
  Eigen::VectorXd d = element_x * (std::sin(deg2rad(theta_deg)) / sound_speed);
  if (d.size() > 0) d.array() -= d.minCoeff();
  return d;
}

/// Time for the steered wavefront to reach (x, z), relative to crossing the array center.
inline double plane_wave_arrival(double theta_deg, double x, double z, double sound_speed) {
  const double th = deg2rad(theta_deg);
  return (z * std::cos(th) + x * std::sin(th)) / sound_speed;
}

/**
 * @brief Gaussian-modulated cosine with the pulse model's -6 dB bandwidth.
 */
class GaussianPulse {
 public:
  explicit GaussianPulse(const PulseModel& pulse)
      : omega_(2.0 * std::numbers::pi * pulse.center_frequency) {
    pulse.validate();
    const double sigma_f = pulse.fractional_bandwidth * pulse.center_frequency / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
    sigma_t_ = 1.0 / (2.0 * std::numbers::pi * sigma_f);
  }

  [[nodiscard]] double operator()(double t) const {
    const double u = t / sigma_t_;
    return std::exp(-0.5 * u * u) * std::cos(omega_ * t);
  }

  [[nodiscard]] double envelope(double t) const {
    const double u = t / sigma_t_;
    return std::exp(-0.5 * u * u);
  }

  [[nodiscard]] double sigma() const { return sigma_t_; }
  /// Half-width beyond which the pulse is treated as zero (envelope < 3e-11).
  [[nodiscard]] double half_support() const { return 7.0 * sigma_t_; }

 private:
  double omega_;
  double sigma_t_ = 0.0;
};

namespace detail {

inline void check_record_fits(const std::vector<Scatterer>& scatterers, const ArrayGeometry& geometry,
                              const PulseModel& pulse, const AcquisitionConfig& acq,
                              const std::vector<double>& time_zero, double half_support) {
  const double c = pulse.sound_speed;
  const double fs = acq.sampling_frequency;
  const double x_lo = geometry.element_x[0];
  const double x_hi = geometry.element_x[geometry.n_elements - 1];
  for (std::size_t a = 0; a < acq.angles_deg.size(); ++a) {
    for (const auto& s : scatterers) {
      if (s.amplitude == 0.0) continue;
      const double tx = plane_wave_arrival(acq.angles_deg[a], s.x, s.z, c);
      const double near_x = std::clamp(s.x, x_lo, x_hi);
      const double rx_min = std::hypot(s.z, s.x - near_x) / c;
      const double rx_max = std::max(std::hypot(s.z, s.x - x_lo), std::hypot(s.z, s.x - x_hi)) / c;
      const double first = (tx + rx_min - time_zero[a] - half_support) * fs;
      const double last = (tx + rx_max - time_zero[a] + half_support) * fs;
      if (first < 0.0) {
        throw TruncationError("synthesize_channel_data: echo from scatterer at (" + std::to_string(s.x) + ", " +
                              std::to_string(s.z) + ") starts before the record");
      }
      if (last > static_cast<double>(acq.record_length - 1)) {
        throw TruncationError("synthesize_channel_data: record_length " + std::to_string(acq.record_length) +
                              " too short, echo needs sample " + std::to_string(static_cast<long long>(std::ceil(last))));
      }
    }
  }
}

}  // namespace detail

/**
 * @brief Point-scatterer pulse-echo simulation for steered plane waves.
 *
 * Each trace accumulates amplitude / r_rx * p(t - tau_tx - tau_rx) over all
 * scatterers. Elements are ideal points; the transmit wave has no spreading.
 */
template <typename Scalar = double>
ChannelData<Scalar> synthesize_channel_data(const std::vector<Scatterer>& scatterers, const ArrayGeometry& geometry,
                                            const PulseModel& pulse, const AcquisitionConfig& acquisition) {
  if (scatterers.empty()) throw std::invalid_argument("synthesize_channel_data: no scatterers");
  pulse.validate();
  acquisition.validate(pulse);
  for (const auto& s : scatterers) {
    if (!(s.z > 0.0)) throw std::invalid_argument("synthesize_channel_data: scatterer with z <= 0");
  }

  auto data = ChannelData<Scalar>::zeros(geometry, pulse, acquisition);
  const GaussianPulse p(pulse);
  const double c = pulse.sound_speed;
  const double fs = acquisition.sampling_frequency;
  const double half = p.half_support();
  const double sigma = p.sigma();
  const double step = 1.0 / (fs * sigma);  // sample spacing in units of sigma
  const double decay = std::exp(-step * step);
  const double omega = 2.0 * std::numbers::pi * pulse.center_frequency;
  const double rot_re = std::cos(omega / fs);
  const double rot_im = std::sin(omega / fs);
  detail::check_record_fits(scatterers, geometry, pulse, acquisition, data.time_zero, half);

  const auto n_angles = static_cast<Index>(acquisition.angles_deg.size());
  const Index n_el = geometry.n_elements;
  const Index n_pairs = n_angles * n_el;

#pragma omp parallel for schedule(dynamic, 4)
  for (Index pair = 0; pair < n_pairs; ++pair) {
    const Index a = pair / n_el;
    const Index e = pair % n_el;
    const double theta = acquisition.angles_deg[static_cast<std::size_t>(a)];
    const double xe = geometry.element_x[e];
    auto trace = data.samples[static_cast<std::size_t>(a)].col(e);
    for (const auto& s : scatterers) {
      if (s.amplitude == 0.0) continue;
      const double r_rx = std::hypot(s.z, s.x - xe);
      const double arrival = plane_wave_arrival(theta, s.x, s.z, c) + r_rx / c - data.time_zero[static_cast<std::size_t>(a)];
      const double gain = s.amplitude / r_rx;
      const auto k0 = std::max<Index>(0, static_cast<Index>(std::ceil((arrival - half) * fs)));
      const auto k1 = std::min<Index>(trace.size() - 1, static_cast<Index>(std::floor((arrival + half) * fs)));
      if (k1 < k0) continue;
      // incremental evaluation: Gaussian by ratio recurrence, carrier by phasor rotation
      const double t0 = static_cast<double>(k0) / fs - arrival;
      double u = t0 / sigma;
      double env = gain * std::exp(-0.5 * u * u);
      double ratio = std::exp(-u * step - 0.5 * step * step);
      double re = std::cos(omega * t0);
      double im = std::sin(omega * t0);
      for (Index k = k0; k <= k1; ++k) {
        trace[k] += static_cast<Scalar>(env * re);
        env *= ratio;
        ratio *= decay;
        const double nre = re * rot_re - im * rot_im;
        im = re * rot_im + im * rot_re;
        re = nre;
      }
    }
  }
  return data;
}

/**
 * @brief Adds white Gaussian noise at the requested raw-channel SNR.
 *
 * Signal power is the mean square over samples whose magnitude exceeds
 * 1e-6 of the peak. An infinite snr_db returns the input unchanged. Each
 * trace draws from its own stream seeded by (seed, angle, element).
 */
template <typename Scalar>
ChannelData<Scalar> add_noise(const ChannelData<Scalar>& data, double snr_db, std::uint64_t seed,
                              ChannelData<Scalar>* noise_out = nullptr) {
  if (std::isinf(snr_db) && snr_db > 0.0) {
    if (noise_out != nullptr) {
      *noise_out = data;
      for (auto& m : noise_out->samples) m.setZero();
    }
    return data;
  }
  if (std::isnan(snr_db)) throw std::invalid_argument("add_noise: snr_db is NaN");

  double peak = 0.0;
  for (const auto& m : data.samples) peak = std::max(peak, static_cast<double>(m.cwiseAbs().maxCoeff()));
  if (!(peak > 0.0)) throw std::invalid_argument("add_noise: all-zero input, SNR undefined");

  const double threshold = 1e-6 * peak;
  double sum_sq = 0.0;
  std::uint64_t support = 0;
  for (const auto& m : data.samples) {
    for (Index j = 0; j < m.cols(); ++j) {
      for (Index i = 0; i < m.rows(); ++i) {
        const double v = static_cast<double>(m(i, j));
        if (std::abs(v) > threshold) {
          sum_sq += v * v;
          ++support;
        }
      }
    }
  }
  const double signal_power = sum_sq / static_cast<double>(support);
  const double noise_sigma = std::sqrt(signal_power / std::pow(10.0, snr_db / 10.0));

  ChannelData<Scalar> out = data;
  if (noise_out != nullptr) *noise_out = data;
  const Index n_el = data.n_elements();
  const Index n_pairs = data.n_angles() * n_el;
#pragma omp parallel for schedule(static)
  for (Index pair = 0; pair < n_pairs; ++pair) {
    const Index a = pair / n_el;
    const Index e = pair % n_el;
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32U),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(e)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> gauss(0.0, noise_sigma);
    auto trace = out.samples[static_cast<std::size_t>(a)].col(e);
    for (Index k = 0; k < trace.size(); ++k) {
      const auto n = static_cast<Scalar>(gauss(rng));
      trace[k] += n;
      if (noise_out != nullptr) noise_out->samples[static_cast<std::size_t>(a)](k, e) = n;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Speckle phantoms
// ---------------------------------------------------------------------------

struct PhantomRegion {
  double x_min = -5e-3, x_max = 5e-3;
  double z_min = 5e-3, z_max = 15e-3;
};

struct Inclusion {
  double x = 0.0, z = 0.0;  // center [m]
  double radius = 1e-3;
  double amplitude_scale = 0.0;  // 0 = anechoic
};

/// Uniformly placed scatterers with amplitudes uniform on [0, 2] (unit mean).
inline std::vector<Scatterer> make_speckle_phantom(const PhantomRegion& region, double scatterer_density,
                                                   const std::vector<Inclusion>& inclusions, std::uint64_t seed) {
  if (!(scatterer_density >= 0.0)) throw std::invalid_argument("make_speckle_phantom: density must be >= 0");
  if (!(region.x_max > region.x_min) || !(region.z_max > region.z_min) || !(region.z_min > 0.0)) {
    throw std::invalid_argument("make_speckle_phantom: bad region");
  }
  const double area = (region.x_max - region.x_min) * (region.z_max - region.z_min);
  const auto count = static_cast<std::size_t>(std::llround(scatterer_density * area));
  std::vector<Scatterer> out;
  out.reserve(count);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(region.x_min, region.x_max);
  std::uniform_real_distribution<double> uz(region.z_min, region.z_max);
  std::uniform_real_distribution<double> ua(0.0, 2.0);
  for (std::size_t i = 0; i < count; ++i) {
    Scatterer s{ux(rng), uz(rng), ua(rng)};
    for (const auto& inc : inclusions) {
      if (std::hypot(s.x - inc.x, s.z - inc.z) <= inc.radius) s.amplitude *= inc.amplitude_scale;
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace nsi
