#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "nsi/beamform.hpp"
#include "nsi/fir.hpp"

namespace nsi {

template <typename Scalar = double>
struct EnvelopeImage {
  ImageGrid grid;
  MatrixX<Scalar> values;  // >= 0
};

template <typename Scalar = double>
struct BModeImage {
  ImageGrid grid;
  MatrixX<Scalar> values_db;  // max exactly 0
  double floor_db = -120.0;
};

/// The three receive images NSI needs for one steering angle.
template <typename Scalar = double>
struct NsiTriplet {
  RfImage<Scalar> zm;
  RfImage<Scalar> dc1;
  RfImage<Scalar> dc2;
};

struct NsiDiagnostics {
  double raw_min = 0.0;  // most negative (E_DC1 + E_DC2) / 2 - E_ZM before clamping
  Index clamped = 0;     // pixels set to 0
};

struct GcfConfig {
  Index m0 = 2;
};

enum class CompoundMode { Coherent, Incoherent };

namespace detail {

inline void require_same_grid(const ImageGrid& a, const ImageGrid& b, const char* who) {
  if (!(a == b)) throw std::invalid_argument(std::string(who) + ": grid mismatch");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Envelope and log compression
// ---------------------------------------------------------------------------

/**
 * @brief Magnitude of the analytic signal along each column (axial direction).
 *
 * Uses the FFT: keep DC and Nyquist, double positive frequencies, drop negative ones.
 */
template <typename Scalar>
MatrixX<Scalar> analytic_magnitude(const MatrixX<Scalar>& rf) {
  const Index n = rf.rows();
  if (n < 8) throw std::invalid_argument("envelope: need at least 8 axial samples");
  MatrixX<Scalar> out(n, rf.cols());
#pragma omp parallel
  {
    Eigen::FFT<Scalar> fft;
    std::vector<Scalar> column(static_cast<std::size_t>(n));
    std::vector<std::complex<Scalar>> spectrum;
    std::vector<std::complex<Scalar>> analytic;
#pragma omp for schedule(static)
    for (Index j = 0; j < rf.cols(); ++j) {
      for (Index i = 0; i < n; ++i) column[static_cast<std::size_t>(i)] = rf(i, j);
      fft.fwd(spectrum, column);
      const Index half = n / 2;
      for (Index k = 1; k < n; ++k) {
        auto& s = spectrum[static_cast<std::size_t>(k)];
        if (k < (n + 1) / 2) {
          s *= Scalar(2);
        } else if (!(n % 2 == 0 && k == half)) {
          s = std::complex<Scalar>(0, 0);
        }
      }
      fft.inv(analytic, spectrum);
      for (Index i = 0; i < n; ++i) out(i, j) = std::abs(analytic[static_cast<std::size_t>(i)]);
    }
  }
  return out;
}

template <typename Scalar>
EnvelopeImage<Scalar> envelope(const RfImage<Scalar>& rf) {
  return {rf.grid, analytic_magnitude<Scalar>(rf.values)};
}

/// Per pixel max((E_DC1 + E_DC2) / 2 - E_ZM, 0).
template <typename Scalar>
EnvelopeImage<Scalar> nsi_combine(const EnvelopeImage<Scalar>& e_zm, const EnvelopeImage<Scalar>& e_dc1,
                                  const EnvelopeImage<Scalar>& e_dc2, NsiDiagnostics* diag = nullptr) {
  detail::require_same_grid(e_zm.grid, e_dc1.grid, "nsi_combine");
  detail::require_same_grid(e_zm.grid, e_dc2.grid, "nsi_combine");
  EnvelopeImage<Scalar> out{e_zm.grid, MatrixX<Scalar>(e_zm.values.rows(), e_zm.values.cols())};
  double raw_min = std::numeric_limits<double>::infinity();
  Index clamped = 0;
  for (Index j = 0; j < out.values.cols(); ++j) {
    for (Index i = 0; i < out.values.rows(); ++i) {
      const Scalar raw = (e_dc1.values(i, j) + e_dc2.values(i, j)) / Scalar(2) - e_zm.values(i, j);
      raw_min = std::min(raw_min, static_cast<double>(raw));
      if (raw < Scalar(0)) {
        out.values(i, j) = Scalar(0);
        ++clamped;
      } else {
        out.values(i, j) = raw;
      }
    }
  }
  if (diag != nullptr) *diag = {raw_min, clamped};
  return out;
}

/// 20 log10(e / max e); non-positive or sub-floor pixels go to floor_db.
template <typename Scalar>
BModeImage<Scalar> to_db(const EnvelopeImage<Scalar>& e, double floor_db = -120.0) {
  if (e.values.size() == 0) throw std::invalid_argument("to_db: empty image");
  const Scalar peak = e.values.maxCoeff();
  if (!(peak > Scalar(0))) throw std::invalid_argument("to_db: all-zero image, dB scale undefined");
  BModeImage<Scalar> out{e.grid, MatrixX<Scalar>(e.values.rows(), e.values.cols()), floor_db};
  const auto floor = static_cast<Scalar>(floor_db);
  for (Index j = 0; j < e.values.cols(); ++j) {
    for (Index i = 0; i < e.values.rows(); ++i) {
      const Scalar v = e.values(i, j);
      if (!(v > Scalar(0))) {
        out.values_db(i, j) = floor;
        continue;
      }
      const Scalar db = Scalar(20) * std::log10(v / peak);
      out.values_db(i, j) = db < floor ? floor : db;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Angular compounding
// ---------------------------------------------------------------------------

namespace detail {

template <typename Scalar, typename Getter>
MatrixX<Scalar> sum_over_angles(std::size_t n, Getter&& get) {
  MatrixX<Scalar> acc = get(0);
  for (std::size_t a = 1; a < n; ++a) acc += get(a);
  return acc;
}

template <typename Scalar>
void check_triplets(const std::vector<NsiTriplet<Scalar>>& per_angle, const char* who) {
  if (per_angle.empty()) throw std::invalid_argument(std::string(who) + ": empty angle set");
  const ImageGrid& g = per_angle.front().zm.grid;
  for (const auto& t : per_angle) {
    require_same_grid(g, t.zm.grid, who);
    require_same_grid(g, t.dc1.grid, who);
    require_same_grid(g, t.dc2.grid, who);
  }
}

}  // namespace detail

/// Beamforms the ZM / DC1 / DC2 triplet for every angle.
template <typename Scalar>
std::vector<NsiTriplet<Scalar>> beamform_nsi(const ChannelData<Scalar>& data, const ImageGrid& grid, double dc_offset,
                                             double f_number) {
  const ApodizationKind kinds[] = {ApodizationKind::zero_mean(), ApodizationKind::dc_offset(dc_offset),
                                   ApodizationKind::dc_offset_flipped(dc_offset)};
  auto multi = das_beamform_multi<Scalar>(data, grid, kinds, f_number);
  std::vector<NsiTriplet<Scalar>> out;
  out.reserve(multi.size());
  for (auto& v : multi) out.push_back({std::move(v[0]), std::move(v[1]), std::move(v[2])});
  return out;
}

/// Coherent NSI: sum RF over angles per apodization, then envelope and subtract.
template <typename Scalar>
EnvelopeImage<Scalar> cnsi_envelope(const std::vector<NsiTriplet<Scalar>>& per_angle, NsiDiagnostics* diag = nullptr) {
  detail::check_triplets(per_angle, "cnsi");
  const ImageGrid& grid = per_angle.front().zm.grid;
  const auto n = per_angle.size();
  const RfImage<Scalar> zm{grid, 0.0, ApodizationKind::zero_mean(),
                           detail::sum_over_angles<Scalar>(n, [&](std::size_t a) -> const MatrixX<Scalar>& { return per_angle[a].zm.values; })};
  const RfImage<Scalar> dc1{grid, 0.0, per_angle.front().dc1.apodization,
                            detail::sum_over_angles<Scalar>(n, [&](std::size_t a) -> const MatrixX<Scalar>& { return per_angle[a].dc1.values; })};
  const RfImage<Scalar> dc2{grid, 0.0, per_angle.front().dc2.apodization,
                            detail::sum_over_angles<Scalar>(n, [&](std::size_t a) -> const MatrixX<Scalar>& { return per_angle[a].dc2.values; })};
  return nsi_combine(envelope(zm), envelope(dc1), envelope(dc2), diag);
}

template <typename Scalar>
BModeImage<Scalar> cnsi(const std::vector<NsiTriplet<Scalar>>& per_angle, double floor_db = -120.0) {
  return to_db(cnsi_envelope(per_angle), floor_db);
}

/**
 * @brief Filtered incoherent NSI.
 *
 * Each apodization's RF is low-passed pixelwise along the angle axis
 * (zero phase), then every angle gets its own envelope and NSI combination,
 * and the per-angle NSI envelopes are summed.
 */
template <typename Scalar>
EnvelopeImage<Scalar> icnsi_envelope(const std::vector<NsiTriplet<Scalar>>& per_angle, const FirFilter& lpf,
                                     NsiDiagnostics* diag = nullptr) {
  detail::check_triplets(per_angle, "icnsi");
  const ImageGrid& grid = per_angle.front().zm.grid;
  const auto n_angles = static_cast<Index>(per_angle.size());
  const Index rows = grid.rows();
  const Index cols = grid.cols();
  const Eigen::VectorXd kernel = zero_phase_kernel(lpf.taps);

  auto filter_stack = [&](auto member) {
    std::vector<MatrixX<Scalar>> out(per_angle.size(), MatrixX<Scalar>(rows, cols));
#pragma omp parallel for schedule(static)
    for (Index j = 0; j < cols; ++j) {
      VectorX<Scalar> seq(n_angles);
      for (Index i = 0; i < rows; ++i) {
        for (Index a = 0; a < n_angles; ++a) seq[a] = (per_angle[static_cast<std::size_t>(a)].*member).values(i, j);
        const VectorX<Scalar> f = apply_centered_kernel<Scalar>(kernel, seq);
        for (Index a = 0; a < n_angles; ++a) out[static_cast<std::size_t>(a)](i, j) = f[a];
      }
    }
    return out;
  };
  const auto zm = filter_stack(&NsiTriplet<Scalar>::zm);
  const auto dc1 = filter_stack(&NsiTriplet<Scalar>::dc1);
  const auto dc2 = filter_stack(&NsiTriplet<Scalar>::dc2);

  EnvelopeImage<Scalar> sum{grid, MatrixX<Scalar>::Zero(rows, cols)};
  NsiDiagnostics total{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t a = 0; a < per_angle.size(); ++a) {
    NsiDiagnostics d;
    const auto e = nsi_combine(EnvelopeImage<Scalar>{grid, analytic_magnitude<Scalar>(zm[a])},
                               EnvelopeImage<Scalar>{grid, analytic_magnitude<Scalar>(dc1[a])},
                               EnvelopeImage<Scalar>{grid, analytic_magnitude<Scalar>(dc2[a])}, &d);
    sum.values += e.values;
    total.raw_min = std::min(total.raw_min, d.raw_min);
    total.clamped += d.clamped;
  }
  if (diag != nullptr) *diag = total;
  return sum;
}

template <typename Scalar>
BModeImage<Scalar> icnsi(const std::vector<NsiTriplet<Scalar>>& per_angle, const FirFilter& lpf,
                         double floor_db = -120.0) {
  return to_db(icnsi_envelope(per_angle, lpf), floor_db);
}

/// Hann baseline: coherent sums RF before detection, incoherent sums envelopes.
template <typename Scalar>
EnvelopeImage<Scalar> hann_compound_envelope(const std::vector<RfImage<Scalar>>& per_angle, CompoundMode mode) {
  if (per_angle.empty()) throw std::invalid_argument("hann_compound: empty angle set");
  const ImageGrid& grid = per_angle.front().grid;
  for (const auto& r : per_angle) detail::require_same_grid(grid, r.grid, "hann_compound");
  const auto n = per_angle.size();
  if (mode == CompoundMode::Coherent) {
    const RfImage<Scalar> sum{grid, 0.0, per_angle.front().apodization,
                              detail::sum_over_angles<Scalar>(n, [&](std::size_t a) -> const MatrixX<Scalar>& { return per_angle[a].values; })};
    return envelope(sum);
  }
  EnvelopeImage<Scalar> acc = envelope(per_angle.front());
  for (std::size_t a = 1; a < n; ++a) acc.values += envelope(per_angle[a]).values;
  return acc;
}

template <typename Scalar>
BModeImage<Scalar> hann_compound(const std::vector<RfImage<Scalar>>& per_angle, CompoundMode mode,
                                 double floor_db = -120.0) {
  return to_db(hann_compound_envelope(per_angle, mode), floor_db);
}

// ---------------------------------------------------------------------------
// Generalized coherence factor
// ---------------------------------------------------------------------------

/**
 * @brief Fraction of aperture-spectrum energy within |k| <= m0.
 *
 * DFT across the channel dimension of the delayed, unapodized samples.
 * Returns 0 for an all-zero aperture.
 */
template <typename Derived>
double gcf_weight(const Eigen::MatrixBase<Derived>& aligned, Index m0) {
  if (m0 < 0) throw std::invalid_argument("gcf_weight: m0 must be >= 0");
  const Index n = aligned.size();
  if (n == 0) return 0.0;
  std::vector<double> cos_t(static_cast<std::size_t>(n));
  std::vector<double> sin_t(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double ang = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    cos_t[static_cast<std::size_t>(i)] = std::cos(ang);
    sin_t[static_cast<std::size_t>(i)] = std::sin(ang);
  }
  double low = 0.0;
  double total = 0.0;
  for (Index k = 0; k < n; ++k) {
    double re = 0.0;
    double im = 0.0;
    for (Index i = 0; i < n; ++i) {
      const auto t = static_cast<std::size_t>((k * i) % n);
      const auto v = static_cast<double>(aligned[i]);
      re += v * cos_t[t];
      im -= v * sin_t[t];
    }
    const double p = re * re + im * im;
    total += p;
    if (std::min(k, n - k) <= m0) low += p;
  }
  if (!(total > 0.0)) return 0.0;
  return std::min(1.0, low / total);
}

/**
 * @brief Hann-DAS weighted by the GCF per pixel and angle, coherently compounded.
 *
 * Padded (virtual) slots still hold Hann weights but are excluded from the
 * aperture spectrum.
 */
template <typename Scalar>
EnvelopeImage<Scalar> gcf_envelope(const ChannelData<Scalar>& data, const ImageGrid& grid, double f_number,
                                   const GcfConfig& gcf, std::vector<MatrixX<Scalar>>* weights_out = nullptr) {
  detail::check_beamform_inputs(data, grid, f_number);
  if (gcf.m0 < 0) throw std::invalid_argument("gcf_image: m0 must be >= 0");
  const ApodizationKind hann[] = {ApodizationKind::hann()};
  const Index max_len = std::max<Index>(2, data.geometry.n_elements - data.geometry.n_elements % 2);
  const detail::WeightTable<Scalar> table(hann, max_len);

  MatrixX<Scalar> sum = MatrixX<Scalar>::Zero(grid.rows(), grid.cols());
  if (weights_out != nullptr) weights_out->clear();
  for (Index a = 0; a < data.n_angles(); ++a) {
    MatrixX<Scalar> weighted(grid.rows(), grid.cols());
    MatrixX<Scalar> weights(grid.rows(), grid.cols());
    for_each_aligned_pixel(data, a, grid, f_number, [&](Index i, Index j, const Subaperture& sub, const auto& aligned) {
      const auto& w = table.get(0, sub.length);
      Scalar acc(0);
      for (Index e = 0; e < sub.length; ++e) acc += w[e] * aligned[e];
      const double cf = gcf_weight(aligned.segment(sub.pad_left, sub.physical_count()), gcf.m0);
      weights(i, j) = static_cast<Scalar>(cf);
      weighted(i, j) = static_cast<Scalar>(cf) * acc;
    });
    sum += weighted;
    if (weights_out != nullptr) weights_out->push_back(std::move(weights));
  }
  return {grid, analytic_magnitude<Scalar>(sum)};
}

template <typename Scalar>
BModeImage<Scalar> gcf_image(const ChannelData<Scalar>& data, const ImageGrid& grid, double f_number,
                             const GcfConfig& gcf, double floor_db = -120.0) {
  return to_db(gcf_envelope(data, grid, f_number, gcf), floor_db);
}

}  // namespace nsi
