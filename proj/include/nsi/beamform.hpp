#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "nsi/core.hpp"
#include "nsi/simulate.hpp"

namespace nsi {

template <typename Scalar = double>
struct RfImage {
  ImageGrid grid;
  double angle_deg = 0.0;
  ApodizationKind apodization;
  MatrixX<Scalar> values;  // rows: axial, cols: lateral
};

inline double receive_delay(double x, double z, double element_x, double sound_speed) {
  return std::hypot(z, x - element_x) / sound_speed;
}

/// Linear interpolation of a uniformly sampled trace at time t (record start = 0); zero outside the record.
template <typename Derived>
typename Derived::Scalar interpolate_sample(const Eigen::DenseBase<Derived>& trace, double t, double fs) {
  using Scalar = typename Derived::Scalar;
  const double pos = t * fs;
  const Index n = trace.size();
  if (!(pos >= 0.0) || pos > static_cast<double>(n - 1)) return Scalar(0);
  const auto k = static_cast<Index>(pos);
  if (k == n - 1) return trace[k];
  const auto frac = static_cast<Scalar>(pos - static_cast<double>(k));
  return trace[k] + frac * (trace[k + 1] - trace[k]);
}

/**
 * @brief Fills `aligned` with the delayed samples of one pixel's subaperture.
 *
 * Slots outside the physical array are zero. `aligned` must hold sub.length entries.
 */
template <typename Scalar, typename Derived>
void align_subaperture(const ChannelData<Scalar>& data, Index angle, double x, double z, const Subaperture& sub,
                       Eigen::MatrixBase<Derived>& aligned) {
  const auto a = static_cast<std::size_t>(angle);
  const double c = data.pulse.sound_speed;
  const double fs = data.acquisition.sampling_frequency;
  const double t_tx = plane_wave_arrival(data.acquisition.angles_deg[a], x, z, c) - data.time_zero[a];
  const auto& traces = data.samples[a];
  for (Index k = 0; k < sub.length; ++k) {
    const Index e = sub.first_element + k;
    if (e < 0 || e >= data.geometry.n_elements) {
      aligned[k] = Scalar(0);
      continue;
    }
    const double t = t_tx + receive_delay(x, z, data.geometry.element_x[e], c);
    aligned[k] = interpolate_sample(traces.col(e), t, fs);
  }
}

namespace detail {

/// Weights for every even aperture length up to the array size, per apodization.
template <typename Scalar>
class WeightTable {
 public:
  WeightTable(std::span<const ApodizationKind> kinds, Index max_length) : tables_(kinds.size()) {
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      tables_[i].resize(static_cast<std::size_t>(max_length + 1));
      for (Index n = 2; n <= max_length; n += 2) tables_[i][static_cast<std::size_t>(n)] = kinds[i].template weights<Scalar>(n);
    }
  }
  [[nodiscard]] const VectorX<Scalar>& get(std::size_t kind, Index n) const { return tables_[kind][static_cast<std::size_t>(n)]; }

 private:
  std::vector<std::vector<VectorX<Scalar>>> tables_;
};

template <typename Scalar>
void check_beamform_inputs(const ChannelData<Scalar>& data, const ImageGrid& grid, double f_number) {
  grid.require_positive_depth();
  if (!(f_number > 0.0)) throw std::invalid_argument("das_beamform: f_number must be > 0");
  if (data.n_angles() == 0) throw std::invalid_argument("das_beamform: channel data has no angles");
  if (static_cast<Index>(data.time_zero.size()) != data.n_angles()) {
    throw std::invalid_argument("das_beamform: time_zero size mismatch");
  }
  for (const auto& m : data.samples) {
    if (m.cols() != data.geometry.n_elements) throw std::invalid_argument("das_beamform: element count mismatch");
  }
}

}  // namespace detail

/**
 * @brief Calls fn(row, col, sub, aligned) for every pixel of one angle.
 *
 * Columns run in parallel; fn must only write state owned by its pixel.
 */
template <typename Scalar, typename PixelFn>
void for_each_aligned_pixel(const ChannelData<Scalar>& data, Index angle, const ImageGrid& grid, double f_number,
                            PixelFn&& fn) {
  const Index rows = grid.rows();
  const Index cols = grid.cols();
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < cols; ++j) {
    VectorX<Scalar> aligned(std::max<Index>(2, data.geometry.n_elements));
    const double x = grid.lateral_x[j];
    for (Index i = 0; i < rows; ++i) {
      const double z = grid.axial_z[i];
      const Subaperture sub = subaperture_for_pixel(z, x, f_number, data.geometry);
      auto slot = aligned.head(sub.length);
      align_subaperture(data, angle, x, z, sub, slot);
      fn(i, j, sub, slot);
    }
  }
}

/**
 * @brief Delay-and-sum for several apodizations at once.
 *
 * Returns result[angle][kind]. The window spans the full nominal subaperture,
 * padded slots included, and summation runs in ascending element order.
 */
template <typename Scalar>
std::vector<std::vector<RfImage<Scalar>>> das_beamform_multi(const ChannelData<Scalar>& data, const ImageGrid& grid,
                                                             std::span<const ApodizationKind> kinds, double f_number) {
  detail::check_beamform_inputs(data, grid, f_number);
  const Index max_len = std::max<Index>(2, data.geometry.n_elements - data.geometry.n_elements % 2);
  const detail::WeightTable<Scalar> table(kinds, max_len);

  std::vector<std::vector<RfImage<Scalar>>> out(static_cast<std::size_t>(data.n_angles()));
  for (Index a = 0; a < data.n_angles(); ++a) {
    auto& per_kind = out[static_cast<std::size_t>(a)];
    for (const auto& kind : kinds) {
      per_kind.push_back({grid, data.acquisition.angles_deg[static_cast<std::size_t>(a)], kind,
                          MatrixX<Scalar>::Zero(grid.rows(), grid.cols())});
    }
    for_each_aligned_pixel(data, a, grid, f_number, [&](Index i, Index j, const Subaperture& sub, const auto& aligned) {
      for (std::size_t k = 0; k < kinds.size(); ++k) {
        const auto& w = table.get(k, sub.length);
        Scalar acc(0);
        for (Index e = 0; e < sub.length; ++e) acc += w[e] * aligned[e];
        per_kind[k].values(i, j) = acc;
      }
    });
  }
  return out;
}

/// One RF image per angle for a single apodization.
template <typename Scalar>
std::vector<RfImage<Scalar>> das_beamform(const ChannelData<Scalar>& data, const ImageGrid& grid,
                                          const ApodizationKind& apodization, double f_number) {
  const ApodizationKind kinds[] = {apodization};
  auto multi = das_beamform_multi<Scalar>(data, grid, kinds, f_number);
  std::vector<RfImage<Scalar>> out;
  out.reserve(multi.size());
  for (auto& per_kind : multi) out.push_back(std::move(per_kind.front()));
  return out;
}

}  // namespace nsi
