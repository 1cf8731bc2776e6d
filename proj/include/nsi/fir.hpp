#pragma once

#include <vector>

#include "nsi/types.hpp"

namespace nsi {

/**
 * @brief Linear-phase FIR low-pass. Edges are normalized to Nyquist (1.0 = fs/2).
 */
struct FirFilter {
  Eigen::VectorXd taps;
  double pass_edge = 0.3;
  double stop_edge = 0.8;
  double stop_atten_db = 0.0;    // achieved, one pass
  double passband_ripple = 0.0;  // achieved max |H - 1| over the passband

  [[nodiscard]] Index size() const { return taps.size(); }
  /// |H| at normalized frequency f in [0, 1].
  [[nodiscard]] double magnitude(double f) const;
};

/**
 * @brief Equiripple low-pass design by the Remez exchange algorithm.
 *
 * Designs odd-length (type I) filters of increasing order and returns the
 * first whose response, measured on a 4096-point grid, meets both ripple
 * limits. Throws DesignError when no order up to max_taps does.
 */
FirFilter design_equiripple_lowpass(double pass_edge, double stop_edge, double pass_ripple, double stop_ripple,
                                    Index max_taps = 255);

/// Angular low-pass used by filtered incoherent compounding.
FirFilter design_angular_lpf(double pass_edge = 0.3, double stop_edge = 0.8, double stop_atten_db = 60.0);

/// Remez design of a fixed odd length; weights are 1/ripple per band.
Eigen::VectorXd remez_lowpass(Index n_taps, double pass_edge, double stop_edge, double pass_weight, double stop_weight);

/// Evaluates |H| on `points` equally spaced normalized frequencies over [0, 1].
Eigen::VectorXd magnitude_response(const Eigen::VectorXd& taps, Index points);

/**
 * @brief Zero-phase (forward-backward) filtering of a short sequence.
 *
 * The sequence is extended by mirror reflection including the edge sample,
 * repeated as often as needed, so any length >= 1 is accepted.
 */
template <typename Scalar>
VectorX<Scalar> filtfilt(const FirFilter& filter, const Eigen::Ref<const VectorX<Scalar>>& x);

/// Forward-backward kernel: h convolved with its reversal (equal to h * h for symmetric taps).
Eigen::VectorXd zero_phase_kernel(const Eigen::VectorXd& taps);

// ---------------------------------------------------------------------------

namespace detail {

inline Index mirror_index(Index j, Index n) {
  const Index period = 2 * n;
  Index m = j % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

}  // namespace detail

/// Centered convolution of a mirror-extended sequence with an odd-length symmetric kernel.
template <typename Scalar>
VectorX<Scalar> apply_centered_kernel(const Eigen::VectorXd& kernel, const Eigen::Ref<const VectorX<Scalar>>& x) {
  const Index half = (kernel.size() - 1) / 2;
  const Index n = x.size();
  VectorX<Scalar> y(n);
  for (Index i = 0; i < n; ++i) {
    Scalar acc(0);
    for (Index k = 0; k < kernel.size(); ++k) {
      acc += static_cast<Scalar>(kernel[k]) * x[detail::mirror_index(i + k - half, n)];
    }
    y[i] = acc;
  }
  return y;
}

template <typename Scalar>
VectorX<Scalar> filtfilt(const FirFilter& filter, const Eigen::Ref<const VectorX<Scalar>>& x) {
  return apply_centered_kernel<Scalar>(zero_phase_kernel(filter.taps), x);
}

}  // namespace nsi
