#include "nsi/fir.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "nsi/errors.hpp"

namespace nsi {

namespace {

constexpr double kPi = std::numbers::pi;

struct Band {
  double lo, hi;  // radians
  double desired;
  double weight;
};

struct DenseGrid {
  std::vector<double> omega;
  std::vector<double> desired;
  std::vector<double> weight;
  std::vector<int> band;
};

DenseGrid make_grid(const std::vector<Band>& bands, Index n_basis) {
  DenseGrid g;
  const double step = kPi / (20.0 * static_cast<double>(n_basis));
  for (std::size_t b = 0; b < bands.size(); ++b) {
    const auto count = std::max<Index>(2, static_cast<Index>(std::ceil((bands[b].hi - bands[b].lo) / step)) + 1);
    for (Index i = 0; i < count; ++i) {
      const double w = bands[b].lo + (bands[b].hi - bands[b].lo) * static_cast<double>(i) / static_cast<double>(count - 1);
      g.omega.push_back(w);
      g.desired.push_back(bands[b].desired);
      g.weight.push_back(bands[b].weight);
      g.band.push_back(static_cast<int>(b));
    }
  }
  return g;
}

/// Barycentric weights of the nodes x, with the usual factor-2 scaling against under/overflow.
std::vector<double> barycentric_weights(const std::vector<double>& x) {
  std::vector<double> w(x.size(), 1.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    double prod = 1.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (j != i) prod *= 2.0 * (x[i] - x[j]);
    }
    w[i] = 1.0 / prod;
  }
  return w;
}

class Interpolant {
 public:
  Interpolant(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)), w_(barycentric_weights(x_)) {}

  [[nodiscard]] double operator()(double xv) const {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
      const double d = xv - x_[i];
      if (d == 0.0) return y_[i];
      const double t = w_[i] / d;
      num += t * y_[i];
      den += t;
    }
    return num / den;
  }

 private:
  std::vector<double> x_, y_, w_;
};

/// Local extrema of the error, one per alternation run, trimmed to `wanted`.
std::vector<std::size_t> find_extremals(const std::vector<double>& err, const DenseGrid& g, std::size_t wanted) {
  std::vector<std::size_t> cand;
  const std::size_t n = err.size();
  for (std::size_t i = 0; i < n; ++i) {
    const bool has_left = i > 0 && g.band[i - 1] == g.band[i];
    const bool has_right = i + 1 < n && g.band[i + 1] == g.band[i];
    const double e = err[i];
    if (e == 0.0) continue;
    const bool ge_left = !has_left || (e > 0 ? e >= err[i - 1] : e <= err[i - 1]);
    const bool ge_right = !has_right || (e > 0 ? e >= err[i + 1] : e <= err[i + 1]);
    if (ge_left && ge_right) cand.push_back(i);
  }
  // collapse consecutive same-sign candidates, keeping the larger magnitude
  std::vector<std::size_t> alt;
  for (const auto i : cand) {
    if (!alt.empty() && std::signbit(err[alt.back()]) == std::signbit(err[i])) {
      if (std::abs(err[i]) > std::abs(err[alt.back()])) alt.back() = i;
    } else {
      alt.push_back(i);
    }
  }
  while (alt.size() > wanted) {
    if (std::abs(err[alt.front()]) < std::abs(err[alt.back()])) {
      alt.erase(alt.begin());
    } else {
      alt.pop_back();
    }
  }
  return alt;
}

}  // namespace

Eigen::VectorXd remez_lowpass(Index n_taps, double pass_edge, double stop_edge, double pass_weight, double stop_weight) {
  if (n_taps < 3 || n_taps % 2 == 0) throw std::invalid_argument("remez_lowpass: n_taps must be odd and >= 3");
  if (!(0.0 < pass_edge && pass_edge < stop_edge && stop_edge < 1.0)) {
    throw std::invalid_argument("remez_lowpass: need 0 < pass_edge < stop_edge < 1");
  }
  const Index half = (n_taps - 1) / 2;  // A(w) = sum_{k=0..half} a_k cos(k w)
  const Index n_basis = half + 1;
  const auto n_ext = static_cast<std::size_t>(n_basis + 1);

  const std::vector<Band> bands{{0.0, pass_edge * kPi, 1.0, pass_weight}, {stop_edge * kPi, kPi, 0.0, stop_weight}};
  const DenseGrid g = make_grid(bands, n_basis);
  const std::size_t n_grid = g.omega.size();
  if (n_grid < n_ext) throw DesignError("remez_lowpass: grid too coarse");

  std::vector<std::size_t> ext(n_ext);
  for (std::size_t i = 0; i < n_ext; ++i) ext[i] = i * (n_grid - 1) / (n_ext - 1);

  std::vector<double> err(n_grid);
  std::vector<double> x_nodes;
  std::vector<double> c_nodes;
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<double> x(n_ext);
    for (std::size_t i = 0; i < n_ext; ++i) x[i] = std::cos(g.omega[ext[i]]);
    const auto b = barycentric_weights(x);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n_ext; ++i) {
      const double sign = (i % 2 == 0) ? 1.0 : -1.0;
      num += b[i] * g.desired[ext[i]];
      den += sign * b[i] / g.weight[ext[i]];
    }
    const double delta = num / den;

    x_nodes.assign(x.begin(), x.end() - 1);
    c_nodes.resize(n_ext - 1);
    for (std::size_t i = 0; i + 1 < n_ext; ++i) {
      const double sign = (i % 2 == 0) ? 1.0 : -1.0;
      c_nodes[i] = g.desired[ext[i]] - sign * delta / g.weight[ext[i]];
    }
    const Interpolant amp(x_nodes, c_nodes);
    double max_err = 0.0;
    for (std::size_t i = 0; i < n_grid; ++i) {
      err[i] = g.weight[i] * (g.desired[i] - amp(std::cos(g.omega[i])));
      max_err = std::max(max_err, std::abs(err[i]));
    }

    auto next = find_extremals(err, g, n_ext);
    if (next.size() < n_ext) break;  // degenerate: keep the current set
    const bool converged = next == ext || (max_err - std::abs(delta)) <= 1e-10 * std::abs(delta);
    ext = std::move(next);
    if (converged) break;
  }

  // Recover taps by sampling A at the DFT frequencies of length n_taps.
  const Interpolant amp(x_nodes, c_nodes);
  const auto L = static_cast<double>(n_taps);
  std::vector<double> a_samples(static_cast<std::size_t>(n_basis));
  for (Index m = 0; m < n_basis; ++m) {
    a_samples[static_cast<std::size_t>(m)] = amp(std::cos(2.0 * kPi * static_cast<double>(m) / L));
  }
  Eigen::VectorXd h(n_taps);
  for (Index k = 0; k <= half; ++k) {
    double acc = a_samples[0];
    for (Index m = 1; m < n_basis; ++m) {
      acc += 2.0 * a_samples[static_cast<std::size_t>(m)] * std::cos(2.0 * kPi * static_cast<double>(m * k) / L);
    }
    h[half + k] = acc / L;
    h[half - k] = acc / L;
  }
  return h;
}

Eigen::VectorXd magnitude_response(const Eigen::VectorXd& taps, Index points) {
  Eigen::VectorXd mag(points);
  for (Index p = 0; p < points; ++p) {
    const double w = kPi * static_cast<double>(p) / static_cast<double>(points - 1);
    double re = 0.0;
    double im = 0.0;
    for (Index n = 0; n < taps.size(); ++n) {
      re += taps[n] * std::cos(w * static_cast<double>(n));
      im -= taps[n] * std::sin(w * static_cast<double>(n));
    }
    mag[p] = std::hypot(re, im);
  }
  return mag;
}

double FirFilter::magnitude(double f) const {
  const double w = kPi * f;
  double re = 0.0;
  double im = 0.0;
  for (Index n = 0; n < taps.size(); ++n) {
    re += taps[n] * std::cos(w * static_cast<double>(n));
    im -= taps[n] * std::sin(w * static_cast<double>(n));
  }
  return std::hypot(re, im);
}

FirFilter design_equiripple_lowpass(double pass_edge, double stop_edge, double pass_ripple, double stop_ripple,
                                    Index max_taps) {
  if (!(0.0 < pass_edge && pass_edge < stop_edge && stop_edge < 1.0)) {
    throw std::invalid_argument("design_equiripple_lowpass: need 0 < pass_edge < stop_edge < 1");
  }
  if (!(pass_ripple > 0.0 && stop_ripple > 0.0)) {
    throw std::invalid_argument("design_equiripple_lowpass: ripples must be > 0");
  }
  constexpr Index kPoints = 4096;
  for (Index n = 3; n <= max_taps; n += 2) {
    const Eigen::VectorXd h = remez_lowpass(n, pass_edge, stop_edge, 1.0 / pass_ripple, 1.0 / stop_ripple);
    const Eigen::VectorXd mag = magnitude_response(h, kPoints);
    double pass_dev = 0.0;
    double stop_max = 0.0;
    for (Index p = 0; p < kPoints; ++p) {
      const double f = static_cast<double>(p) / static_cast<double>(kPoints - 1);
      if (f <= pass_edge) pass_dev = std::max(pass_dev, std::abs(mag[p] - 1.0));
      if (f >= stop_edge) stop_max = std::max(stop_max, mag[p]);
    }
    if (pass_dev <= pass_ripple && stop_max <= stop_ripple) {
      FirFilter f;
      f.taps = h;
      f.pass_edge = pass_edge;
      f.stop_edge = stop_edge;
      f.stop_atten_db = -20.0 * std::log10(stop_max);
      f.passband_ripple = pass_dev;
      return f;
    }
  }
  throw DesignError("design_equiripple_lowpass: no filter up to " + std::to_string(max_taps) + " taps meets the ripple limits");
}

FirFilter design_angular_lpf(double pass_edge, double stop_edge, double stop_atten_db) {
  if (!(stop_atten_db > 0.0)) throw std::invalid_argument("design_angular_lpf: attenuation must be > 0 dB");
  const double ripple = std::pow(10.0, -stop_atten_db / 20.0);
  return design_equiripple_lowpass(pass_edge, stop_edge, ripple, ripple);
}

Eigen::VectorXd zero_phase_kernel(const Eigen::VectorXd& taps) {
  const Index n = taps.size();
  Eigen::VectorXd k = Eigen::VectorXd::Zero(2 * n - 1);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) k[i + j] += taps[i] * taps[n - 1 - j];
  }
  return k;
}

}  // namespace nsi
