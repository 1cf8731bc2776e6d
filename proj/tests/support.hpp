#pragma once

#include <cmath>
#include <vector>

#include "nsi/compound.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace testing {

inline nsi::ArrayGeometry l14(nsi::Index n = 128) { return nsi::ArrayGeometry::linear(n, 0.3048e-3); }

/// Lateral grid symmetric about x = 0 at pitch / 2.
inline nsi::ImageGrid point_grid(double half_cols, double z_min, double z_max, double dz) {
  const double dx = 0.3048e-3 / 2;
  return nsi::ImageGrid::uniform(-half_cols * dx, half_cols * dx, dx, z_min, z_max, dz);
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

inline double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(max_abs(a), max_abs(b));
  return scale == 0.0 ? 0.0 : max_abs(a - b) / scale;
}

/// Runs fn with the given OpenMP thread count (no-op without OpenMP).
template <typename Fn>
auto with_threads(int n, Fn&& fn) {
#ifdef _OPENMP
  const int before = omp_get_max_threads();
  omp_set_num_threads(n);
  auto r = fn();
  omp_set_num_threads(before);
  return r;
#else
  (void)n;
  return fn();
#endif
}

}  // namespace testing
