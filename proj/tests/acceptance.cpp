// One PASS/FAIL line per acceptance criterion; exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "nsi/pipeline.hpp"

using namespace nsi;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;
std::map<int, std::string> lines;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  lines[id] = std::string(pass ? "[PASS] " : "[FAIL] ") + (id < 10 ? " " : "") + std::to_string(id) + " " + name + ": " + detail;
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

// Tolerances
constexpr double kGlAngleDeg = 40.3, kGlAngleTol = 3.0, kGlRuntimeS = 30.0;
constexpr double kHannGlDb = -20.0, kHannGlTol = 6.0;
constexpr double kCnsiMinReductionDb = 30.0;
constexpr double kFwhmGap = 0.05;
constexpr double kSnrConvergeDb = 3.0;
constexpr double kSpeckleSnr = 1.91, kSpeckleTol = 0.15;
constexpr double kExactRel = 1e-9, kInvariantRuntimeS = 5.0;
constexpr double kLpfPass = 0.3, kLpfStop = 0.8, kLpfAttenDb = 60.0;
constexpr Index kLpfGrid = 4096;

ExperimentConfig point_config() {
  auto c = load_config(NSI_SOURCE_DIR "/configs/point_target.json");
  c.validate();
  return c;
}

ExperimentConfig single_angle(ExperimentConfig c) {
  c.acquisition.angles_deg = {0.0};
  c.sweep = {};
  return c;
}

PointMetrics measure(const ChannelData<double>& data, ExperimentConfig c, Method m, double dc = 1.0) {
  c.dc_offset = dc;
  return point_metrics(form_image(data, c, m), c);
}

/// Lateral position of the strongest profile sample inside a window.
double peak_in(const LateralProfile& p, const Window& w) {
  double best = -kInf, at = 0.0;
  for (Index j = 0; j < p.lateral_x.size(); ++j) {
    if (p.lateral_x[j] >= w.lo && p.lateral_x[j] <= w.hi && p.power_db[j] > best) {
      best = p.power_db[j];
      at = p.lateral_x[j];
    }
  }
  return at;
}

double rel_err(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
  const double scale = std::max(got.cwiseAbs().maxCoeff(), want.cwiseAbs().maxCoeff());
  return scale == 0.0 ? 0.0 : (got - want).cwiseAbs().maxCoeff() / scale;
}

// ---------------------------------------------------------------------------
// 1, 2, 3, 6: single 0 degree plane wave
// ---------------------------------------------------------------------------

void single_angle_criteria() {
  const auto t0 = Clock::now();
  const auto c = single_angle(point_config());
  const auto data = acquire(c);
  const auto hann = measure(data, c, Method::HannCoherent);
  const double runtime = seconds_since(t0);

  const auto& t = *c.metrics.point_target;
  const auto& g = hann.gl.gl_windows;
  const double left = rad2deg(std::atan((t.x - peak_in(hann.profile, g[0])) / t.z));
  const double right = rad2deg(std::atan((peak_in(hann.profile, g[1]) - t.x) / t.z));
  const bool geom = std::abs(left - kGlAngleDeg) <= kGlAngleTol && std::abs(right - kGlAngleDeg) <= kGlAngleTol;
  report(1, "grating-lobe geometry", geom && runtime <= kGlRuntimeS,
         fmt("left %.2f deg, right %.2f deg vs %.1f +/- %.1f; runtime %.2f s vs <= %.0f s", left, right, kGlAngleDeg,
             kGlAngleTol, runtime, kGlRuntimeS));

  const double gl = hann.gl.gl_level_db;
  report(2, "Hann grating-lobe level", std::abs(gl - kHannGlDb) <= kHannGlTol,
         fmt("%.2f dB vs %.0f +/- %.0f dB", gl, kHannGlDb, kHannGlTol));

  const auto c1 = measure(data, c, Method::Cnsi, 1.0);
  const auto c01 = measure(data, c, Method::Cnsi, 0.1);
  const double r1 = grating_lobe_reduction(gl, c1.gl.gl_level_db);
  const double r01 = grating_lobe_reduction(gl, c01.gl.gl_level_db);
  report(3, "C-NSI grating-lobe reduction", r1 >= kCnsiMinReductionDb && r01 > r1,
         fmt("c=1.0 %.2f dB vs >= %.0f dB; c=0.1 %.2f dB vs > c=1.0", r1, kCnsiMinReductionDb, r01));

  const bool have = hann.fwhm && c1.fwhm && c01.fwhm;
  const double fh = have ? *hann.fwhm : 0.0, f1 = have ? *c1.fwhm : 0.0, f01 = have ? *c01.fwhm : 0.0;
  const bool order = have && f01 <= (1.0 - kFwhmGap) * f1 && f1 <= (1.0 - kFwhmGap) * fh;
  report(6, "resolution ordering", order,
         fmt("FWHM c=0.1 %.4f mm < c=1.0 %.4f mm < Hann %.4f mm, gaps >= %.0f%%", f01 * 1e3, f1 * 1e3, fh * 1e3,
             kFwhmGap * 100));
}

// ---------------------------------------------------------------------------
// 4, 5: compounding and noise sweeps
// ---------------------------------------------------------------------------

const SweepRow& row(const std::vector<SweepRow>& rows, Index n, double snr) {
  for (const auto& r : rows) {
    if (r.n_angles == n && (r.snr_db == snr || (std::isinf(r.snr_db) && std::isinf(snr)))) return r;
  }
  throw std::logic_error("sweep row missing");
}

void compounding_criteria() {
  auto c = point_config();
  c.sweep.dc_offset = {1.0};
  c.sweep.n_angles = {1, 33};
  c.sweep.snr_db = {kInf, 0.0, 10.0, 20.0, 30.0, 40.0};
  const auto rows = run_sweep(c);

  const auto& one = row(rows, 1, kInf);
  const auto& all = row(rows, 33, kInf);
  const bool ic_ge_c = all.reduction_icnsi >= all.reduction_cnsi;
  const bool c_order = all.reduction_cnsi <= one.reduction_cnsi;
  const bool ic_order = all.reduction_icnsi <= one.reduction_icnsi;
  report(4, "compounding orderings", ic_ge_c && c_order && ic_order,
         fmt("33 angles IC-NSI %.2f >= C-NSI %.2f dB [%s]; C-NSI 33 %.2f <= 1 %.2f dB [%s]; IC-NSI 33 %.2f <= 1 %.2f dB [%s]",
             all.reduction_icnsi, all.reduction_cnsi, ic_ge_c ? "ok" : "violated", all.reduction_cnsi,
             one.reduction_cnsi, c_order ? "ok" : "violated", all.reduction_icnsi, one.reduction_icnsi,
             ic_order ? "ok" : "violated"));

  bool ok = true;
  std::string detail;
  for (const bool incoherent : {false, true}) {
    const auto pick = [&](const SweepRow& r) { return incoherent ? r.reduction_icnsi : r.reduction_cnsi; };
    detail += incoherent ? "; IC-NSI" : "C-NSI";
    double prev = -kInf;
    for (const double snr : {0.0, 10.0, 20.0, 30.0, 40.0}) {
      const double v = pick(row(rows, 33, snr));
      ok = ok && v > 0.0 && v >= prev;
      prev = v;
      detail += fmt(" %.2f", v);
    }
    const double clean = pick(all);
    ok = ok && std::abs(clean - prev) <= kSnrConvergeDb;
    detail += fmt(" (noise-free %.2f)", clean);
  }
  report(5, "SNR sweep", ok,
         detail + fmt(" dB at 0..40 dB SNR; need > 0, non-decreasing, within %.0f dB at 40 dB", kSnrConvergeDb));
}

// ---------------------------------------------------------------------------
// 7, 8: speckle and cyst phantom
// ---------------------------------------------------------------------------

void phantom_criteria() {
  auto c = load_config(NSI_SOURCE_DIR "/configs/cyst.json");
  c.validate();
  const auto data = acquire(c);
  const auto& m = c.metrics;
  const auto hann = form_image(data, c, Method::HannCoherent);
  const auto cn = form_image(data, c, Method::Cnsi);
  const auto ic = form_image(data, c, Method::Icnsi);

  const double s_h = speckle_snr(hann, *m.speckle), s_c = speckle_snr(cn, *m.speckle), s_i = speckle_snr(ic, *m.speckle);
  report(7, "speckle statistics", std::abs(s_h - kSpeckleSnr) <= kSpeckleTol && s_c < s_i && s_i < s_h,
         fmt("Hann %.3f vs %.2f +/- %.2f; C-NSI %.3f < IC-NSI %.3f < Hann %.3f", s_h, kSpeckleSnr, kSpeckleTol, s_c, s_i,
             s_h));

  const double k_c = cnr(cn, *m.cnr_target, *m.cnr_background), k_i = cnr(ic, *m.cnr_target, *m.cnr_background);
  report(8, "contrast ordering", k_i > k_c, fmt("CNR IC-NSI %.3f > C-NSI %.3f", k_i, k_c));
}

// ---------------------------------------------------------------------------
// 9: algebraic invariants
// ---------------------------------------------------------------------------

void invariant_criteria() {
  const auto t0 = Clock::now();
  ExperimentConfig c;
  c.n_elements = 32;
  c.acquisition.angles_deg = {-6.0, 0.0, 6.0};
  c.acquisition.record_length = 1024;
  c.scatterers = {{0.0, 4e-3, 1.0}, {1.5e-3, 5e-3, 0.7}};
  c.grid = {-2.4384e-3, 2.4384e-3, 0.0, 3e-3, 6e-3, 0.0};
  c.snr_db = 10.0;
  c.dc_offset = 0.7;
  const auto data = acquire(c);
  const auto grid = c.image_grid();
  const double fnum = c.acquisition.f_number;
  double worst = 0.0;
  auto track = [&](double e) { worst = std::max(worst, e); };

  const ApodizationKind kinds[] = {ApodizationKind::uniform(), ApodizationKind::zero_mean(),
                                   ApodizationKind::dc_offset(c.dc_offset), ApodizationKind::dc_offset_flipped(c.dc_offset)};
  const auto imgs = das_beamform_multi(data, grid, kinds, fnum);
  for (const auto& a : imgs) {
    track(rel_err(a[2].values + a[3].values, 2.0 * c.dc_offset * a[0].values));
    track(rel_err(a[2].values - a[3].values, 2.0 * a[1].values));
  }

  auto mix = data;
  AcquisitionConfig acq2 = data.acquisition;
  const auto other = synthesize_channel_data<double>({{-1e-3, 4.5e-3, 1.0}}, data.geometry, data.pulse, acq2);
  for (std::size_t a = 0; a < mix.samples.size(); ++a) mix.samples[a] = 2.5 * data.samples[a] - 0.75 * other.samples[a];
  const auto lin = das_beamform(mix, grid, ApodizationKind::hann(), fnum);
  const auto d1 = das_beamform(data, grid, ApodizationKind::hann(), fnum);
  const auto d2 = das_beamform(other, grid, ApodizationKind::hann(), fnum);
  for (std::size_t a = 0; a < lin.size(); ++a) track(rel_err(lin[a].values, 2.5 * d1[a].values - 0.75 * d2[a].values));

  auto neg = d1[1];
  neg.values = -neg.values;
  track(rel_err(envelope(neg).values, envelope(d1[1]).values));

  bool peak_zero = true;
  auto scaled = data;
  for (auto& s : scaled.samples) s *= 3.7;
  for (const auto m : {Method::HannCoherent, Method::HannIncoherent, Method::Cnsi, Method::Icnsi, Method::Gcf}) {
    const auto b = to_db(form_image(data, c, m));
    const auto bs = to_db(form_image(scaled, c, m));
    peak_zero = peak_zero && b.values_db.maxCoeff() == 0.0 && bs.values_db.maxCoeff() == 0.0;
    track((b.values_db - bs.values_db).cwiseAbs().maxCoeff() / 120.0);
  }
  const double runtime = seconds_since(t0);
  report(9, "algebraic invariants", worst <= kExactRel && peak_zero && runtime <= kInvariantRuntimeS,
         fmt("worst relative error %.2e vs <= %.0e; B-mode peak 0 dB %s; runtime %.2f s vs <= %.0f s", worst, kExactRel,
             peak_zero ? "yes" : "no", runtime, kInvariantRuntimeS));
}

// ---------------------------------------------------------------------------
// 10: brute-force beamformer oracle
// ---------------------------------------------------------------------------

double oracle_pixel(const ChannelData<double>& d, std::size_t a, double x, double z, const std::vector<double>& w_short) {
  const double c = d.pulse.sound_speed, fs = d.acquisition.sampling_frequency, p = d.geometry.pitch;
  const Index n = d.geometry.n_elements;
  const double x0 = -0.5 * static_cast<double>(n - 1) * p;
  // aperture z / F# in elements, even, at least 2, at most the largest even count
  Index len = static_cast<Index>(std::floor(z / d.acquisition.f_number / p + 1e-9));
  len -= len % 2;
  len = std::clamp<Index>(len, 2, n - n % 2);
  if (len != static_cast<Index>(w_short.size())) throw std::logic_error("oracle: unexpected aperture");
  Index center = static_cast<Index>(std::lround((x - x0) / p));
  center = std::clamp<Index>(center, -len / 2 + 1, n + len / 2 - 1);
  const double th = d.acquisition.angles_deg[a] * std::acos(-1.0) / 180.0;
  const double t_tx = (z * std::cos(th) + x * std::sin(th)) / c - d.time_zero[a];
  double sum = 0.0;
  for (Index k = 0; k < len; ++k) {
    const Index e = center - len / 2 + k;
    if (e < 0 || e >= n) continue;
    const double xe = x0 + static_cast<double>(e) * p;
    const double pos = (t_tx + std::sqrt(z * z + (x - xe) * (x - xe)) / c) * fs;
    const auto& tr = d.samples[a];
    const Index ns = tr.rows();
    double v = 0.0;
    if (pos >= 0.0 && pos <= static_cast<double>(ns - 1)) {
      const auto i = static_cast<Index>(std::floor(pos));
      v = i == ns - 1 ? tr(i, e) : tr(i, e) + (pos - static_cast<double>(i)) * (tr(i + 1, e) - tr(i, e));
    }
    sum += w_short[static_cast<std::size_t>(k)] * v;
  }
  return sum;
}

void oracle_criterion() {
  PulseModel pulse;
  AcquisitionConfig acq;
  acq.angles_deg = {-10.0, 0.0, 10.0};
  acq.record_length = 16;
  auto d = ChannelData<double>::zeros(ArrayGeometry::linear(3, 0.3048e-3), pulse, acq);
  const Scatterer s{0.1e-3, 1.0e-3, 1.0};
  const double c = pulse.sound_speed, fs = acq.sampling_frequency;
  const double w0 = 2.0 * std::acos(-1.0) * pulse.center_frequency;
  const double sigma = 0.4 / pulse.center_frequency;
  for (std::size_t a = 0; a < acq.angles_deg.size(); ++a) {
    const double th = acq.angles_deg[a] * std::acos(-1.0) / 180.0;
    const double tx = (s.z * std::cos(th) + s.x * std::sin(th)) / c;
    d.time_zero[a] = tx + s.z / c - 8.0 / fs;
    for (Index e = 0; e < 3; ++e) {
      const double r = std::hypot(s.z, s.x - d.geometry.element_x[e]);
      for (Index k = 0; k < 16; ++k) {
        const double t = d.time_zero[a] + static_cast<double>(k) / fs - tx - r / c;
        d.samples[a](k, e) = std::exp(-0.5 * t * t / (sigma * sigma)) * std::cos(w0 * t) / r;
      }
    }
  }
  const auto grid = ImageGrid::uniform(-0.2e-3, 0.2e-3, 0.1e-3, 0.96e-3, 1.04e-3, 0.02e-3);
  const double dc = 0.5;
  struct Case {
    ApodizationKind kind;
    std::vector<double> w;
  };
  const std::vector<Case> cases = {{ApodizationKind::uniform(), {1.0, 1.0}},
                                   {ApodizationKind::zero_mean(), {1.0, -1.0}},
                                   {ApodizationKind::dc_offset(dc), {1.0 + dc, -1.0 + dc}},
                                   {ApodizationKind::dc_offset_flipped(dc), {-1.0 + dc, 1.0 + dc}}};
  double worst = 0.0, peak = 0.0;
  for (const auto& cs : cases) {
    const auto imgs = das_beamform(d, grid, cs.kind, acq.f_number);
    for (std::size_t a = 0; a < imgs.size(); ++a) {
      Eigen::MatrixXd want(grid.rows(), grid.cols());
      for (Index i = 0; i < grid.rows(); ++i) {
        for (Index j = 0; j < grid.cols(); ++j) want(i, j) = oracle_pixel(d, a, grid.lateral_x[j], grid.axial_z[i], cs.w);
      }
      worst = std::max(worst, rel_err(imgs[a].values, want));
      peak = std::max(peak, want.cwiseAbs().maxCoeff());
    }
  }
  report(10, "oracle equivalence", worst <= kExactRel && peak > 0.0 && grid.rows() == 5 && grid.cols() == 5,
         fmt("worst relative error %.2e vs <= %.0e on a %ldx%ld grid, 3 elements, 16 samples", worst, kExactRel,
             static_cast<long>(grid.rows()), static_cast<long>(grid.cols())));
}

// ---------------------------------------------------------------------------
// 11, 12: filter and coherence factor
// ---------------------------------------------------------------------------

void lpf_criterion() {
  const auto f = design_angular_lpf(kLpfPass, kLpfStop, kLpfAttenDb);
  const Eigen::VectorXd h = magnitude_response(f.taps, kLpfGrid);
  double stop = 0.0, pass = 0.0;
  for (Index i = 0; i < kLpfGrid; ++i) {
    const double nu = static_cast<double>(i) / static_cast<double>(kLpfGrid - 1);
    if (nu >= kLpfStop) stop = std::max(stop, h[i]);
    if (nu <= kLpfPass) pass = std::max(pass, std::abs(h[i] - 1.0));
  }
  const double atten = -20.0 * std::log10(stop);
  const double pass_limit = std::pow(10.0, -kLpfAttenDb / 20.0);
  report(11, "LPF response", atten >= kLpfAttenDb && pass <= pass_limit,
         fmt("%ld taps; stopband >= %.1f edge %.2f dB vs >= %.0f dB; passband <= %.1f deviation %.2e vs <= %.0e",
             static_cast<long>(f.size()), kLpfStop, atten, kLpfAttenDb, kLpfPass, pass, pass_limit));
}

void gcf_criterion() {
  const Eigen::VectorXd flat = Eigen::VectorXd::Constant(10, 0.37);
  Eigen::VectorXd impulse = Eigen::VectorXd::Zero(10);
  impulse[3] = 1.0;
  const double a = gcf_weight(flat, 2), b = gcf_weight(impulse, 2);
  report(12, "GCF sanity", std::abs(a - 1.0) <= 1e-12 && std::abs(b - 0.5) <= 1e-12,
         fmt("constant %.15f vs 1; impulse %.15f vs 0.5 (m0 = 2, N = 10)", a, b));
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void()>>> groups = {
      {"single angle", single_angle_criteria}, {"compounding", compounding_criteria},
      {"phantom", phantom_criteria},           {"invariants", invariant_criteria},
      {"oracle", oracle_criterion},            {"lpf", lpf_criterion},
      {"gcf", gcf_criterion}};
  for (const auto& [name, run] : groups) {
    try {
      run();
    } catch (const std::exception& e) {
      std::printf("[FAIL] %s group aborted: %s\n", name, e.what());
      ++failures;
    }
  }
  for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
  std::printf("%d criterion failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
