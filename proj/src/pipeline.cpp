#include "nsi/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace nsi {

namespace {

template <typename Fn>
auto staged(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

std::vector<RfImage<double>> hann_images(const ChannelData<double>& data, const ExperimentConfig& config,
                                         const ImageGrid& grid) {
  return das_beamform(data, grid, ApodizationKind::hann(), config.acquisition.f_number);
}

FirFilter make_lpf(const ExperimentConfig& config) {
  return design_equiripple_lowpass(config.lpf.pass_edge, config.lpf.stop_edge,
                                   std::pow(10.0, -config.lpf.stop_atten_db / 20.0),
                                   std::pow(10.0, -config.lpf.stop_atten_db / 20.0));
}

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

}  // namespace

ChannelData<double> acquire(const ExperimentConfig& config) {
  ChannelData<double> clean;
  if (config.rf_input) {
    clean = read_rf(*config.rf_input);
    if (clean.n_elements() != config.n_elements || clean.geometry.pitch != config.pitch) {
      throw std::invalid_argument("RF file geometry does not match the config");
    }
  } else {
    std::vector<Scatterer> scatterers = config.scatterers;
    if (config.phantom) {
      scatterers = make_speckle_phantom(config.phantom->region, config.phantom->density, config.phantom->inclusions,
                                        config.acquisition.seed);
    }
    clean = synthesize_channel_data<double>(scatterers, config.geometry(), config.pulse, config.acquisition);
  }
  // noise stream is offset from the phantom stream so the two stay independent
  return add_noise(clean, config.snr_db, config.acquisition.seed + 0x9E3779B97F4A7C15ULL);
}

ChannelData<double> select_angles(const ChannelData<double>& data, Index n_angles) {
  const Index total = data.n_angles();
  if (n_angles < 1 || n_angles > total) throw std::invalid_argument("select_angles: n_angles outside 1..configured count");
  Index first = 0;
  Index stride = 1;
  if (n_angles == 1) {
    if (total % 2 == 0) throw std::invalid_argument("select_angles: no center angle in an even-sized list");
    first = total / 2;
  } else {
    if ((total - 1) % (n_angles - 1) != 0) {
      throw std::invalid_argument("select_angles: " + std::to_string(n_angles) + " is not a uniform subset of " +
                                  std::to_string(total));
    }
    stride = (total - 1) / (n_angles - 1);
  }
  ChannelData<double> out{data.geometry, data.pulse, data.acquisition, {}, {}};
  out.acquisition.angles_deg.clear();
  for (Index k = 0; k < n_angles; ++k) {
    const auto a = static_cast<std::size_t>(first + k * stride);
    out.acquisition.angles_deg.push_back(data.acquisition.angles_deg[a]);
    out.samples.push_back(data.samples[a]);
    out.time_zero.push_back(data.time_zero[a]);
  }
  return out;
}

Method reference_method(Method m) {
  return (m == Method::Icnsi || m == Method::HannIncoherent) ? Method::HannIncoherent : Method::HannCoherent;
}

EnvelopeImage<double> form_image(const ChannelData<double>& data, const ExperimentConfig& config, Method method,
                                 NsiDiagnostics* diag) {
  const ImageGrid grid = config.image_grid();
  const double fnum = config.acquisition.f_number;
  switch (method) {
    case Method::HannCoherent: return hann_compound_envelope(hann_images(data, config, grid), CompoundMode::Coherent);
    case Method::HannIncoherent: return hann_compound_envelope(hann_images(data, config, grid), CompoundMode::Incoherent);
    case Method::Cnsi: return cnsi_envelope(beamform_nsi(data, grid, config.dc_offset, fnum), diag);
    case Method::Icnsi: return icnsi_envelope(beamform_nsi(data, grid, config.dc_offset, fnum), make_lpf(config), diag);
    case Method::Gcf: return gcf_envelope(data, grid, fnum, GcfConfig{config.gcf_m0});
  }
  throw std::logic_error("unreachable method");
}

PointMetrics point_metrics(const EnvelopeImage<double>& image, const ExperimentConfig& config) {
  if (!config.metrics.point_target) throw std::invalid_argument("point_metrics: no point target configured");
  const auto& t = *config.metrics.point_target;
  const auto [z0, z1] = config.profile_range();
  PointMetrics m;
  m.profile = lateral_integrated_power_profile(image, z0, z1);
  const auto w = default_lobe_windows(t.x, t.z, config.pulse.wavelength(), config.pitch, config.acquisition.f_number);
  m.gl = grating_lobe_level(m.profile, w.main, w.grating);
  try {
    m.fwhm = fwhm_lateral(m.profile);
  } catch (const ExtentError&) {
    m.fwhm.reset();
  }
  return m;
}

PipelineResult process(const ChannelData<double>& data, const ExperimentConfig& config) {
  PipelineResult r;
  r.method = config.method;
  r.envelope = staged("beamform", [&] { return form_image(data, config, config.method, &r.nsi_diagnostics); });
  r.bmode = staged("beamform", [&] { return to_db(r.envelope); });
  staged("metrics", [&] {
    if (config.metrics.point_target) {
      r.point = point_metrics(r.envelope, config);
      const Method ref = reference_method(config.method);
      if (ref == config.method) {
        r.reference = r.point;
      } else {
        r.reference = point_metrics(form_image(data, config, ref), config);
      }
      r.gl_reduction_db = grating_lobe_reduction(r.reference->gl.gl_level_db, r.point->gl.gl_level_db);
    }
    if (config.metrics.cnr_target) r.cnr = cnr(r.envelope, *config.metrics.cnr_target, *config.metrics.cnr_background);
    if (config.metrics.speckle) r.speckle_snr = speckle_snr(r.envelope, *config.metrics.speckle);
    return 0;
  });
  return r;
}

void write_metrics_csv(const std::filesystem::path& path, const PipelineResult& r) {
  auto out = open_output(path);
  out << "metric,value\n";
  out << "method," << method_name(r.method) << '\n';
  if (r.method == Method::Cnsi || r.method == Method::Icnsi) {
    out << "nsi_raw_min," << format_double(r.nsi_diagnostics.raw_min) << '\n';
    out << "nsi_clamped_pixels," << r.nsi_diagnostics.clamped << '\n';
  }
  if (r.point) {
    out << "gl_left_db," << format_double(r.point->gl.gl_left_db) << '\n';
    out << "gl_right_db," << format_double(r.point->gl.gl_right_db) << '\n';
    out << "gl_level_db," << format_double(r.point->gl.gl_level_db) << '\n';
    out << "gl_reference_db," << format_double(r.reference->gl.gl_level_db) << '\n';
    out << "gl_reduction_db," << format_double(*r.gl_reduction_db) << '\n';
    if (r.point->fwhm) out << "fwhm_m," << format_double(*r.point->fwhm) << '\n';
  }
  if (r.cnr) out << "cnr," << format_double(*r.cnr) << '\n';
  if (r.speckle_snr) out << "speckle_snr," << format_double(*r.speckle_snr) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

PipelineResult run_pipeline(const ExperimentConfig& config) {
  staged("config", [&] {
    config.validate();
    return 0;
  });
  const auto data = staged("simulate", [&] { return acquire(config); });
  auto result = process(data, config);
  staged("export", [&] {
    const auto& dir = config.output_dir;
    export_image(result.bmode, dir / "image.csv", ImageFormat::Csv);
    export_image(result.bmode, dir / "image.pgm", ImageFormat::Pgm, config.dynamic_range_db);
    write_metrics_csv(dir / "metrics.csv", result);
    if (result.point) {
      write_profiles_csv(dir / "profile.csv", {method_name(result.method), method_name(reference_method(result.method))},
                         {result.point->profile, result.reference->profile});
    }
    return 0;
  });
  return result;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config) {
  staged("config", [&] {
    config.validate();
    if (!config.metrics.point_target) throw std::invalid_argument("sweep needs metrics.point_target");
    return 0;
  });
  const auto& axes = config.sweep;
  const std::vector<double> dcs = axes.dc_offset.empty() ? std::vector<double>{config.dc_offset} : axes.dc_offset;
  const std::vector<Index> counts =
      axes.n_angles.empty() ? std::vector<Index>{static_cast<Index>(config.acquisition.angles_deg.size())} : axes.n_angles;
  const std::vector<double> snrs = axes.snr_db.empty() ? std::vector<double>{config.snr_db} : axes.snr_db;

  ExperimentConfig clean_cfg = config;
  clean_cfg.snr_db = std::numeric_limits<double>::infinity();
  const auto clean = staged("simulate", [&] { return acquire(clean_cfg); });
  const FirFilter lpf = staged("beamform", [&] { return make_lpf(config); });
  const ImageGrid grid = config.image_grid();
  const double fnum = config.acquisition.f_number;

  std::vector<SweepRow> rows;
  for (const double snr : snrs) {
    const auto noisy = staged("simulate", [&] {
      return add_noise(clean, snr, config.acquisition.seed + 0x9E3779B97F4A7C15ULL);
    });
    for (const Index n : counts) {
      const auto data = staged("simulate", [&] { return select_angles(noisy, n); });
      const auto hann = staged("beamform", [&] { return hann_images(data, config, grid); });
      const double gl_hc = staged("metrics", [&] {
        return point_metrics(hann_compound_envelope(hann, CompoundMode::Coherent), config).gl.gl_level_db;
      });
      const double gl_hi = staged("metrics", [&] {
        return point_metrics(hann_compound_envelope(hann, CompoundMode::Incoherent), config).gl.gl_level_db;
      });
      for (const double c : dcs) {
        const auto triplets = staged("beamform", [&] { return beamform_nsi(data, grid, c, fnum); });
        SweepRow row;
        row.dc_offset = c;
        row.n_angles = n;
        row.snr_db = snr;
        row.gl_hann_coherent = gl_hc;
        row.gl_hann_incoherent = gl_hi;
        row.gl_cnsi = staged("metrics", [&] { return point_metrics(cnsi_envelope(triplets), config).gl.gl_level_db; });
        row.gl_icnsi = staged("metrics", [&] { return point_metrics(icnsi_envelope(triplets, lpf), config).gl.gl_level_db; });
        row.reduction_cnsi = grating_lobe_reduction(gl_hc, row.gl_cnsi);
        row.reduction_icnsi = grating_lobe_reduction(gl_hi, row.gl_icnsi);
        rows.push_back(row);
      }
    }
  }
  return rows;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  auto out = open_output(path);
  out << "dc_offset,n_angles,snr_db,gl_hann_coherent_db,gl_hann_incoherent_db,gl_cnsi_db,gl_icnsi_db,"
         "reduction_cnsi_db,reduction_icnsi_db\n";
  for (const auto& r : rows) {
    out << format_double(r.dc_offset) << ',' << r.n_angles << ',' << format_double(r.snr_db) << ','
        << format_double(r.gl_hann_coherent) << ',' << format_double(r.gl_hann_incoherent) << ','
        << format_double(r.gl_cnsi) << ',' << format_double(r.gl_icnsi) << ',' << format_double(r.reduction_cnsi)
        << ',' << format_double(r.reduction_icnsi) << '\n';
  }
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace nsi
