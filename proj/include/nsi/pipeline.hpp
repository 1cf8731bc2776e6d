#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nsi/config.hpp"
#include "nsi/io.hpp"

namespace nsi {

/// Point-target measurements of one image.
struct PointMetrics {
  LateralProfile profile;
  GratingLobeReport gl;
  std::optional<double> fwhm;  // absent when the -6 dB level is not crossed
};

struct PipelineResult {
  Method method = Method::Cnsi;
  EnvelopeImage<double> envelope;
  BModeImage<double> bmode;
  NsiDiagnostics nsi_diagnostics;
  std::optional<PointMetrics> point;
  std::optional<PointMetrics> reference;  // Hann at the matching compounding mode
  std::optional<double> gl_reduction_db;
  std::optional<double> cnr;
  std::optional<double> speckle_snr;
};

struct SweepRow {
  double dc_offset = 0.0;
  Index n_angles = 0;
  double snr_db = 0.0;
  double gl_hann_coherent = 0.0;
  double gl_hann_incoherent = 0.0;
  double gl_cnsi = 0.0;
  double gl_icnsi = 0.0;
  double reduction_cnsi = 0.0;
  double reduction_icnsi = 0.0;
};

/// Simulates (or loads) channel data and applies the configured noise.
ChannelData<double> acquire(const ExperimentConfig& config);

/// The angles of a symmetric uniform subset: every k-th of the configured list, centered.
ChannelData<double> select_angles(const ChannelData<double>& data, Index n_angles);

/// Beamforms and compounds with the given method; diag is filled for NSI methods.
EnvelopeImage<double> form_image(const ChannelData<double>& data, const ExperimentConfig& config, Method method,
                                 NsiDiagnostics* diag = nullptr);

/// The Hann baseline a method is compared against.
Method reference_method(Method m);

/// Profile, grating-lobe level and FWHM around config.metrics.point_target.
PointMetrics point_metrics(const EnvelopeImage<double>& image, const ExperimentConfig& config);

/// Image formation and metrics on existing data; writes nothing.
PipelineResult process(const ChannelData<double>& data, const ExperimentConfig& config);

/**
 * @brief Validates, acquires, processes and writes image.csv, image.pgm,
 * metrics.csv and (with a point target) profile.csv into config.output_dir.
 *
 * Failures surface as StageError tagged config, simulate, beamform, metrics or export.
 */
PipelineResult run_pipeline(const ExperimentConfig& config);

/// dc_offset x n_angles x snr_db grid of C-NSI / IC-NSI grating-lobe reductions.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config);
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);
void write_metrics_csv(const std::filesystem::path& path, const PipelineResult& result);

}  // namespace nsi
