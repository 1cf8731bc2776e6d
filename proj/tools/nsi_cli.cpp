// Command-line front end: simulate, beamform, image, metrics, sweep.
#include <cmath>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "nsi/pipeline.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> method;
  std::optional<double> dc_offset;
  std::optional<std::string> angles;
  std::optional<std::string> snr_db;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

/// "lo:hi:count" or a comma-separated list of degrees.
std::vector<double> parse_angles(const std::string& text) {
  if (text.find(':') != std::string::npos) {
    std::istringstream s(text);
    std::string lo, hi, n;
    std::getline(s, lo, ':');
    std::getline(s, hi, ':');
    std::getline(s, n, ':');
    return nsi::angle_range(std::stod(lo), std::stod(hi), std::stol(n));
  }
  std::vector<double> out;
  std::istringstream s(text);
  for (std::string tok; std::getline(s, tok, ',');) out.push_back(std::stod(tok));
  return out;
}

// Sweep axes only matter to the sweep subcommand; there a scalar override pins its axis.
nsi::ExperimentConfig load(const Overrides& o, bool sweep) {
  auto cfg = nsi::load_config(o.config);
  try {
    if (o.method) cfg.method = nsi::parse_method(*o.method);
    if (o.dc_offset) cfg.dc_offset = *o.dc_offset;
    if (o.angles) cfg.acquisition.angles_deg = parse_angles(*o.angles);
    if (o.snr_db) cfg.snr_db = (*o.snr_db == "inf") ? std::numeric_limits<double>::infinity() : std::stod(*o.snr_db);
    if (o.seed) cfg.acquisition.seed = *o.seed;
    if (o.out) cfg.output_dir = *o.out;
    if (!sweep) {
      cfg.sweep = {};
    } else {
      if (o.dc_offset) cfg.sweep.dc_offset = {cfg.dc_offset};
      if (o.snr_db) cfg.sweep.snr_db = {cfg.snr_db};
    }
  } catch (const std::logic_error& e) {
    throw std::invalid_argument(std::string("bad override: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nsi::ExperimentConfig load_staged(const Overrides& o, bool sweep = false) {
  try {
    return load(o, sweep);
  } catch (const std::exception& e) {
    throw nsi::StageError("config", e.what());
  }
}

void write_rf_image_csv(const std::filesystem::path& path, const nsi::ImageGrid& g, const nsi::MatrixX<double>& v) {
  auto out = nsi::open_output(path);
  out << std::setprecision(17) << "z\\x";
  for (nsi::Index j = 0; j < g.cols(); ++j) out << ',' << g.lateral_x[j];
  out << '\n';
  for (nsi::Index i = 0; i < g.rows(); ++i) {
    out << g.axial_z[i];
    for (nsi::Index j = 0; j < g.cols(); ++j) out << ',' << v(i, j);
    out << '\n';
  }
}

int cmd_simulate(const Overrides& o) {
  const auto cfg = load_staged(o);
  const auto data = [&] {
    try {
      return nsi::acquire(cfg);
    } catch (const std::exception& e) {
      throw nsi::StageError("simulate", e.what());
    }
  }();
  const auto path = cfg.output_dir / "rf.nsrf";
  try {
    nsi::write_rf(path, data);
  } catch (const std::exception& e) {
    throw nsi::StageError("export", e.what());
  }
  std::cout << "wrote " << path.string() << " (" << data.n_angles() << " angles x " << data.n_elements()
            << " elements x " << data.n_samples() << " samples)\n";
  return 0;
}

/// Writes the angle-summed beamformed RF of every apodization the method needs.
int cmd_beamform(const Overrides& o) {
  const auto cfg = load_staged(o);
  nsi::ChannelData<double> data;
  try {
    data = nsi::acquire(cfg);
  } catch (const std::exception& e) {
    throw nsi::StageError("simulate", e.what());
  }
  try {
    const auto grid = cfg.image_grid();
    std::vector<nsi::ApodizationKind> kinds;
    if (cfg.method == nsi::Method::Cnsi || cfg.method == nsi::Method::Icnsi) {
      kinds = {nsi::ApodizationKind::zero_mean(), nsi::ApodizationKind::dc_offset(cfg.dc_offset),
               nsi::ApodizationKind::dc_offset_flipped(cfg.dc_offset)};
    } else {
      kinds = {nsi::ApodizationKind::hann()};
    }
    const auto images = nsi::das_beamform_multi<double>(data, grid, kinds, cfg.acquisition.f_number);
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      nsi::MatrixX<double> sum = nsi::MatrixX<double>::Zero(grid.rows(), grid.cols());
      for (const auto& per_angle : images) sum += per_angle[k].values;
      const auto path = cfg.output_dir / ("rf_" + kinds[k].name() + ".csv");
      write_rf_image_csv(path, grid, sum);
      std::cout << "wrote " << path.string() << '\n';
    }
  } catch (const std::exception& e) {
    throw nsi::StageError("beamform", e.what());
  }
  return 0;
}

int cmd_image(const Overrides& o) {
  const auto cfg = load_staged(o);
  const auto r = nsi::run_pipeline(cfg);
  std::cout << "wrote " << (cfg.output_dir / "image.csv").string() << " and image.pgm (" << nsi::method_name(r.method)
            << ", " << r.bmode.values_db.rows() << " x " << r.bmode.values_db.cols() << ")\n";
  return 0;
}

int cmd_metrics(const Overrides& o) {
  const auto cfg = load_staged(o);
  nsi::run_pipeline(cfg);
  std::ifstream in(cfg.output_dir / "metrics.csv");
  std::cout << in.rdbuf();
  return 0;
}

int cmd_sweep(const Overrides& o) {
  const auto cfg = load_staged(o, true);
  const auto rows = nsi::run_sweep(cfg);
  const auto path = cfg.output_dir / "sweep.csv";
  try {
    nsi::write_sweep_csv(path, rows);
  } catch (const std::exception& e) {
    throw nsi::StageError("export", e.what());
  }
  std::cout << "wrote " << path.string() << " (" << rows.size() << " rows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Null subtraction imaging pipeline"};
  app.require_subcommand(1);
  Overrides o;

  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(const Overrides&);
  };
  const Sub subs[] = {{"simulate", "simulate channel data and write rf.nsrf", cmd_simulate},
                      {"beamform", "write angle-summed beamformed RF per apodization", cmd_beamform},
                      {"image", "form and export the B-mode image", cmd_image},
                      {"metrics", "form the image and print its metrics", cmd_metrics},
                      {"sweep", "grating-lobe reduction over dc_offset x n_angles x snr_db", cmd_sweep}};
  std::vector<std::pair<CLI::App*, int (*)(const Overrides&)>> commands;
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--method", o.method, "hann_coherent|hann_incoherent|cnsi|icnsi|gcf");
    sub->add_option("--dc-offset", o.dc_offset, "NSI DC offset c");
    sub->add_option("--angles", o.angles, "steering angles: lo:hi:count or a,b,c (degrees)");
    sub->add_option("--snr-db", o.snr_db, "raw channel SNR in dB, or inf");
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_option("--out", o.out, "output directory");
    commands.emplace_back(sub, s.fn);
  }
  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& [sub, fn] : commands) {
      if (sub->parsed()) return fn(o);
    }
  } catch (const nsi::StageError& e) {
    std::cerr << "error [" << e.stage() << "]: " << e.cause() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
