#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "nsi/io.hpp"

namespace nsi {

std::ofstream open_output(const std::filesystem::path& path, bool binary) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, binary ? std::ios::binary | std::ios::out : std::ios::out);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

std::uint8_t pgm_level(double db, double dynamic_range_db) {
  if (!(dynamic_range_db > 0.0)) throw std::invalid_argument("pgm_level: dynamic range must be > 0");
  if (std::isnan(db)) return 0;
  const double v = std::floor((db + dynamic_range_db) / dynamic_range_db * 255.0 + 0.5);
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

void write_image_csv(std::ostream& out, const BModeImage<double>& image) {
  const auto& g = image.grid;
  out << std::setprecision(17);
  out << "z\\x";
  for (Index j = 0; j < g.cols(); ++j) out << ',' << g.lateral_x[j];
  out << '\n';
  for (Index i = 0; i < g.rows(); ++i) {
    out << g.axial_z[i];
    for (Index j = 0; j < g.cols(); ++j) out << ',' << image.values_db(i, j);
    out << '\n';
  }
}

void write_image_pgm(std::ostream& out, const BModeImage<double>& image, double dynamic_range_db) {
  const Index rows = image.values_db.rows();
  const Index cols = image.values_db.cols();
  out << "P5\n" << cols << ' ' << rows << "\n255\n";
  std::string line(static_cast<std::size_t>(cols), '\0');
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      line[static_cast<std::size_t>(j)] = static_cast<char>(pgm_level(image.values_db(i, j), dynamic_range_db));
    }
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
  }
}

void export_image(const BModeImage<double>& image, const std::filesystem::path& path, ImageFormat format,
                  double dynamic_range_db) {
  if (image.values_db.size() == 0) throw std::invalid_argument("export_image: empty image");
  auto out = open_output(path, format == ImageFormat::Pgm);
  if (format == ImageFormat::Csv) {
    write_image_csv(out, image);
  } else {
    write_image_pgm(out, image, dynamic_range_db);
  }
  out.flush();
  if (!out) throw std::runtime_error("export_image: write failed for " + path.string());
}

void write_profiles_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                        const std::vector<LateralProfile>& profiles) {
  if (names.size() != profiles.size() || profiles.empty()) {
    throw std::invalid_argument("write_profiles_csv: need one name per profile");
  }
  for (const auto& p : profiles) {
    if (p.lateral_x.size() != profiles.front().lateral_x.size()) {
      throw std::invalid_argument("write_profiles_csv: profiles differ in length");
    }
  }
  auto out = open_output(path);
  out << std::setprecision(17) << "lateral_x";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  const auto& x = profiles.front().lateral_x;
  for (Index j = 0; j < x.size(); ++j) {
    out << x[j];
    for (const auto& p : profiles) out << ',' << p.power_db[j];
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_profiles_csv: write failed for " + path.string());
}

}  // namespace nsi
