#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "nsi/compound.hpp"
#include "nsi/metrics.hpp"
#include "nsi/simulate.hpp"

namespace nsi {

inline constexpr char kRfMagic[4] = {'N', 'S', 'R', 'F'};
inline constexpr std::uint32_t kRfVersion = 1;

/**
 * @brief Binary RF container, little-endian throughout.
 *
 *   "NSRF" | u32 version | u32 n_angles | u32 n_elements | u32 n_samples
 *   f64 fs | f64 c | f64 f0 | f64 bandwidth | f64 pitch
 *   f64 angles[n_angles] | f64 time_zero[n_angles] | f64 f_number | u64 seed
 *   f32 samples, angle-major, then element, then sample
 *
 * Samples are narrowed to float32 on write.
 */
void write_rf(std::ostream& out, const ChannelData<double>& data);
void write_rf(const std::filesystem::path& path, const ChannelData<double>& data);
ChannelData<double> read_rf(std::istream& in);
ChannelData<double> read_rf(const std::filesystem::path& path);

enum class ImageFormat { Csv, Pgm };

/// Gray level for a dB value: [-range, 0] maps linearly to [0, 255], round half up, clamped.
std::uint8_t pgm_level(double db, double dynamic_range_db = 60.0);

/// Header row "z\x" then lateral_x; one row per depth: axial_z followed by dB values.
void write_image_csv(std::ostream& out, const BModeImage<double>& image);
void write_image_pgm(std::ostream& out, const BModeImage<double>& image, double dynamic_range_db = 60.0);
void export_image(const BModeImage<double>& image, const std::filesystem::path& path, ImageFormat format,
                  double dynamic_range_db = 60.0);

/// Columns: lateral_x, then one power_db column per profile (all profiles share lateral_x).
void write_profiles_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                        const std::vector<LateralProfile>& profiles);

/// Opens a file for writing or throws std::runtime_error naming the path.
std::ofstream open_output(const std::filesystem::path& path, bool binary = false);

}  // namespace nsi
