#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "nsi/io.hpp"

namespace nsi {

namespace {

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u32(std::uint32_t v) { le(v); }
  void u64(std::uint64_t v) { le(v); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
  void bytes(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }

 private:
  template <typename U>
  void le(U v) {
    std::array<char, sizeof(U)> b{};
    for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFU);
    out_.write(b.data(), b.size());
  }
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint32_t u32(const char* what) { return le<std::uint32_t>(what); }
  std::uint64_t u64(const char* what) { return le<std::uint64_t>(what); }
  double f64(const char* what) { return std::bit_cast<double>(le<std::uint64_t>(what)); }
  float f32(const char* what) { return std::bit_cast<float>(le<std::uint32_t>(what)); }

  void bytes(char* p, std::size_t n, const char* what) {
    in_.read(p, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError(std::string("read_rf: truncated file while reading ") + what,
                        offset_ + static_cast<std::uint64_t>(in_.gcount()));
    }
    offset_ += n;
  }

  [[nodiscard]] std::uint64_t offset() const { return offset_; }

 private:
  template <typename U>
  U le(const char* what) {
    std::array<unsigned char, sizeof(U)> b{};
    bytes(reinterpret_cast<char*>(b.data()), b.size(), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
    return v;
  }
  std::istream& in_;
  std::uint64_t offset_ = 0;
};

std::uint32_t checked_u32(Index v, const char* what) {
  if (v < 0 || v > static_cast<Index>(std::numeric_limits<std::uint32_t>::max())) {
    throw std::invalid_argument(std::string("write_rf: ") + what + " out of range");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_rf(std::ostream& out, const ChannelData<double>& data) {
  data.validate();
  Writer w(out);
  w.bytes(kRfMagic, sizeof(kRfMagic));
  w.u32(kRfVersion);
  w.u32(checked_u32(data.n_angles(), "n_angles"));
  w.u32(checked_u32(data.n_elements(), "n_elements"));
  w.u32(checked_u32(data.n_samples(), "n_samples"));
  w.f64(data.acquisition.sampling_frequency);
  w.f64(data.pulse.sound_speed);
  w.f64(data.pulse.center_frequency);
  w.f64(data.pulse.fractional_bandwidth);
  w.f64(data.geometry.pitch);
  for (const double a : data.acquisition.angles_deg) w.f64(a);
  for (const double t : data.time_zero) w.f64(t);
  w.f64(data.acquisition.f_number);
  w.u64(data.acquisition.seed);
  for (const auto& m : data.samples) {
    for (Index e = 0; e < m.cols(); ++e) {
      for (Index k = 0; k < m.rows(); ++k) w.f32(static_cast<float>(m(k, e)));
    }
  }
  if (!out) throw std::runtime_error("write_rf: stream write failed");
}

void write_rf(const std::filesystem::path& path, const ChannelData<double>& data) {
  auto out = open_output(path, true);
  write_rf(out, data);
  out.flush();
  if (!out) throw std::runtime_error("write_rf: cannot write " + path.string());
}

ChannelData<double> read_rf(std::istream& in) {
  Reader r(in);
  char magic[4];
  r.bytes(magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kRfMagic, sizeof(magic)) != 0) {
    throw FormatError("read_rf: bad magic, expected \"NSRF\"", 0);
  }
  const std::uint64_t version_at = r.offset();
  const std::uint32_t version = r.u32("version");
  if (version != kRfVersion) {
    throw FormatError("read_rf: unsupported version " + std::to_string(version) + ", expected " +
                          std::to_string(kRfVersion),
                      version_at);
  }
  const std::uint64_t dims_at = r.offset();
  const std::uint32_t n_angles = r.u32("n_angles");
  const std::uint32_t n_elements = r.u32("n_elements");
  const std::uint32_t n_samples = r.u32("n_samples");
  if (n_angles == 0 || n_elements == 0 || n_samples == 0) {
    throw FormatError("read_rf: zero dimension in header", dims_at);
  }

  PulseModel pulse;
  AcquisitionConfig acq;
  acq.sampling_frequency = r.f64("sampling_frequency");
  pulse.sound_speed = r.f64("sound_speed");
  pulse.center_frequency = r.f64("center_frequency");
  pulse.fractional_bandwidth = r.f64("fractional_bandwidth");
  const double pitch = r.f64("pitch");
  acq.angles_deg.resize(n_angles);
  for (auto& a : acq.angles_deg) a = r.f64("angle list");
  std::vector<double> time_zero(n_angles);
  for (auto& t : time_zero) t = r.f64("time_zero list");
  acq.f_number = r.f64("f_number");
  acq.seed = r.u64("seed");
  acq.record_length = n_samples;
  const std::uint64_t header_end = r.offset();

  ChannelData<double> data;
  try {
    data = ChannelData<double>::zeros(ArrayGeometry::linear(n_elements, pitch), pulse, acq);
    pulse.validate();
    acq.validate(pulse);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("read_rf: invalid header: ") + e.what(), header_end);
  }
  data.time_zero = std::move(time_zero);

  for (auto& m : data.samples) {
    for (Index e = 0; e < m.cols(); ++e) {
      for (Index k = 0; k < m.rows(); ++k) m(k, e) = static_cast<double>(r.f32("sample payload"));
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("read_rf: trailing bytes after payload", r.offset());
  }
  return data;
}

ChannelData<double> read_rf(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_rf: cannot open " + path.string());
  return read_rf(in);
}

}  // namespace nsi
