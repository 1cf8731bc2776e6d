#include <random>

#include "doctest.h"
#include "nsi/compound.hpp"
#include "support.hpp"

using namespace nsi;

namespace {

AcquisitionConfig acq(std::vector<double> angles, Index record = 2048) {
  AcquisitionConfig a;
  a.angles_deg = std::move(angles);
  a.record_length = record;
  return a;
}

}  // namespace

TEST_CASE("plane-wave transmit delays") {
  const auto g = testing::l14();
  CHECK(plane_wave_tx_delays(0.0, g.element_x, 1540.0).isZero(0.0));

  const Eigen::VectorXd d = plane_wave_tx_delays(16.0, g.element_x, 1540.0);
  CHECK(d.minCoeff() == 0.0);
  // span over a 38.1 mm aperture
  const auto wide = ArrayGeometry::linear(126, 0.0381 / 125);
  const Eigen::VectorXd dw = plane_wave_tx_delays(16.0, wide.element_x, 1540.0);
  CHECK(dw.maxCoeff() - dw.minCoeff() == doctest::Approx(6.82e-6).epsilon(1e-3));
  CHECK(dw.maxCoeff() - dw.minCoeff() == doctest::Approx(0.0381 * std::sin(deg2rad(16.0)) / 1540.0).epsilon(1e-12));

  const Eigen::VectorXd dn = plane_wave_tx_delays(-16.0, g.element_x, 1540.0);
  for (Index e = 0; e < g.n_elements; ++e) CHECK(dn[e] == doctest::Approx(d[g.n_elements - 1 - e]).epsilon(1e-12));
  CHECK_THROWS_AS(plane_wave_tx_delays(90.0, g.element_x, 1540.0), std::invalid_argument);
}

TEST_CASE("pulse has the requested -6 dB bandwidth") {
  const PulseModel pm;
  const GaussianPulse p(pm);
  // spectrum of the Gaussian envelope falls to 1/2 at +-B f0 / 2 from f0
  const double sigma_f = 1.0 / (2.0 * std::numbers::pi * p.sigma());
  const double half_bw = 0.5 * pm.fractional_bandwidth * pm.center_frequency;
  CHECK(std::exp(-0.5 * half_bw * half_bw / (sigma_f * sigma_f)) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p(0.0) == doctest::Approx(1.0));
  CHECK(p.envelope(p.half_support()) < 3e-11);
}

TEST_CASE("single scatterer echo peaks at the round-trip time") {
  // odd count puts element 63 at x = 0
  const auto g = ArrayGeometry::linear(127, 0.3048e-3);
  const auto a = acq({0.0});
  const auto d = synthesize_channel_data<double>({{0.0, 5e-3, 1.0}}, g, PulseModel{}, a);
  const Eigen::MatrixXd env = analytic_magnitude<double>(d.samples[0]);
  Index peak = 0;
  env.col(63).maxCoeff(&peak);
  const double expected = 2 * 0.005 / 1540.0;
  CHECK(expected == doctest::Approx(6.4935e-6).epsilon(1e-4));
  CHECK(std::abs(static_cast<double>(peak) - expected * a.sampling_frequency) <= 1.0);
}

TEST_CASE("echo-arrival oracle over random scatterers and elements") {
  const auto g = testing::l14(32);
  const auto a = acq({-10.0, 0.0, 12.0}, 2048);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(-6e-3, 6e-3), uz(4e-3, 20e-3);
  for (int trial = 0; trial < 6; ++trial) {
    const Scatterer s{ux(rng), uz(rng), 1.0};
    const auto d = synthesize_channel_data<double>({s}, g, PulseModel{}, a);
    for (Index ai = 0; ai < 3; ++ai) {
      const Eigen::MatrixXd env = analytic_magnitude<double>(d.samples[static_cast<std::size_t>(ai)]);
      for (const Index e : {Index{0}, Index{13}, Index{31}}) {
        Index peak = 0;
        env.col(e).maxCoeff(&peak);
        const double t = plane_wave_arrival(a.angles_deg[static_cast<std::size_t>(ai)], s.x, s.z, 1540.0) +
                         std::hypot(s.z, s.x - g.element_x[e]) / 1540.0;
        CHECK(std::abs(static_cast<double>(peak) - t * a.sampling_frequency) <= 1.0);
      }
    }
  }
}

TEST_CASE("synthesis is linear") {
  const auto g = testing::l14(16);
  const auto a = acq({-5.0, 5.0});
  const std::vector<Scatterer> s1{{1e-3, 5e-3, 1.0}, {-2e-3, 8e-3, 0.3}};
  const std::vector<Scatterer> s2{{0.5e-3, 6e-3, 2.0}};
  auto both = s1;
  both.insert(both.end(), s2.begin(), s2.end());
  const auto d1 = synthesize_channel_data<double>(s1, g, PulseModel{}, a);
  const auto d2 = synthesize_channel_data<double>(s2, g, PulseModel{}, a);
  const auto d12 = synthesize_channel_data<double>(both, g, PulseModel{}, a);
  for (std::size_t i = 0; i < 2; ++i) CHECK(testing::rel_diff(d12.samples[i], d1.samples[i] + d2.samples[i]) < 1e-9);

  const auto zero = synthesize_channel_data<double>({{0.0, 5e-3, 0.0}}, g, PulseModel{}, a);
  for (const auto& m : zero.samples) CHECK(m.isZero(0.0));

  const auto one = synthesize_channel_data<double>({{0.0, 5e-3, 1.0}}, g, PulseModel{}, a);
  const auto two = synthesize_channel_data<double>({{0.0, 5e-3, 1.0}, {0.0, 5e-3, 1.0}}, g, PulseModel{}, a);
  for (std::size_t i = 0; i < 2; ++i) CHECK(two.samples[i] == 2.0 * one.samples[i]);
}

TEST_CASE("synthesis rejects bad inputs and short records") {
  const auto g = testing::l14(16);
  CHECK_THROWS_AS(synthesize_channel_data<double>({}, g, PulseModel{}, acq({0.0})), std::invalid_argument);
  CHECK_THROWS_AS(synthesize_channel_data<double>({{0.0, -1e-3, 1.0}}, g, PulseModel{}, acq({0.0})), std::invalid_argument);
  CHECK_THROWS_AS(synthesize_channel_data<double>({{0.0, 30e-3, 1.0}}, g, PulseModel{}, acq({0.0}, 512)), TruncationError);
  // steered wavefront reaches this scatterer before crossing the array center
  CHECK_THROWS_AS(synthesize_channel_data<double>({{-10e-3, 0.5e-3, 1.0}}, testing::l14(), PulseModel{}, acq({16.0})),
                  TruncationError);
}

TEST_CASE("synthesis is independent of the thread count") {
  const auto g = testing::l14(64);
  const auto a = acq({-3.0, 0.0, 3.0});
  const std::vector<Scatterer> s{{1e-3, 5e-3, 1.0}, {-2e-3, 9e-3, 0.5}};
  const auto one = testing::with_threads(1, [&] { return synthesize_channel_data<double>(s, g, PulseModel{}, a); });
  const auto four = testing::with_threads(4, [&] { return synthesize_channel_data<double>(s, g, PulseModel{}, a); });
  for (std::size_t i = 0; i < 3; ++i) CHECK(one.samples[i] == four.samples[i]);
  const auto n1 = testing::with_threads(1, [&] { return add_noise(one, 10.0, 5); });
  const auto n4 = testing::with_threads(4, [&] { return add_noise(one, 10.0, 5); });
  for (std::size_t i = 0; i < 3; ++i) CHECK(n1.samples[i] == n4.samples[i]);
}

TEST_CASE("add_noise") {
  const auto g = testing::l14(64);
  const auto a = acq({-2.0, 0.0, 2.0}, 2048);
  std::vector<Scatterer> s;
  for (int i = 0; i < 40; ++i) s.push_back({(i % 8 - 4) * 1e-3, (4 + i % 5 * 2) * 1e-3, 1.0});
  const auto clean = synthesize_channel_data<double>(s, g, PulseModel{}, a);

  SUBCASE("infinite SNR is the identity") {
    const auto out = add_noise(clean, std::numeric_limits<double>::infinity(), 1);
    for (std::size_t i = 0; i < 3; ++i) CHECK(out.samples[i] == clean.samples[i]);
  }
  SUBCASE("0 dB gives equal noise and signal power") {
    ChannelData<double> noise;
    const auto out = add_noise(clean, 0.0, 11, &noise);
    double peak = 0.0;
    for (const auto& m : clean.samples) peak = std::max(peak, m.cwiseAbs().maxCoeff());
    double ps = 0.0, pn = 0.0;
    std::size_t support = 0, total = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      for (Index k = 0; k < clean.samples[i].size(); ++k) {
        const double v = clean.samples[i].data()[k];
        if (std::abs(v) > 1e-6 * peak) {
          ps += v * v;
          ++support;
        }
        pn += noise.samples[i].data()[k] * noise.samples[i].data()[k];
        ++total;
      }
    }
    REQUIRE(support >= 100000);
    CHECK((pn / static_cast<double>(total)) / (ps / static_cast<double>(support)) == doctest::Approx(1.0).epsilon(0.02));
    // noise-free component preserved: output is exactly input plus the returned realization
    for (std::size_t i = 0; i < 3; ++i) CHECK(out.samples[i] == clean.samples[i] + noise.samples[i]);
  }
  SUBCASE("deterministic in the seed") {
    const auto x = add_noise(clean, 10.0, 42);
    const auto y = add_noise(clean, 10.0, 42);
    const auto z = add_noise(clean, 10.0, 43);
    CHECK(x.samples[1] == y.samples[1]);
    CHECK(x.samples[1] != z.samples[1]);
  }
  SUBCASE("all-zero input is rejected") {
    auto zero = clean;
    for (auto& m : zero.samples) m.setZero();
    CHECK_THROWS_AS(add_noise(zero, 10.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(add_noise(clean, std::nan(""), 1), std::invalid_argument);
  }
}

TEST_CASE("speckle phantom") {
  const PhantomRegion r{-2e-3, 2e-3, 5e-3, 9e-3};
  const Inclusion cyst{0.0, 7e-3, 1e-3, 0.0};
  const auto p = make_speckle_phantom(r, 1e8, {cyst}, 9);
  CHECK(p.size() == 1600);
  for (const auto& s : p) {
    CHECK(s.x >= r.x_min);
    CHECK(s.x <= r.x_max);
    if (std::hypot(s.x - cyst.x, s.z - cyst.z) <= cyst.radius) CHECK(s.amplitude == 0.0);
  }
  CHECK(make_speckle_phantom(r, 0.0, {}, 9).empty());
  const auto q = make_speckle_phantom(r, 1e8, {cyst}, 9);
  CHECK(q.size() == p.size());
  CHECK(q.back().x == p.back().x);
  CHECK(q.back().amplitude == p.back().amplitude);
  CHECK_THROWS_AS(make_speckle_phantom(r, -1.0, {}, 9), std::invalid_argument);
  const auto plain = make_speckle_phantom(r, 1e9, {}, 2);
  double m = 0.0;
  for (const auto& s : plain) m += s.amplitude;
  CHECK(m / static_cast<double>(plain.size()) == doctest::Approx(1.0).epsilon(0.02));
}
