#include <algorithm>
#include <cmath>
#include <random>

#include "airbeam/beamform.hpp"
#include "airbeam/errors.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace airbeam;
using airbeam::test::uniform_values;

namespace {

bool close(double a, double b, double rel = 1e-9, double abs_floor = 1e-12) {
  return std::abs(a - b) <= std::max(abs_floor, rel * std::max(std::abs(a), std::abs(b)));
}

// Pairwise double sum over i < j of the signed square roots.
double dmas2_double_sum(std::span<const double> x) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double si = std::copysign(std::sqrt(std::abs(x[i])), x[i]);
      const double sj = std::copysign(std::sqrt(std::abs(x[j])), x[j]);
      total += si * sj;
    }
  return total;
}

MultichannelRecording random_recording(std::size_t channels, std::size_t length, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix m(channels, length);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : m.data()) v = u(rng);
  return MultichannelRecording(std::move(m), 450e3);
}

}  // namespace

TEST_CASE("signed roots") {
  CHECK(signed_root(8.0, 3) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(signed_root(-8.0, 3) == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(signed_root(16.0, 4) == 2.0);
  CHECK(signed_root(-9.0, 2) == -3.0);
  CHECK(signed_root(0.0, 5) == 0.0);
  CHECK(signed_root(-0.0, 3) == 0.0);
  CHECK(signed_root(-2.5, 1) == -2.5);
  CHECK(signed_root(32.0, 5) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(signed_root(1.0, 0), InvalidArgument);
  // Odd symmetry.
  for (double x : {0.3, 1.7, 42.0})
    for (int n = 2; n <= 7; ++n) CHECK(signed_root(-x, n) == -signed_root(x, n));
}

TEST_CASE("brute-force oracle on small examples") {
  const std::vector<double> x{1.0, 4.0, 9.0};
  CHECK(dmas_brute_force(x, 2) == doctest::Approx(11.0));
  // A single subset is the product of all roots.
  CHECK(dmas_brute_force(x, 3) == doctest::Approx(std::cbrt(1.0) * std::cbrt(4.0) * std::cbrt(9.0)));
  CHECK_THROWS_AS(dmas_brute_force(x, 4), InvalidArgument);
  const std::vector<double> big(200, 1.0);
  CHECK_THROWS_AS(dmas_brute_force(big, 5), InvalidArgument);
}

TEST_CASE("Newton-Girard expansions match the subset sums") {
  std::mt19937_64 rng(2024);
  for (int n = 2; n <= 6; ++n) {
    for (std::size_t count = static_cast<std::size_t>(n); count <= 10; ++count) {
      for (int trial = 0; trial < 200; ++trial) {
        const auto x = uniform_values(count, rng);
        const double oracle = dmas_brute_force(x, n);
        const double general = dmas_general(x, n);
        INFO("n=" << n << " N=" << count << " oracle=" << oracle << " general=" << general);
        CHECK(close(general, oracle));
        if (n <= 5) CHECK(close(dmas_fast(x, n), oracle));
      }
    }
  }
}

TEST_CASE("order-2 expansion equals the pairwise double sum") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto x = uniform_values(32, rng);
    CHECK(close(dmas_fast(x, 2), dmas2_double_sum(x)));
  }
}

TEST_CASE("expansion coefficients for low orders") {
  const auto& e2 = NewtonGirardExpansion::for_order(2);
  REQUIRE(e2.terms().size() == 2);
  // P1^2 / 2 - P2 / 2
  const std::vector<double> p{3.0, 5.0};
  CHECK(e2.evaluate(p) == doctest::Approx(0.5 * 9.0 - 0.5 * 5.0));
  CHECK(NewtonGirardExpansion::for_order(5).terms().size() == 7);
  CHECK(NewtonGirardExpansion::for_order(6).terms().size() == 11);
  CHECK(&NewtonGirardExpansion::for_order(4) == &NewtonGirardExpansion::for_order(4));
  // Coefficient sum: E_n of n ones is 1 when every P_k = n.
  for (int n = 2; n <= 8; ++n) {
    std::vector<double> ones(static_cast<std::size_t>(n), static_cast<double>(n));
    CHECK(NewtonGirardExpansion::for_order(n).evaluate(ones) == doctest::Approx(1.0));
  }
}

TEST_CASE("power sums with n = 1 reduce to DAS") {
  std::mt19937_64 rng(9);
  const auto x = uniform_values(17, rng);
  CHECK(power_sums(x, 1)[0] == doctest::Approx(das(x)).epsilon(1e-14));
}

TEST_CASE("beamformers are symmetric and degree-one homogeneous") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    auto x = uniform_values(12, rng);
    auto y = x;
    std::shuffle(y.begin(), y.end(), rng);
    for (const auto& spec : standard_beamformers()) CHECK(close(beamform_pixel(x, spec), beamform_pixel(y, spec)));
    for (int n = 2; n <= 6; ++n) {
      const double base = n <= 5 ? dmas_fast(x, n) : dmas_general(x, n);
      for (double lambda : {1e-3, 2.5, 1e3}) {
        std::vector<double> scaled(x);
        for (double& v : scaled) v *= lambda;
        const double s = n <= 5 ? dmas_fast(scaled, n) : dmas_general(scaled, n);
        CHECK(close(s, lambda * base, 1e-9, 1e-12 * lambda));
      }
    }
  }
}

TEST_CASE("coherence factor properties") {
  CHECK(coherence_factor(std::vector<double>{2.0, 2.0, 2.0}, 0.0) == doctest::Approx(1.0));
  CHECK(coherence_factor(std::vector<double>{1.0, 0.0, 0.0, 0.0}, 0.0) == doctest::Approx(0.25));
  CHECK(coherence_factor(std::vector<double>{1.0, -1.0}, 0.0) == 0.0);
  CHECK(coherence_factor(std::vector<double>{0.0, 0.0}) == 0.0);
  CHECK_THROWS_AS(coherence_factor(std::vector<double>{}), InvalidArgument);
  CHECK_THROWS_AS(coherence_factor(std::vector<double>{1.0}, -1.0), InvalidArgument);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10000; ++trial) {
    auto x = uniform_values(1 + trial % 16, rng);
    const double cf = coherence_factor(x, 0.0);
    CHECK((cf >= 0.0 && cf <= 1.0 + 1e-15));
    for (double lambda : {1e-3, 1.0, 1e3}) {
      std::vector<double> s(x);
      for (double& v : s) v *= lambda;
      CHECK(std::abs(coherence_factor(s, 0.0) - cf) <= 1e-9);
    }
  }
}

TEST_CASE("beamformer labels") {
  CHECK(BeamformerSpec::parse("das") == BeamformerSpec::das());
  CHECK(BeamformerSpec::parse("DMAS5-CF") == BeamformerSpec::dmas(5, true));
  CHECK(BeamformerSpec::parse("dmas3") == BeamformerSpec::dmas(3));
  CHECK(BeamformerSpec::dmas(4, true).label() == "DMAS4-CF");
  CHECK_THROWS_AS(BeamformerSpec::parse("mvdr"), InvalidArgument);
  CHECK_THROWS_AS(BeamformerSpec::parse("dmas1"), InvalidArgument);
  CHECK(standard_beamformers().size() == 10);
}

TEST_CASE("pre-steering reads each channel at t + delay") {
  Matrix m(2, 10);
  for (std::size_t k = 0; k < 10; ++k) {
    m(0, k) = static_cast<double>(k);
    m(1, k) = 10.0 * static_cast<double>(k);
  }
  const MultichannelRecording rec(m, 1000.0);
  const MicrophoneArray array({{0, 0, 0}, {0, 1, 0}});
  const DirectionGrid grid({Direction{}});
  Matrix d(1, 2);
  d(0, 0) = 2.5e-3;   // +2.5 samples
  d(0, 1) = -1.0e-3;  // -1 sample
  const DelayTable table(d, grid, 343.0, Vec3{});
  const auto x = pre_steer(rec, table, 0, 4);
  CHECK(x[0] == doctest::Approx(6.5));
  CHECK(x[1] == doctest::Approx(30.0));
  const auto edge = pre_steer(rec, table, 0, 0);
  CHECK(edge[1] == 0.0);
  const auto late = pre_steer(rec, table, 0, 9);
  CHECK(late[0] == 0.0);
}

TEST_CASE("image kernel reproduces the per-pixel path bit for bit") {
  const auto rec = random_recording(9, 700, 3);
  const auto array = spiral_array(9, 0.04);
  const auto grid = azimuth_scan_grid(-1.2, 1.2, 0.3, 0.1);
  const auto delays = far_field_delays(array, grid);
  std::vector<BeamformerSpec> specs = standard_beamformers();
  specs.push_back(BeamformerSpec::dmas(7, true));
  for (auto interp : {Interpolation::Linear, Interpolation::WindowedSinc}) {
    BeamformOptions opt;
    opt.time_begin = 3;
    opt.time_end = 650;
    opt.interpolation = interp;
    opt.threads = 1;
    const auto images = beamform_images(rec, delays, specs, opt);
    for (std::size_t s = 0; s < specs.size(); ++s) {
      REQUIRE(images[s].time_count() == 647);
      CHECK(images[s].start_sample() == 3);
      bool all_equal = true;
      for (std::size_t d = 0; d < grid.size(); ++d)
        for (std::size_t t = 3; t < 650; t += 7) {
          const auto slice = pre_steer(rec, delays, d, t, interp);
          all_equal = all_equal && images[s].pixels()(d, t - 3) == beamform_pixel(slice, specs[s]);
        }
      INFO(specs[s].label());
      CHECK(all_equal);
    }
    opt.threads = 3;
    const auto threaded = beamform_images(rec, delays, specs, opt);
    for (std::size_t s = 0; s < specs.size(); ++s) CHECK(threaded[s].pixels() == images[s].pixels());
  }
}

TEST_CASE("image edge cases") {
  const auto array = spiral_array(6, 0.03);
  const auto grid = azimuth_scan_grid(-0.5, 0.5, 0.25, 0.0);
  const auto delays = far_field_delays(array, grid);
  const MultichannelRecording zero(Matrix(6, 300), 450e3);
  for (const auto& spec : standard_beamformers()) {
    const auto img = beamform_image(zero, delays, spec);
    CHECK(std::all_of(img.pixels().data().begin(), img.pixels().data().end(), [](double v) { return v == 0.0; }));
  }
  CHECK_THROWS_AS(beamform_image(zero, delays, BeamformerSpec::dmas(7)), InvalidArgument);
  const MultichannelRecording wrong(Matrix(5, 300), 450e3);
  CHECK_THROWS_AS(beamform_image(wrong, delays, BeamformerSpec::das()), InvalidArgument);
  BeamformOptions empty;
  empty.time_begin = 300;
  CHECK_THROWS_AS(beamform_image(zero, delays, BeamformerSpec::das(), empty), InvalidArgument);
}

TEST_CASE("broadside reflector: DAS and DMAS5-CF peak at the source pixel") {
  const auto array = spiral_array(16, 0.05);
  const double fs = 450e3;
  const auto pulse = generate_chirp(ChirpSpec{});
  const Reflector r{1.0, Direction{}, 1.0};
  const auto raw = synthesize_echoes(array, pulse, fs, std::span<const Reflector>(&r, 1), 4200);
  const auto mf = matched_filter(raw, pulse);
  const auto grid = azimuth_scan_grid(deg_to_rad(-30), deg_to_rad(30), deg_to_rad(2), 0.0);
  const auto delays = far_field_delays(array, grid);
  const std::size_t echo = static_cast<std::size_t>(std::llround(2.0 / 343.0 * fs));
  BeamformOptions opt;
  opt.time_begin = echo - 200;
  opt.time_end = echo + 200;
  const std::vector<BeamformerSpec> specs{BeamformerSpec::das(), BeamformerSpec::dmas(5, true)};
  const auto images = beamform_images(mf, delays, specs, opt);
  const std::size_t broadside = 15;
  REQUIRE(grid[broadside].azimuth == doctest::Approx(0.0));
  for (const auto& img : images) {
    const auto data = img.pixels().data();
    std::size_t best = 0;
    for (std::size_t k = 1; k < data.size(); ++k)
      if (std::abs(data[k]) > std::abs(data[best])) best = k;
    CHECK(best / img.time_count() == broadside);
    const auto col = static_cast<long>(best % img.time_count() + img.start_sample());
    CHECK(std::abs(col - static_cast<long>(echo)) <= 1);
  }
}
