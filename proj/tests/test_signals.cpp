#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "airbeam/errors.hpp"
#include "airbeam/signals.hpp"
#include "doctest.h"

using namespace airbeam;

namespace {

double mean(std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size()); }

double stddev(std::span<const double> x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size()));
}

std::size_t argmax(std::span<const double> x) {
  return static_cast<std::size_t>(std::max_element(x.begin(), x.end()) - x.begin());
}

// Magnitude of the filter's frequency response at f, by direct summation.
double response(std::span<const double> taps, double f, double fs) {
  std::complex<double> acc = 0.0;
  const double half = static_cast<double>(taps.size() / 2);
  for (std::size_t k = 0; k < taps.size(); ++k)
    acc += taps[k] * std::polar(1.0, -2.0 * kPi * f / fs * (static_cast<double>(k) - half));
  return std::abs(acc);
}

}  // namespace

TEST_CASE("chirp length, amplitude and sweep") {
  const ChirpSpec spec;
  const auto c = generate_chirp(spec);
  CHECK(c.size() == 1125);
  CHECK(c.front() == doctest::Approx(1.0));
  CHECK(*std::max_element(c.begin(), c.end()) <= 1.0);
  // A linear sweep crosses zero twice per cycle: 2 * mean frequency * duration.
  std::size_t crossings = 0;
  for (std::size_t k = 1; k < c.size(); ++k)
    if ((c[k - 1] < 0.0) != (c[k] < 0.0)) ++crossings;
  CHECK(std::abs(static_cast<double>(crossings) - 2.0 * 37.5e3 * 2.5e-3) <= 2.0);
}

TEST_CASE("chirp energy lies in the swept band") {
  const ChirpSpec spec;
  const auto c = generate_chirp(spec);
  const std::size_t n = c.size();
  double in_band = 0.0;
  double total = 0.0;
  // Brute-force DFT over all bins up to Nyquist.
  for (std::size_t b = 0; b <= n / 2; ++b) {
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += c[k] * std::polar(1.0, -2.0 * kPi * double(b) * double(k) / double(n));
    const double f = static_cast<double>(b) * spec.sample_rate / static_cast<double>(n);
    const double e = std::norm(acc);
    total += e;
    if (f >= 25e3 && f <= 50e3) in_band += e;
  }
  CHECK(in_band / total > 0.9);
}

TEST_CASE("chirp parameter validation") {
  ChirpSpec bad;
  bad.f_end = 300e3;
  CHECK_THROWS_AS(generate_chirp(bad), InvalidArgument);
  bad = ChirpSpec{};
  bad.duration = 0.0;
  CHECK_THROWS_AS(generate_chirp(bad), InvalidArgument);
  bad = ChirpSpec{};
  bad.taper_fraction = 0.6;
  CHECK_THROWS_AS(generate_chirp(bad), InvalidArgument);
}

TEST_CASE("broadside echo: identical channels starting at the round-trip sample") {
  const auto array = spiral_array(8, 0.03);
  const double fs = 450e3;
  const double c = 343.0;
  // Range chosen so the round trip is exactly 2700 samples.
  const double range = c * 2700.0 / (2.0 * fs);
  const std::vector<double> pulse{1.0, -0.5, 0.25, 2.0};
  const Reflector r{range, Direction{0.0, 0.0}, 1.0};
  const auto rec = synthesize_echoes(array, pulse, fs, std::span<const Reflector>(&r, 1), 3000, {c, false});
  for (std::size_t i = 0; i < rec.channels(); ++i) {
    const auto ch = rec.channel(i);
    CHECK(ch[2699] == doctest::Approx(0.0));
    for (std::size_t k = 0; k < pulse.size(); ++k) CHECK(ch[2700 + k] == doctest::Approx(pulse[k]).epsilon(1e-9));
    CHECK(ch[2704] == doctest::Approx(0.0));
  }
}

TEST_CASE("off-axis echo arrives at 2R/c plus the steering delay") {
  const MicrophoneArray array({{0.0, 0.0, 0.0}, {0.0, 0.1, 0.0}});
  const double fs = 100e3;
  const double c = 343.0;
  ChirpSpec spec;
  spec.sample_rate = fs;
  spec.f_start = 10e3;
  spec.f_end = 30e3;
  spec.duration = 2e-3;
  const auto pulse = generate_chirp(spec);
  const Reflector r{1.0, Direction::from_degrees(30.0, 0.0), 1.0};
  const auto rec = synthesize_echoes(array, pulse, fs, std::span<const Reflector>(&r, 1), 1200, {c, false});
  const auto mf = matched_filter(rec, pulse);
  // Mic 1 sits 0.1 m along +y, so it hears the wave 0.1 sin(30 deg) / c earlier than mic 0.
  const double expected_lag = 0.1 * 0.5 / c * fs;
  const double lag = static_cast<double>(argmax(mf.channel(0))) - static_cast<double>(argmax(mf.channel(1)));
  CHECK(std::abs(lag - expected_lag) <= 1.0);
  // Spherical spreading halves a 2 m echo.
  const Reflector far{2.0, Direction{}, 1.0};
  const auto spread = synthesize_echoes(array, pulse, fs, std::span<const Reflector>(&far, 1), 1600, {c, true});
  double peak = 0.0;
  for (double v : spread.channel(0)) peak = std::max(peak, std::abs(v));
  CHECK(peak == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("echo synthesis rejects scenes that do not fit") {
  const auto array = spiral_array(4, 0.02);
  const std::vector<double> pulse(100, 1.0);
  const Reflector r{1.0, Direction{}, 1.0};
  CHECK_THROWS_AS(synthesize_echoes(array, pulse, 450e3, std::span<const Reflector>(&r, 1), 2000), InvalidArgument);
  const Reflector neg{-1.0, Direction{}, 1.0};
  CHECK_THROWS_AS(synthesize_echoes(array, pulse, 450e3, std::span<const Reflector>(&neg, 1), 5000), InvalidArgument);
}

TEST_CASE("fractional delay taps interpolate a slow sinusoid") {
  const double f = 0.02;  // cycles per sample
  for (double frac : {0.0, 0.25, 0.5, 0.9}) {
    const auto taps = fractional_delay_taps(frac);
    CHECK(std::accumulate(taps.begin(), taps.end(), 0.0) == doctest::Approx(1.0));
    // value = sum taps[m] x[k - 31 + m] should equal x at k + frac.
    const long k = 200;
    double acc = 0.0;
    for (int m = 0; m < kFractionalDelayTaps; ++m) acc += taps[m] * std::sin(2.0 * kPi * f * double(k - 31 + m));
    CHECK(acc == doctest::Approx(std::sin(2.0 * kPi * f * (double(k) + frac))).epsilon(1e-3));
  }
}

TEST_CASE("noise has the requested standard deviation and is seeded") {
  const MultichannelRecording zero(Matrix(4, 50000), 450e3);
  const auto noisy = add_noise(zero, 20.0, 7);
  for (std::size_t i = 0; i < 4; ++i) CHECK(stddev(noisy.channel(i)) == doctest::Approx(0.1).epsilon(0.02));
  CHECK(add_noise(zero, 20.0, 7).samples() == noisy.samples());
  CHECK_FALSE(add_noise(zero, 20.0, 8).samples() == noisy.samples());
  CHECK(noise_scale(0.0) == 1.0);
  CHECK(noise_scale(-40.0) == doctest::Approx(100.0));
}

TEST_CASE("matched filter: unit peak at the echo start, lag recovery") {
  const auto pulse = generate_chirp(ChirpSpec{});
  Matrix m(2, 4000);
  for (std::size_t k = 0; k < pulse.size(); ++k) {
    m(0, 500 + k) = pulse[k];
    m(1, 537 + k) = 0.5 * pulse[k];
  }
  const auto y = matched_filter(MultichannelRecording(m, 450e3), pulse);
  CHECK(argmax(y.channel(0)) == 500);
  CHECK(y.channel(0)[500] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(argmax(y.channel(1)) == 537);
  CHECK(y.channel(1)[537] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(matched_filter(MultichannelRecording(Matrix(1, 10), 1.0), pulse), InvalidArgument);
}

TEST_CASE("envelope detector: response and rectified-sine mean") {
  const double fs = 450e3;
  const EnvelopeDetector env(5e3, fs);
  const auto taps = env.taps();
  CHECK(taps.size() % 2 == 1);
  CHECK(response(taps, 0.0, fs) == doctest::Approx(1.0).epsilon(1e-12));
  double worst = 0.0;
  for (double f = 10e3; f <= fs / 2.0; f += 250.0) worst = std::max(worst, response(taps, f, fs));
  CHECK(20.0 * std::log10(worst) <= -60.0);

  Signal tone(20000);
  for (std::size_t k = 0; k < tone.size(); ++k) tone[k] = std::sin(2.0 * kPi * 40e3 * double(k) / fs);
  const auto e = env.apply(tone);
  const std::span<const double> interior(e.data() + 1000, e.size() - 2000);
  CHECK(mean(interior) == doctest::Approx(2.0 / kPi).epsilon(0.01));
  CHECK(*std::min_element(e.begin(), e.end()) >= 0.0);

  std::vector<double> window(300);
  env.apply(tone, 5000, window);
  for (std::size_t k = 0; k < window.size(); ++k) CHECK(window[k] == e[5000 + k]);
  CHECK_THROWS_AS(EnvelopeDetector(300e3, fs), InvalidArgument);
  CHECK(envelope_detect(tone, 5e3, fs) == e);
}

TEST_CASE("kaiser window shape") {
  CHECK(kaiser_window(0.0, 10.0, 5.0) == doctest::Approx(1.0));
  CHECK(kaiser_window(3.0, 10.0, 5.0) == doctest::Approx(kaiser_window(-3.0, 10.0, 5.0)));
  CHECK(kaiser_window(10.0, 10.0, 5.0) == 0.0);
  CHECK(kaiser_window(5.0, 10.0, 5.0) < kaiser_window(2.0, 10.0, 5.0));
}

TEST_CASE("recording validation") {
  CHECK_THROWS_AS(MultichannelRecording(Matrix(0, 0), 1.0), InvalidArgument);
  CHECK_THROWS_AS(MultichannelRecording(Matrix(1, 4), 0.0), InvalidArgument);
  Matrix m(1, 2);
  m(0, 1) = std::nan("");
  CHECK_THROWS_AS(MultichannelRecording(m, 1.0), InvalidArgument);
}
