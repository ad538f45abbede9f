#include "airbeam/signals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "airbeam/errors.hpp"

namespace airbeam {

MultichannelRecording::MultichannelRecording(Matrix samples, double sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
  if (samples_.rows() == 0) throw InvalidArgument("recording needs at least one channel");
  if (samples_.cols() == 0) throw InvalidArgument("recording needs at least one sample");
  if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_)) throw InvalidArgument("sample rate must be positive");
  for (double v : samples_.data())
    if (!std::isfinite(v)) throw InvalidArgument("recording contains a non-finite sample");
}

void ChirpSpec::validate() const {
  if (!(sample_rate > 0.0)) throw InvalidArgument("chirp sample rate must be positive");
  const double nyquist = sample_rate / 2.0;
  if (!(f_start > 0.0 && f_start < nyquist) || !(f_end > 0.0 && f_end < nyquist))
    throw InvalidArgument("chirp frequencies must lie in (0, sample_rate/2)");
  if (!(duration > 0.0)) throw InvalidArgument("chirp duration must be positive");
  if (!(taper_fraction >= 0.0 && taper_fraction <= 0.5)) throw InvalidArgument("chirp taper fraction must be in [0, 0.5]");
  if (!std::isfinite(amplitude)) throw InvalidArgument("chirp amplitude must be finite");
  if (sample_count() == 0) throw InvalidArgument("chirp is shorter than one sample");
}

std::size_t ChirpSpec::sample_count() const {
  return static_cast<std::size_t>(std::llround(duration * sample_rate));
}

Signal generate_chirp(const ChirpSpec& spec) {
  spec.validate();
  const std::size_t n = spec.sample_count();
  const double sweep_rate = (spec.f_end - spec.f_start) / spec.duration;
  const double ramp = spec.taper_fraction * spec.duration;
  Signal out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / spec.sample_rate;
    const double phase = 2.0 * kPi * (spec.f_start * t + 0.5 * sweep_rate * t * t);
    double gain = 1.0;
    if (ramp > 0.0) {
      const double edge = std::min(t, spec.duration - t);
      if (edge < ramp) gain = 0.5 * (1.0 - std::cos(kPi * std::max(edge, 0.0) / ramp));
    }
    out[k] = spec.amplitude * gain * std::cos(phase);
  }
  return out;
}

double kaiser_window(double t, double half_length, double beta) noexcept {
  const double r = t / half_length;
  if (r <= -1.0 || r >= 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - r * r)) / std::cyl_bessel_i(0.0, beta);
}

namespace {

constexpr double kFractionalDelayBeta = 8.0;

double sinc(double x) noexcept {
  if (x == 0.0) return 1.0;
  const double px = kPi * x;
  return std::sin(px) / px;
}

}  // namespace

std::vector<double> fractional_delay_taps(double frac) {
  std::vector<double> taps(kFractionalDelayTaps, 0.0);
  if (frac == 0.0) {
    taps[31] = 1.0;
    return taps;
  }
  const double half = kFractionalDelayTaps / 2;
  for (int idx = 0; idx < kFractionalDelayTaps; ++idx) {
    const double t = frac - static_cast<double>(idx - 31);
    taps[idx] = sinc(t) * kaiser_window(t, half, kFractionalDelayBeta);
  }
  const double sum = std::accumulate(taps.begin(), taps.end(), 0.0);
  for (double& v : taps) v /= sum;
  return taps;
}

MultichannelRecording synthesize_echoes(const MicrophoneArray& array, std::span<const double> emitted,
                                        double sample_rate, std::span<const Reflector> reflectors,
                                        std::size_t n_samples, const EchoOptions& options) {
  if (emitted.empty()) throw InvalidArgument("emitted signal is empty");
  if (!(options.sound_speed > 0.0)) throw InvalidArgument("sound speed must be positive");
  Matrix samples(array.size(), n_samples);
  const Vec3 reference = array.centroid();
  const auto length = static_cast<long>(emitted.size());
  const auto total = static_cast<long>(n_samples);

  for (const auto& reflector : reflectors) {
    if (!(reflector.range > 0.0)) throw InvalidArgument("reflector range must be positive");
    if (!(reflector.reflectivity >= 0.0)) throw InvalidArgument("reflectivity must be non-negative");
    reflector.direction.validate();
    const Vec3 u = reflector.direction.unit_vector();
    const double gain = reflector.reflectivity * (options.spherical_spreading ? 1.0 / reflector.range : 1.0);
    const double round_trip = 2.0 * reflector.range / options.sound_speed;

    for (std::size_t i = 0; i < array.size(); ++i) {
      const double tau = -dot(array[i] - reference, u) / options.sound_speed;
      const double delay = (round_trip + tau) * sample_rate;
      if (delay < 0.0) throw InvalidArgument("echo would arrive before t = 0");
      const long whole = static_cast<long>(std::ceil(delay));
      if (whole + length > total) throw InvalidArgument("echo does not fit inside the recording");
      const double frac = static_cast<double>(whole) - delay;
      const auto taps = fractional_delay_taps(frac);

      // out[n] = sum_idx taps[idx] * emitted[n - whole - 31 + idx]
      auto out = samples.row(i);
      const long first = std::max(0L, whole - 32);
      const long last = std::min(total - 1, whole + length + 31);
      for (long n = first; n <= last; ++n) {
        const long base = n - whole - 31;
        const long lo = std::max(0L, -base);
        const long hi = std::min(static_cast<long>(kFractionalDelayTaps), length - base);
        double acc = 0.0;
        for (long idx = lo; idx < hi; ++idx) acc += taps[idx] * emitted[base + idx];
        out[n] += gain * acc;
      }
    }
  }
  return MultichannelRecording(std::move(samples), sample_rate);
}

double noise_scale(double snr_db) noexcept { return std::pow(10.0, -snr_db / 20.0); }

MultichannelRecording add_noise(const MultichannelRecording& rec, double snr_db, std::uint64_t seed) {
  const double eta = noise_scale(snr_db);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix samples = rec.samples();
  for (double& v : samples.data()) v += eta * gauss(rng);
  return MultichannelRecording(std::move(samples), rec.sample_rate());
}

MultichannelRecording matched_filter(const MultichannelRecording& rec, std::span<const double> emitted) {
  if (emitted.empty()) throw InvalidArgument("emitted signal is empty");
  if (emitted.size() > rec.length()) throw InvalidArgument("emitted signal is longer than the recording");
  double energy = 0.0;
  for (double v : emitted) energy += v * v;
  if (!(energy > 0.0)) throw InvalidArgument("emitted signal has zero energy");

  const std::size_t total = rec.length();
  const std::size_t len = emitted.size();
  Matrix out(rec.channels(), total);
  for (std::size_t c = 0; c < rec.channels(); ++c) {
    const auto x = rec.channel(c);
    auto y = out.row(c);
    for (std::size_t k = 0; k < total; ++k) {
      const std::size_t n = std::min(len, total - k);
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += x[k + j] * emitted[j];
      y[k] = acc / energy;
    }
  }
  return MultichannelRecording(std::move(out), rec.sample_rate());
}

namespace {

constexpr double kEnvelopeStopbandDb = 70.0;

}  // namespace

EnvelopeDetector::EnvelopeDetector(double cutoff, double sample_rate) {
  if (!(sample_rate > 0.0)) throw InvalidArgument("sample rate must be positive");
  if (!(cutoff > 0.0 && cutoff < sample_rate / 2.0)) throw InvalidArgument("envelope cutoff must be in (0, sample_rate/2)");
  // Transition band centred on the cutoff: [0, 2*fc], narrowed near Nyquist.
  const double transition = std::min(2.0 * cutoff, 2.0 * (sample_rate / 2.0 - cutoff));
  const double dw = 2.0 * kPi * transition / sample_rate;
  const double beta = 0.1102 * (kEnvelopeStopbandDb - 8.7);
  auto length = static_cast<std::size_t>(std::ceil((kEnvelopeStopbandDb - 7.95) / (2.285 * dw))) + 1;
  if (length % 2 == 0) ++length;
  const auto half = static_cast<long>(length / 2);
  const double fc = cutoff / sample_rate;

  taps_.resize(length);
  for (long k = -half; k <= half; ++k) {
    const double ideal = 2.0 * fc * sinc(2.0 * fc * static_cast<double>(k));
    taps_[static_cast<std::size_t>(k + half)] =
        ideal * kaiser_window(static_cast<double>(k), static_cast<double>(half) + 1.0, beta);
  }
  const double sum = std::accumulate(taps_.begin(), taps_.end(), 0.0);
  for (double& v : taps_) v /= sum;
}

void EnvelopeDetector::apply(std::span<const double> in, std::span<double> out) const {
  if (out.size() != in.size()) throw InvalidArgument("envelope output length must match input");
  apply(in, 0, out);
}

void EnvelopeDetector::apply(std::span<const double> in, std::size_t first, std::span<double> out) const {
  if (out.empty()) return;
  if (first + out.size() > in.size()) throw InvalidArgument("envelope window exceeds the input");
  const std::size_t half = taps_.size() / 2;
  const std::size_t n = in.size();
  const std::size_t count = out.size();
  // padded[k] = |in[first + k - half]| with edge samples replicated.
  std::vector<double> padded(count + 2 * half);
  for (std::size_t k = 0; k < padded.size(); ++k) {
    const long src = static_cast<long>(first + k) - static_cast<long>(half);
    padded[k] = std::abs(in[static_cast<std::size_t>(std::clamp(src, 0L, static_cast<long>(n) - 1))]);
  }
  const std::size_t len = taps_.size();
  const double* h = taps_.data();
  std::size_t k = 0;
  // Four outputs at a time; each still sums its taps in order.
  for (; k + 4 <= count; k += 4) {
    const double* p = padded.data() + k;
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    for (std::size_t j = 0; j < len; ++j) {
      a0 += h[j] * p[j];
      a1 += h[j] * p[j + 1];
      a2 += h[j] * p[j + 2];
      a3 += h[j] * p[j + 3];
    }
    out[k] = a0 > 0.0 ? a0 : 0.0;
    out[k + 1] = a1 > 0.0 ? a1 : 0.0;
    out[k + 2] = a2 > 0.0 ? a2 : 0.0;
    out[k + 3] = a3 > 0.0 ? a3 : 0.0;
  }
  for (; k < count; ++k) {
    const double* p = padded.data() + k;
    double acc = 0.0;
    for (std::size_t j = 0; j < len; ++j) acc += h[j] * p[j];
    out[k] = acc > 0.0 ? acc : 0.0;
  }
}

Signal EnvelopeDetector::apply(std::span<const double> in) const {
  Signal out(in.size());
  apply(in, out);
  return out;
}

Signal envelope_detect(std::span<const double> x, double cutoff, double sample_rate) {
  return EnvelopeDetector(cutoff, sample_rate).apply(x);
}

}  // namespace airbeam
