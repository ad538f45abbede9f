#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "airbeam/array.hpp"
#include "airbeam/matrix.hpp"

namespace airbeam {

using Signal = std::vector<double>;

/// N x T sample matrix (channel-major) plus its sample rate.
class MultichannelRecording {
 public:
  MultichannelRecording(Matrix samples, double sample_rate);

  std::size_t channels() const noexcept { return samples_.rows(); }
  std::size_t length() const noexcept { return samples_.cols(); }
  double sample_rate() const noexcept { return sample_rate_; }

  std::span<const double> channel(std::size_t i) const noexcept { return samples_.row(i); }
  std::span<double> channel(std::size_t i) noexcept { return samples_.row(i); }
  const Matrix& samples() const noexcept { return samples_; }

 private:
  Matrix samples_;
  double sample_rate_;
};

struct ChirpSpec {
  double f_start = 25e3;
  double f_end = 50e3;
  double duration = 2.5e-3;
  double sample_rate = 450e3;
  double amplitude = 1.0;
  /// Fraction of the duration tapered by a raised-cosine ramp at each end; 0 = rectangular.
  double taper_fraction = 0.0;

  void validate() const;
  std::size_t sample_count() const;
};

/// Linear FM sweep from f_start to f_end.
Signal generate_chirp(const ChirpSpec& spec);

struct Reflector {
  double range = 1.0;  // m
  Direction direction;
  double reflectivity = 1.0;
};

struct EchoOptions {
  double sound_speed = kDefaultSoundSpeed;
  /// Scale each echo by 1/range (spherical spreading).
  bool spherical_spreading = false;
};

/// Pulse-echo scene: channel i receives every reflector's copy of `emitted`
/// delayed by 2*range/c + tau_i, tau_i being the far-field delay toward the
/// reflector (reference at the array centroid). Fractional delays use a
/// 64-tap Kaiser-windowed sinc.
MultichannelRecording synthesize_echoes(const MicrophoneArray& array, std::span<const double> emitted,
                                        double sample_rate, std::span<const Reflector> reflectors,
                                        std::size_t n_samples, const EchoOptions& options = {});

/// eta = 10^(-snr_db / 20).
double noise_scale(double snr_db) noexcept;

/// rec + eta * n with n i.i.d. standard normal; deterministic for a given seed.
MultichannelRecording add_noise(const MultichannelRecording& rec, double snr_db, std::uint64_t seed);

/// Per-channel cross-correlation with `emitted`, normalized by its energy.
/// A unit copy of `emitted` starting at sample k peaks at output sample k with value 1.
MultichannelRecording matched_filter(const MultichannelRecording& rec, std::span<const double> emitted);

/// Rectifier plus zero-phase Kaiser-windowed-sinc low-pass (>= 60 dB stopband).
/// Edges are extended by replication; the output is clamped at 0.
class EnvelopeDetector {
 public:
  EnvelopeDetector(double cutoff, double sample_rate);

  std::span<const double> taps() const noexcept { return taps_; }
  void apply(std::span<const double> in, std::span<double> out) const;
  Signal apply(std::span<const double> in) const;
  /// Envelope samples [first, first + out.size()) of `in`.
  void apply(std::span<const double> in, std::size_t first, std::span<double> out) const;

 private:
  std::vector<double> taps_;
};

Signal envelope_detect(std::span<const double> x, double cutoff, double sample_rate);

/// Kaiser window of length `length` evaluated at offset t from its centre (|t| <= half-length).
double kaiser_window(double t, double half_length, double beta) noexcept;

/// 64 sinc-interpolation taps for reading a signal at (k + frac) for frac in [0, 1):
/// value = sum_m taps[m] * x[k - 31 + m].
std::vector<double> fractional_delay_taps(double frac);
inline constexpr int kFractionalDelayTaps = 64;

}  // namespace airbeam
