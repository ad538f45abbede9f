#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "airbeam/array.hpp"
#include "airbeam/matrix.hpp"
#include "airbeam/signals.hpp"

namespace airbeam {

enum class BeamformerKind { Das, Dmas };

inline constexpr double kDefaultCfEpsilon = 1e-30;

struct BeamformerSpec {
  BeamformerKind kind = BeamformerKind::Das;
  int order = 1;  // DMAS order n >= 2; 1 for DAS
  bool apply_cf = false;
  double cf_epsilon = kDefaultCfEpsilon;

  static BeamformerSpec das(bool cf = false) { return {BeamformerKind::Das, 1, cf, kDefaultCfEpsilon}; }
  static BeamformerSpec dmas(int order, bool cf = false) { return {BeamformerKind::Dmas, order, cf, kDefaultCfEpsilon}; }
  /// Accepts "das", "dmas3", "DMAS5-CF", ... (case-insensitive).
  static BeamformerSpec parse(const std::string& label);

  void validate() const;
  /// "DAS", "DAS-CF", "DMAS2", "DMAS2-CF", ...
  std::string label() const;

  friend bool operator==(const BeamformerSpec&, const BeamformerSpec&) = default;
};

/// DAS plus DMAS2..DMAS5, each without and with coherence-factor weighting.
std::vector<BeamformerSpec> standard_beamformers();

enum class Interpolation { Linear, WindowedSinc };

/// sgn(x) * |x|^(1/n), sgn(0) = 0.
double signed_root(double x, int n);

double das(std::span<const double> slice) noexcept;

/// P_k = sum_i (signed_root(x_i, n))^k for k = 1..n, written to out[k-1].
void power_sums(std::span<const double> slice, int n, std::span<double> out);
std::vector<double> power_sums(std::span<const double> slice, int n);

/// E_n from power sums P_1..P_n via the pre-expanded Newton-Girard formulas (n in [2, 5]).
double dmas_from_power_sums(std::span<const double> p, int n);

/// DMAS of order n in [2, 5] through power sums; O(N).
double dmas_fast(std::span<const double> slice, int n);

/// Newton-Girard expansion of E_n as a list of monomials in the power sums,
/// one per integer partition of n:
///   E_n = sum over k_1 + 2 k_2 + ... + n k_n = n of
///         (-1)^(n - sum k_i) * prod_i P_i^(k_i) / (k_i! * i^(k_i)).
class NewtonGirardExpansion {
 public:
  struct Term {
    double coefficient;
    std::vector<int> exponents;  // exponents[i-1] = k_i
  };

  explicit NewtonGirardExpansion(int order);

  /// Cached per order; safe to call concurrently.
  static const NewtonGirardExpansion& for_order(int order);

  int order() const noexcept { return order_; }
  std::span<const Term> terms() const noexcept { return terms_; }
  double evaluate(std::span<const double> p) const;

 private:
  int order_;
  std::vector<Term> terms_;
  // Flattened (coefficient, factor list) for the branch-free inner loop.
  std::vector<double> coefficients_;
  std::vector<int> factor_offsets_;
  std::vector<int> factors_;  // power-sum indices (0-based), repeated per exponent
};

/// DMAS of any order n >= 2 through the general partition formula; O(N + p(n)).
double dmas_general(std::span<const double> slice, int n);

/// Definitional sum over all n-subsets of the signed roots. Test oracle only;
/// refuses more than 1e7 subsets.
double dmas_brute_force(std::span<const double> slice, int n);

/// (sum x)^2 / (N * sum x^2 + epsilon); an all-zero slice yields 0.
double coherence_factor(std::span<const double> slice, double epsilon = kDefaultCfEpsilon);

/// Applies one beamformer to a pre-steered slice.
double beamform_pixel(std::span<const double> slice, const BeamformerSpec& spec);

/// x_i = m_i(t + tau_i) with out-of-range reads treated as zero.
std::vector<double> pre_steer(const MultichannelRecording& rec, const DelayTable& delays, std::size_t direction,
                              std::size_t t_index, Interpolation interpolation = Interpolation::Linear);

/// Direction x time map. Column c corresponds to recording sample start_sample + c.
class AcousticImage {
 public:
  AcousticImage(Matrix pixels, DirectionGrid directions, double sample_rate, std::size_t start_sample);

  const Matrix& pixels() const noexcept { return pixels_; }
  Matrix& pixels() noexcept { return pixels_; }
  const DirectionGrid& directions() const noexcept { return directions_; }
  double sample_rate() const noexcept { return sample_rate_; }
  std::size_t start_sample() const noexcept { return start_sample_; }
  std::size_t direction_count() const noexcept { return pixels_.rows(); }
  std::size_t time_count() const noexcept { return pixels_.cols(); }

  double time_of(std::size_t column) const noexcept {
    return static_cast<double>(start_sample_ + column) / sample_rate_;
  }
  /// Pulse-echo range r = c t / 2.
  double range_of(std::size_t column, double sound_speed = kDefaultSoundSpeed) const noexcept {
    return sound_speed * time_of(column) / 2.0;
  }

 private:
  Matrix pixels_;
  DirectionGrid directions_;
  double sample_rate_;
  std::size_t start_sample_;
};

struct BeamformOptions {
  std::size_t time_begin = 0;
  std::size_t time_end = std::numeric_limits<std::size_t>::max();  // clipped to the recording
  Interpolation interpolation = Interpolation::Linear;
  unsigned threads = 0;  // 0 = hardware concurrency
};

/// Beamforms every (direction, time) pixel with one shared pre-steering pass
/// for all requested specs. Directions are processed in parallel chunks; the
/// result does not depend on the thread count.
std::vector<AcousticImage> beamform_images(const MultichannelRecording& rec, const DelayTable& delays,
                                           std::span<const BeamformerSpec> specs, const BeamformOptions& options = {});

AcousticImage beamform_image(const MultichannelRecording& rec, const DelayTable& delays, const BeamformerSpec& spec,
                             const BeamformOptions& options = {});

}  // namespace airbeam
