#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "airbeam/array.hpp"
#include "airbeam/beamform.hpp"
#include "airbeam/signals.hpp"

namespace airbeam {

inline constexpr double kDbFloor = -300.0;
inline constexpr double kSnrCapDb = 300.0;

/// Shared settings for the matched filter -> beamform -> envelope chain.
struct PipelineParams {
  double sound_speed = kDefaultSoundSpeed;
  ChirpSpec chirp;
  double envelope_cutoff = 5e3;
  bool spherical_spreading = false;
  Interpolation interpolation = Interpolation::Linear;
  unsigned threads = 0;

  double sample_rate() const noexcept { return chirp.sample_rate; }
  void validate() const;
};

/// Runs matched filtering, beamforming and envelope detection, returning the
/// envelope images for columns [t_begin, t_end). The beamformer is evaluated on
/// a window widened by the envelope filter's half-length so the crop is exact.
std::vector<AcousticImage> image_pipeline(const MultichannelRecording& raw, std::span<const double> emitted,
                                          const DelayTable& delays, std::span<const BeamformerSpec> specs,
                                          const PipelineParams& params, std::size_t t_begin, std::size_t t_end);

/// Samples needed so every echo of every reflector fits, plus a margin.
std::size_t scene_length(const MicrophoneArray& array, std::span<const Reflector> reflectors,
                         const PipelineParams& params, std::size_t margin);

/// Sample index of the echo from `range` (pulse-echo, r = c t / 2).
std::size_t range_to_sample(double range, const PipelineParams& params) noexcept;

/// 20 log10(v / peak) clamped at kDbFloor; pixels are taken in magnitude.
Matrix to_db(const Matrix& linear);

struct PsfResult {
  BeamformerSpec spec;
  AcousticImage image;  // dB, peak = 0
  std::size_t peak_direction = 0;
  std::size_t peak_column = 0;

  /// Per-direction maximum over time, in dB.
  std::vector<double> directional_db() const;
};

struct PsfOptions {
  /// Half-width (samples) of the evaluated time window around the echo; 0 picks
  /// aperture transit time plus two compressed-pulse widths.
  std::size_t half_window = 0;
};

/// Noise-free single-reflector PSF for several beamformers sharing one simulation.
std::vector<PsfResult> compute_psf_set(const MicrophoneArray& array, const DirectionGrid& grid,
                                       std::span<const BeamformerSpec> specs, const Reflector& source,
                                       const PipelineParams& params, const PsfOptions& options = {});

PsfResult compute_psf(const MicrophoneArray& array, const DirectionGrid& grid, const BeamformerSpec& spec,
                      const Reflector& source, const PipelineParams& params, const PsfOptions& options = {});

/// Width of the lobe around `peak` at -3 dB relative to it, with linear
/// interpolation of the crossing. Throws NumericError when the lobe reaches an end.
double lobe_width_3db(std::span<const double> level_db, std::span<const double> axis, std::size_t peak);

/// -3 dB azimuth width (degrees) of the direction slice through the PSF peak.
double beamwidth_3db(const PsfResult& psf);

/// -3 dB width (seconds) of the time slice through the PSF peak.
double range_width_3db(const PsfResult& psf);

struct DynamicRange {
  double peak_sidelobe_db = kDbFloor;
  double dynamic_range_db = -kDbFloor;
  std::size_t main_lobe_size = 0;
};

/// Main lobe = every direction reachable from the peak by steps that never go
/// up (flood fill down the peak's slopes); the peak sidelobe is the highest
/// level outside it.
DynamicRange dynamic_range(std::span<const double> map_db, const DirectionGrid& grid);
DynamicRange dynamic_range(const PsfResult& psf);

struct ImageSnrGuard {
  double direction_half_width = 0.0;  // radians, great-circle distance
  std::size_t range_half_width = 0;   // samples
};

struct ImageSnrReport {
  std::string label;
  double snr_db = 0.0;
  bool capped = false;
  std::size_t off_target_count = 0;
  ImageSnrGuard guard;
};

/// Normalizes the magnitude image to max 1, averages it over the pixels outside
/// the guard region around (target_direction, target_column) and returns
/// 20 log10(1 / E_off). E_off = 0 reports kSnrCapDb with `capped` set.
ImageSnrReport image_snr(const AcousticImage& image, std::size_t target_direction, std::size_t target_column,
                         const ImageSnrGuard& guard, std::string label = {});

/// Some sample within `dip_db` of the profile maximum is separated from the
/// maximum by a minimum lying at least `dip_db` below that sample.
bool two_peaks_resolved(std::span<const double> level_db, double dip_db = 3.0);

struct ResolutionParams {
  double range = 1.5;                // m
  std::vector<double> half_angles;   // radians, ascending
  double scan_half_width = deg_to_rad(30.0);
  double scan_step = deg_to_rad(0.25);
};

struct AngularProfile {
  BeamformerSpec spec;
  double half_angle = 0.0;
  std::vector<double> azimuth;   // radians
  std::vector<double> level_db;  // normalized to the profile maximum
  bool resolved = false;
};

struct ResolutionResult {
  std::vector<AngularProfile> profiles;           // spec-major, then half-angle
  std::vector<double> minimal_resolvable;         // per spec, radians; NaN when never resolved
};

/// Two equal reflectors at (range, +/-a) for each half-angle a; horizontal-plane
/// angular profile at the reflector range for each beamformer.
ResolutionResult resolution_sweep(const MicrophoneArray& array, std::span<const BeamformerSpec> specs,
                                  const ResolutionParams& resolution, const PipelineParams& params);

/// Smallest half-angle from which every larger one in the sweep is resolved.
double minimal_resolvable_half_angle(std::span<const double> half_angles, const std::vector<bool>& resolved);

}  // namespace airbeam
