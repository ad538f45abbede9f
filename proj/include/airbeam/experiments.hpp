#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "airbeam/config.hpp"
#include "airbeam/io.hpp"
#include "airbeam/metrics.hpp"

namespace airbeam {

/// Resolved, validated experiment parameters. Angles are in degrees and
/// lengths in metres, as in the configuration file.
struct ExperimentConfig {
  std::string array_kind;  // spiral | hex | csv
  std::size_t array_count = 0;
  double array_radius = 0.0;
  double array_edge = 0.0;
  std::string array_file;

  PipelineParams pipeline;
  std::vector<BeamformerSpec> beamformers;
  std::uint64_t seed = 0;
  double db_floor = 0.0;

  struct Psf {
    double range, azimuth, elevation;
    double az_min, az_max, az_step, el_min, el_max, el_step;
  } psf{};

  struct Snr {
    std::vector<double> levels;
    std::size_t seeds;
    double range, window_min, window_max;
    double scan_half_width, scan_step;
    double guard_lobes;
  } snr{};

  struct Resolution {
    double range;
    std::vector<double> half_angles;
    double scan_half_width, scan_step;
  } resolution{};

  struct Beamwidth {
    std::vector<double> radii;
    double edge, range, scan_half_width, scan_step;
  } beamwidth{};

  struct BeamformFile {
    std::string input, geometry;
    double az_min, az_max, az_step, elevation;
    double range_min, range_max;  // 0, 0 = whole recording
  } beamform_file{};

  struct Bench {
    std::vector<double> mics;
    std::vector<double> directions;
    std::size_t repetitions, warmup, pixels, samples;
  } bench{};
};

/// Every configuration key with its default and help text.
Settings experiment_settings();

/// Validates every value before any computation starts. `full` switches the
/// horizontal scans to 0.05 degree steps and the PSF grid to 0.5 degrees.
ExperimentConfig resolve_config(const Settings& settings, bool full = false);

MicrophoneArray build_array(const ExperimentConfig& config);

struct PsfSummaryRow {
  BeamformerSpec spec;
  DynamicRange range;
  double beamwidth_deg = 0.0;
  double range_width_s = 0.0;
};

/// Directional PSF per beamformer: psf_<label>.pgm (elevation rows, azimuth
/// columns) and psf_summary.csv.
std::vector<PsfSummaryRow> run_psf(const ExperimentConfig& config, const std::filesystem::path& out);

struct SnrRow {
  BeamformerSpec spec;
  double snr_mic_db = 0.0;
  std::size_t seed_index = 0;
  double snr_image_db = 0.0;
};

/// image_snr.csv (one row per level, beamformer and seed) and
/// image_snr_mean.csv (averaged over seeds).
std::vector<SnrRow> run_image_snr(const ExperimentConfig& config, const std::filesystem::path& out);

/// resolution_profiles.csv and resolution_summary.csv.
ResolutionResult run_resolution(const ExperimentConfig& config, const std::filesystem::path& out);

struct BeamwidthRow {
  double radius = 0.0;
  std::size_t mic_count = 0;
  BeamformerSpec spec;
  double beamwidth_deg = 0.0;
};

/// beamwidth.csv over the configured hexagonal array radii.
std::vector<BeamwidthRow> run_beamwidth_sweep(const ExperimentConfig& config, const std::filesystem::path& out);

/// Images a recorded file: image_<label>.pgm (directions x time) and peaks.csv.
std::vector<AcousticImage> run_beamform_file(const ExperimentConfig& config, const std::filesystem::path& out);

struct BenchRow {
  std::string measurement;  // "pixel_dmas5" (per pixel) or "image_dmas5" (whole image)
  double parameter = 0.0;   // microphones or directions
  double median_seconds = 0.0;
};

/// Median wall time of `repetitions` runs after `warmup` runs: per-pixel DMAS5
/// versus channel count and whole-image DMAS5 versus direction count.
std::vector<BenchRow> run_bench(const ExperimentConfig& config, const std::filesystem::path& out);

}  // namespace airbeam
