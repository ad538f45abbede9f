#include "airbeam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "airbeam/errors.hpp"
#include "airbeam/parallel.hpp"

namespace airbeam {

void PipelineParams::validate() const {
  chirp.validate();
  if (!(sound_speed > 0.0)) throw InvalidArgument("sound speed must be positive");
  if (!(envelope_cutoff > 0.0 && envelope_cutoff < chirp.sample_rate / 2.0))
    throw InvalidArgument("envelope cutoff must be in (0, sample_rate/2)");
}

std::vector<AcousticImage> image_pipeline(const MultichannelRecording& raw, std::span<const double> emitted,
                                          const DelayTable& delays, std::span<const BeamformerSpec> specs,
                                          const PipelineParams& params, std::size_t t_begin, std::size_t t_end) {
  if (t_end > raw.length()) t_end = raw.length();
  if (t_begin >= t_end) throw InvalidArgument("empty image window");
  const EnvelopeDetector envelope(params.envelope_cutoff, raw.sample_rate());
  const std::size_t half = envelope.taps().size() / 2;
  const auto filtered = matched_filter(raw, emitted);

  BeamformOptions options;
  options.time_begin = t_begin >= half ? t_begin - half : 0;
  options.time_end = std::min(t_end + half, raw.length());
  options.interpolation = params.interpolation;
  options.threads = params.threads;
  auto beamformed = beamform_images(filtered, delays, specs, options);

  const std::size_t width = t_end - t_begin;
  const std::size_t offset = t_begin - options.time_begin;
  std::vector<AcousticImage> out;
  out.reserve(beamformed.size());
  for (const auto& image : beamformed) {
    Matrix env(image.direction_count(), width);
    parallel_for(image.direction_count(), params.threads, 16, [&](std::size_t begin, std::size_t end) {
      for (std::size_t d = begin; d < end; ++d) envelope.apply(image.pixels().row(d), offset, env.row(d));
    });
    out.emplace_back(std::move(env), image.directions(), image.sample_rate(), t_begin);
  }
  return out;
}

std::size_t range_to_sample(double range, const PipelineParams& params) noexcept {
  return static_cast<std::size_t>(std::llround(2.0 * range / params.sound_speed * params.sample_rate()));
}

std::size_t scene_length(const MicrophoneArray& array, std::span<const Reflector> reflectors,
                         const PipelineParams& params, std::size_t margin) {
  const double transit = array.aperture_diameter() / params.sound_speed * params.sample_rate();
  std::size_t latest = 0;
  for (const auto& r : reflectors) {
    const double start = 2.0 * r.range / params.sound_speed * params.sample_rate() + transit;
    latest = std::max(latest, static_cast<std::size_t>(std::ceil(start)) + 1);
  }
  return latest + params.chirp.sample_count() + margin;
}

Matrix to_db(const Matrix& linear) {
  double peak = 0.0;
  for (double v : linear.data()) peak = std::max(peak, std::abs(v));
  Matrix out(linear.rows(), linear.cols(), kDbFloor);
  if (peak == 0.0) return out;
  auto dst = out.data();
  auto src = linear.data();
  for (std::size_t k = 0; k < src.size(); ++k) {
    const double a = std::abs(src[k]);
    dst[k] = a > 0.0 ? std::max(kDbFloor, 20.0 * std::log10(a / peak)) : kDbFloor;
  }
  return out;
}

std::vector<double> PsfResult::directional_db() const {
  std::vector<double> out(image.direction_count(), kDbFloor);
  for (std::size_t d = 0; d < image.direction_count(); ++d) {
    const auto row = image.pixels().row(d);
    out[d] = *std::max_element(row.begin(), row.end());
  }
  return out;
}

std::vector<PsfResult> compute_psf_set(const MicrophoneArray& array, const DirectionGrid& grid,
                                       std::span<const BeamformerSpec> specs, const Reflector& source,
                                       const PipelineParams& params, const PsfOptions& options) {
  params.validate();
  const auto emitted = generate_chirp(params.chirp);
  const double fs = params.sample_rate();
  const double bandwidth =
      std::max(std::abs(params.chirp.f_end - params.chirp.f_start), 1.0 / params.chirp.duration);
  std::size_t half_window = options.half_window;
  if (half_window == 0) {
    half_window = static_cast<std::size_t>(std::ceil(array.aperture_diameter() / params.sound_speed * fs)) +
                  static_cast<std::size_t>(std::ceil(2.0 * fs / bandwidth));
  }
  const std::size_t echo = range_to_sample(source.range, params);
  if (echo < half_window) throw InvalidArgument("source is too close for the PSF window");
  const std::size_t half_env = EnvelopeDetector(params.envelope_cutoff, fs).taps().size() / 2;

  const Reflector reflectors[] = {source};
  const std::size_t length =
      std::max(scene_length(array, reflectors, params, 64), echo + half_window + half_env + 2);
  EchoOptions echo_options{params.sound_speed, params.spherical_spreading};
  const auto raw = synthesize_echoes(array, emitted, fs, reflectors, length, echo_options);
  const auto delays = far_field_delays(array, grid, params.sound_speed);
  auto images = image_pipeline(raw, emitted, delays, specs, params, echo - half_window, echo + half_window + 1);

  std::vector<PsfResult> out;
  out.reserve(images.size());
  for (std::size_t s = 0; s < images.size(); ++s) {
    const auto& linear = images[s].pixels();
    std::size_t best = 0;
    auto data = linear.data();
    for (std::size_t k = 1; k < data.size(); ++k)
      if (data[k] > data[best]) best = k;
    if (!(data[best] > 0.0)) throw NumericError("PSF image is identically zero for " + specs[s].label());
    AcousticImage db(to_db(linear), images[s].directions(), images[s].sample_rate(), images[s].start_sample());
    out.push_back({specs[s], std::move(db), best / linear.cols(), best % linear.cols()});
  }
  return out;
}

PsfResult compute_psf(const MicrophoneArray& array, const DirectionGrid& grid, const BeamformerSpec& spec,
                      const Reflector& source, const PipelineParams& params, const PsfOptions& options) {
  auto set = compute_psf_set(array, grid, std::span<const BeamformerSpec>(&spec, 1), source, params, options);
  return std::move(set.front());
}

double lobe_width_3db(std::span<const double> level_db, std::span<const double> axis, std::size_t peak) {
  if (level_db.size() != axis.size() || peak >= level_db.size()) throw InvalidArgument("bad lobe profile");
  const double threshold = level_db[peak] - 3.0;
  auto crossing = [&](std::size_t inside, std::size_t outside) {
    const double t = (threshold - level_db[outside]) / (level_db[inside] - level_db[outside]);
    return axis[outside] + t * (axis[inside] - axis[outside]);
  };
  std::size_t left = peak;
  while (left > 0 && level_db[left - 1] >= threshold) --left;
  if (left == 0) throw NumericError("main lobe clipped by the scan edge");
  std::size_t right = peak;
  while (right + 1 < level_db.size() && level_db[right + 1] >= threshold) ++right;
  if (right + 1 == level_db.size()) throw NumericError("main lobe clipped by the scan edge");
  return crossing(right, right + 1) - crossing(left, left - 1);
}

double beamwidth_3db(const PsfResult& psf) {
  const auto& grid = psf.image.directions();
  const double elevation = grid[psf.peak_direction].elevation;
  std::vector<std::size_t> members;
  for (std::size_t d = 0; d < grid.size(); ++d)
    if (std::abs(grid[d].elevation - elevation) < 1e-9) members.push_back(d);
  std::sort(members.begin(), members.end(),
            [&](std::size_t a, std::size_t b) { return grid[a].azimuth < grid[b].azimuth; });
  std::vector<double> level(members.size());
  std::vector<double> axis(members.size());
  std::size_t peak = 0;
  for (std::size_t k = 0; k < members.size(); ++k) {
    level[k] = psf.image.pixels()(members[k], psf.peak_column);
    axis[k] = rad_to_deg(grid[members[k]].azimuth);
    if (members[k] == psf.peak_direction) peak = k;
  }
  return lobe_width_3db(level, axis, peak);
}

double range_width_3db(const PsfResult& psf) {
  const auto row = psf.image.pixels().row(psf.peak_direction);
  std::vector<double> axis(row.size());
  for (std::size_t c = 0; c < row.size(); ++c) axis[c] = psf.image.time_of(c);
  return lobe_width_3db(row, axis, psf.peak_column);
}

DynamicRange dynamic_range(std::span<const double> map_db, const DirectionGrid& grid) {
  if (map_db.size() != grid.size()) throw InvalidArgument("map size must match the grid");
  const auto peak = static_cast<std::size_t>(std::max_element(map_db.begin(), map_db.end()) - map_db.begin());
  std::vector<char> main(map_db.size(), 0);
  std::deque<std::size_t> queue{peak};
  main[peak] = 1;
  std::size_t count = 1;
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    for (std::size_t v : grid.neighbours(u)) {
      if (main[v] || map_db[v] > map_db[u]) continue;
      main[v] = 1;
      ++count;
      queue.push_back(v);
    }
  }
  DynamicRange out;
  out.main_lobe_size = count;
  double sidelobe = kDbFloor;
  for (std::size_t k = 0; k < map_db.size(); ++k)
    if (!main[k]) sidelobe = std::max(sidelobe, map_db[k]);
  out.peak_sidelobe_db = sidelobe;
  out.dynamic_range_db = map_db[peak] - sidelobe;
  return out;
}

DynamicRange dynamic_range(const PsfResult& psf) {
  return dynamic_range(psf.directional_db(), psf.image.directions());
}

ImageSnrReport image_snr(const AcousticImage& image, std::size_t target_direction, std::size_t target_column,
                         const ImageSnrGuard& guard, std::string label) {
  if (target_direction >= image.direction_count() || target_column >= image.time_count())
    throw InvalidArgument("image SNR target outside the image");
  const auto& pixels = image.pixels();
  double peak = 0.0;
  for (double v : pixels.data()) peak = std::max(peak, std::abs(v));
  if (!(peak > 0.0)) throw NumericError("image is identically zero");

  const Vec3 target = image.directions()[target_direction].unit_vector();
  const double cos_guard = std::cos(guard.direction_half_width);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t d = 0; d < image.direction_count(); ++d) {
    const bool near_direction = dot(image.directions()[d].unit_vector(), target) >= cos_guard;
    const auto row = pixels.row(d);
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::size_t gap = c > target_column ? c - target_column : target_column - c;
      if (near_direction && gap <= guard.range_half_width) continue;
      sum += std::abs(row[c]) / peak;
      ++count;
    }
  }
  if (count == 0) throw InvalidArgument("image SNR off-target region is empty");

  ImageSnrReport report;
  report.label = std::move(label);
  report.guard = guard;
  report.off_target_count = count;
  const double e_off = sum / static_cast<double>(count);
  if (e_off > 0.0) {
    report.snr_db = std::min(kSnrCapDb, 20.0 * std::log10(1.0 / e_off));
    report.capped = report.snr_db >= kSnrCapDb;
  } else {
    report.snr_db = kSnrCapDb;
    report.capped = true;
  }
  return report;
}

bool two_peaks_resolved(std::span<const double> level_db, double dip_db) {
  const std::size_t n = level_db.size();
  if (n < 3) return false;
  const auto peak = static_cast<std::size_t>(std::max_element(level_db.begin(), level_db.end()) - level_db.begin());
  const double top = level_db[peak];
  // Walk outwards from the maximum, tracking the lowest level passed so far.
  auto scan = [&](long step) {
    double valley = std::numeric_limits<double>::infinity();
    for (long k = static_cast<long>(peak) + step; k >= 0 && k < static_cast<long>(n); k += step) {
      const double v = level_db[static_cast<std::size_t>(k)];
      if (v >= top - dip_db && valley <= v - dip_db) return true;
      valley = std::min(valley, v);
    }
    return false;
  };
  return scan(-1) || scan(1);
}

double minimal_resolvable_half_angle(std::span<const double> half_angles, const std::vector<bool>& resolved) {
  if (half_angles.size() != resolved.size()) throw InvalidArgument("half-angle and resolved flags differ in length");
  double best = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = half_angles.size(); k-- > 0;) {
    if (!resolved[k]) break;
    best = half_angles[k];
  }
  return best;
}

ResolutionResult resolution_sweep(const MicrophoneArray& array, std::span<const BeamformerSpec> specs,
                                  const ResolutionParams& resolution, const PipelineParams& params) {
  params.validate();
  if (resolution.half_angles.empty()) throw InvalidArgument("resolution sweep needs half-angles");
  for (double a : resolution.half_angles)
    if (a < 0.0 || a > resolution.scan_half_width) throw InvalidArgument("half-angle outside the scan");

  const auto emitted = generate_chirp(params.chirp);
  const auto grid = azimuth_scan_grid(-resolution.scan_half_width, resolution.scan_half_width, resolution.scan_step, 0.0);
  const auto delays = far_field_delays(array, grid, params.sound_speed);
  const std::size_t column = range_to_sample(resolution.range, params);
  const EchoOptions echo_options{params.sound_speed, params.spherical_spreading};

  std::vector<std::vector<AngularProfile>> per_spec(specs.size());
  for (double a : resolution.half_angles) {
    const Reflector pair[] = {{resolution.range, Direction{a, 0.0}, 1.0}, {resolution.range, Direction{-a, 0.0}, 1.0}};
    const std::size_t length = scene_length(array, pair, params, 512);
    const auto raw = synthesize_echoes(array, emitted, params.sample_rate(), pair, length, echo_options);
    const auto images = image_pipeline(raw, emitted, delays, specs, params, column, column + 1);
    for (std::size_t s = 0; s < specs.size(); ++s) {
      AngularProfile profile;
      profile.spec = specs[s];
      profile.half_angle = a;
      Matrix slice(grid.size(), 1);
      for (std::size_t d = 0; d < grid.size(); ++d) {
        slice(d, 0) = images[s].pixels()(d, 0);
        profile.azimuth.push_back(grid[d].azimuth);
      }
      const Matrix db = to_db(slice);
      profile.level_db.assign(db.data().begin(), db.data().end());
      profile.resolved = two_peaks_resolved(profile.level_db);
      per_spec[s].push_back(std::move(profile));
    }
  }

  ResolutionResult result;
  for (auto& profiles : per_spec) {
    std::vector<bool> flags;
    for (const auto& p : profiles) flags.push_back(p.resolved);
    result.minimal_resolvable.push_back(minimal_resolvable_half_angle(resolution.half_angles, flags));
    for (auto& p : profiles) result.profiles.push_back(std::move(p));
  }
  return result;
}

}  // namespace airbeam
