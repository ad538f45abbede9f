#include "airbeam/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "airbeam/errors.hpp"

namespace airbeam {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<CsvCell> spec_cells(const BeamformerSpec& spec) {
  const std::string base = spec.kind == BeamformerKind::Das ? "DAS" : "DMAS" + std::to_string(spec.order);
  return {base, static_cast<std::int64_t>(spec.apply_cf), static_cast<std::int64_t>(spec.order)};
}

std::vector<std::string> spec_header(std::vector<std::string> rest) {
  std::vector<std::string> header{"beamformer", "cf", "order"};
  header.insert(header.end(), rest.begin(), rest.end());
  return header;
}

std::vector<CsvCell> row_of(const BeamformerSpec& spec, std::initializer_list<CsvCell> rest) {
  auto row = spec_cells(spec);
  row.insert(row.end(), rest.begin(), rest.end());
  return row;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

std::size_t to_count(double value, const std::string& key) {
  require(value >= 1.0 && value == std::floor(value) && value < 1e9, "'" + key + "' must be a positive integer");
  return static_cast<std::size_t>(value);
}

std::size_t nearest_direction(const DirectionGrid& grid, Direction target) {
  const Vec3 u = target.unit_vector();
  std::size_t best = 0;
  double best_dot = -2.0;
  for (std::size_t d = 0; d < grid.size(); ++d) {
    const double c = dot(grid[d].unit_vector(), u);
    if (c > best_dot) {
      best_dot = c;
      best = d;
    }
  }
  return best;
}

void prepare(const std::filesystem::path& out) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

Settings experiment_settings() {
  Settings s;
  s.declare("array.kind", "spiral", "microphone layout: spiral, hex or csv");
  s.declare("array.count", "32", "spiral: number of microphones");
  s.declare("array.radius", "0.05", "spiral and hex: disc radius in m");
  s.declare("array.edge", "0.005", "hex: lattice edge length in m");
  s.declare("array.file", "", "csv: geometry file with header x,y,z[,delay_offset]");
  s.declare("sound_speed", "343", "speed of sound in m/s");
  s.declare("sample_rate", "450000", "sampling rate in Hz");
  s.declare("chirp.f_start", "25000", "chirp start frequency in Hz");
  s.declare("chirp.f_end", "50000", "chirp end frequency in Hz");
  s.declare("chirp.duration", "0.0025", "chirp duration in s");
  s.declare("chirp.taper", "0", "raised-cosine taper fraction at each chirp end");
  s.declare("envelope.cutoff", "5000", "envelope low-pass cutoff in Hz");
  s.declare("interpolation", "linear", "fractional delay interpolation: linear or sinc");
  s.declare("beamformers", "DAS,DMAS2,DMAS3,DMAS4,DMAS5,DAS-CF,DMAS2-CF,DMAS3-CF,DMAS4-CF,DMAS5-CF",
            "beamformer variants");
  s.declare("threads", "0", "worker threads, 0 = all cores");
  s.declare("seed", "1", "base seed for noise and random inputs");
  s.declare("db_floor", "-120", "lowest dB level mapped to black in PGM output");

  s.declare("psf.range", "1", "PSF source range in m");
  s.declare("psf.azimuth", "0", "PSF source azimuth in degrees");
  s.declare("psf.elevation", "0", "PSF source elevation in degrees");
  s.declare("psf.az_min", "-90", "PSF grid azimuth start in degrees");
  s.declare("psf.az_max", "90", "PSF grid azimuth end in degrees");
  s.declare("psf.el_min", "-90", "PSF grid elevation start in degrees");
  s.declare("psf.el_max", "90", "PSF grid elevation end in degrees");
  s.declare("psf.step", "1", "PSF grid step in degrees, both axes");

  s.declare("snr.levels", "-40,-30,-20,-10,0,10", "microphone SNR levels in dB");
  s.declare("snr.seeds", "5", "noise realizations per level");
  s.declare("snr.range", "1", "target range in m (broadside)");
  s.declare("snr.window_min", "0.5", "image range window start in m");
  s.declare("snr.window_max", "2", "image range window end in m");
  s.declare("snr.scan_half_width", "90", "horizontal scan half-width in degrees");
  s.declare("snr.scan_step", "1", "horizontal scan step in degrees");
  s.declare("snr.guard_lobes", "3", "direction guard in DAS main-lobe half-widths");

  s.declare("resolution.range", "1.5", "reflector range in m");
  s.declare("resolution.half_angles", "0.25:0.25:10", "reflector half-angles in degrees");
  s.declare("resolution.scan_half_width", "30", "horizontal scan half-width in degrees");
  s.declare("resolution.scan_step", "0.25", "horizontal scan step in degrees");

  s.declare("beamwidth.radii", "0.01,0.02,0.04,0.06", "hexagonal array radii in m");
  s.declare("beamwidth.edge", "0.005", "hexagonal lattice edge in m");
  s.declare("beamwidth.range", "1", "source range in m");
  s.declare("beamwidth.scan_half_width", "90", "horizontal scan half-width in degrees");
  s.declare("beamwidth.scan_step", "0.25", "horizontal scan step in degrees");

  s.declare("beamform_file.input", "", "recording to image");
  s.declare("beamform_file.geometry", "", "array CSV for the recording; empty uses array.*");
  s.declare("beamform_file.az_min", "-90", "scan azimuth start in degrees");
  s.declare("beamform_file.az_max", "90", "scan azimuth end in degrees");
  s.declare("beamform_file.az_step", "1", "scan azimuth step in degrees");
  s.declare("beamform_file.elevation", "0", "scan elevation in degrees");
  s.declare("beamform_file.range_min", "0", "image range start in m");
  s.declare("beamform_file.range_max", "0", "image range end in m, 0 = end of recording");

  s.declare("bench.mics", "64,512", "channel counts for the per-pixel benchmark");
  s.declare("bench.directions", "100,200,400", "direction counts for the image benchmark");
  s.declare("bench.repetitions", "50", "timed runs per measurement");
  s.declare("bench.warmup", "5", "untimed runs before timing");
  s.declare("bench.pixels", "2000", "pixels per per-pixel timing run");
  s.declare("bench.samples", "256", "time samples per image timing run");
  return s;
}

ExperimentConfig resolve_config(const Settings& s, bool full) {
  ExperimentConfig c;
  c.array_kind = s.get_string("array.kind");
  require(c.array_kind == "spiral" || c.array_kind == "hex" || c.array_kind == "csv",
          "array.kind must be spiral, hex or csv");
  c.array_count = to_count(s.get_double("array.count"), "array.count");
  c.array_radius = s.get_double("array.radius");
  c.array_edge = s.get_double("array.edge");
  c.array_file = s.get_string("array.file");
  require(c.array_radius > 0.0, "array.radius must be positive");
  require(c.array_edge > 0.0, "array.edge must be positive");
  require(c.array_kind != "csv" || !c.array_file.empty(), "array.kind = csv needs array.file");

  auto& p = c.pipeline;
  p.sound_speed = s.get_double("sound_speed");
  p.chirp.sample_rate = s.get_double("sample_rate");
  p.chirp.f_start = s.get_double("chirp.f_start");
  p.chirp.f_end = s.get_double("chirp.f_end");
  p.chirp.duration = s.get_double("chirp.duration");
  p.chirp.taper_fraction = s.get_double("chirp.taper");
  p.envelope_cutoff = s.get_double("envelope.cutoff");
  const std::string interp = s.get_string("interpolation");
  require(interp == "linear" || interp == "sinc", "interpolation must be linear or sinc");
  p.interpolation = interp == "sinc" ? Interpolation::WindowedSinc : Interpolation::Linear;
  p.threads = static_cast<unsigned>(std::min<std::uint64_t>(s.get_uint("threads"), 1024));
  try {
    p.validate();
    for (const auto& label : s.get_strings("beamformers")) c.beamformers.push_back(BeamformerSpec::parse(label));
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  require(!c.beamformers.empty(), "beamformers must list at least one variant");
  c.seed = s.get_uint("seed");
  c.db_floor = s.get_double("db_floor");
  require(c.db_floor < 0.0, "db_floor must be negative");

  c.psf = {s.get_double("psf.range"),  s.get_double("psf.azimuth"), s.get_double("psf.elevation"),
           s.get_double("psf.az_min"), s.get_double("psf.az_max"),  s.get_double("psf.step"),
           s.get_double("psf.el_min"), s.get_double("psf.el_max"),  s.get_double("psf.step")};
  if (full) c.psf.az_step = c.psf.el_step = 0.5;
  require(c.psf.range > 0.0, "psf.range must be positive");
  require(c.psf.az_step > 0.0, "psf.step must be positive");
  require(c.psf.az_min < c.psf.az_max && c.psf.el_min < c.psf.el_max, "PSF grid bounds must be increasing");
  require(c.psf.el_min >= -90.0 && c.psf.el_max <= 90.0, "PSF elevations must lie in [-90, 90]");

  c.snr.levels = s.get_doubles("snr.levels");
  c.snr.seeds = to_count(s.get_double("snr.seeds"), "snr.seeds");
  c.snr.range = s.get_double("snr.range");
  c.snr.window_min = s.get_double("snr.window_min");
  c.snr.window_max = s.get_double("snr.window_max");
  c.snr.scan_half_width = s.get_double("snr.scan_half_width");
  c.snr.scan_step = full ? 0.05 : s.get_double("snr.scan_step");
  c.snr.guard_lobes = s.get_double("snr.guard_lobes");
  require(!c.snr.levels.empty(), "snr.levels must not be empty");
  require(c.snr.window_min > 0.0 && c.snr.window_min < c.snr.range && c.snr.range < c.snr.window_max,
          "snr window must satisfy 0 < window_min < range < window_max");
  require(c.snr.scan_half_width > 0.0 && c.snr.scan_half_width <= 90.0, "snr.scan_half_width must be in (0, 90]");
  require(c.snr.scan_step > 0.0, "snr.scan_step must be positive");
  require(c.snr.guard_lobes > 0.0, "snr.guard_lobes must be positive");

  c.resolution.range = s.get_double("resolution.range");
  c.resolution.half_angles = s.get_doubles("resolution.half_angles");
  c.resolution.scan_half_width = s.get_double("resolution.scan_half_width");
  c.resolution.scan_step = full ? 0.05 : s.get_double("resolution.scan_step");
  require(c.resolution.range > 0.0, "resolution.range must be positive");
  require(!c.resolution.half_angles.empty(), "resolution.half_angles must not be empty");
  require(std::is_sorted(c.resolution.half_angles.begin(), c.resolution.half_angles.end()),
          "resolution.half_angles must be ascending");
  require(c.resolution.scan_half_width > 0.0 && c.resolution.scan_half_width <= 90.0,
          "resolution.scan_half_width must be in (0, 90]");
  for (double a : c.resolution.half_angles)
    require(a >= 0.0 && a <= c.resolution.scan_half_width, "resolution half-angles must lie inside the scan");
  require(c.resolution.scan_step > 0.0, "resolution.scan_step must be positive");

  c.beamwidth.radii = s.get_doubles("beamwidth.radii");
  c.beamwidth.edge = s.get_double("beamwidth.edge");
  c.beamwidth.range = s.get_double("beamwidth.range");
  c.beamwidth.scan_half_width = s.get_double("beamwidth.scan_half_width");
  c.beamwidth.scan_step = full ? 0.05 : s.get_double("beamwidth.scan_step");
  require(!c.beamwidth.radii.empty(), "beamwidth.radii must not be empty");
  for (double r : c.beamwidth.radii) require(r > 0.0, "beamwidth.radii must be positive");
  require(c.beamwidth.edge > 0.0 && c.beamwidth.range > 0.0, "beamwidth.edge and beamwidth.range must be positive");
  require(c.beamwidth.scan_half_width > 0.0 && c.beamwidth.scan_half_width <= 90.0,
          "beamwidth.scan_half_width must be in (0, 90]");
  require(c.beamwidth.scan_step > 0.0, "beamwidth.scan_step must be positive");

  auto& f = c.beamform_file;
  f.input = s.get_string("beamform_file.input");
  f.geometry = s.get_string("beamform_file.geometry");
  f.az_min = s.get_double("beamform_file.az_min");
  f.az_max = s.get_double("beamform_file.az_max");
  f.az_step = full ? 0.05 : s.get_double("beamform_file.az_step");
  f.elevation = s.get_double("beamform_file.elevation");
  f.range_min = s.get_double("beamform_file.range_min");
  f.range_max = s.get_double("beamform_file.range_max");
  require(f.az_min <= f.az_max && f.az_step > 0.0, "beamform_file scan must have az_min <= az_max and a positive step");
  require(f.range_min >= 0.0 && (f.range_max == 0.0 || f.range_max > f.range_min),
          "beamform_file range window must satisfy 0 <= range_min < range_max");

  c.bench.mics = s.get_doubles("bench.mics");
  c.bench.directions = s.get_doubles("bench.directions");
  for (double n : c.bench.mics) require(n >= 5.0 && n == std::floor(n), "bench.mics entries must be integers >= 5");
  for (double m : c.bench.directions)
    require(m >= 2.0 && m == std::floor(m), "bench.directions entries must be integers >= 2");
  c.bench.repetitions = to_count(s.get_double("bench.repetitions"), "bench.repetitions");
  c.bench.warmup = static_cast<std::size_t>(s.get_uint("bench.warmup"));
  c.bench.pixels = to_count(s.get_double("bench.pixels"), "bench.pixels");
  c.bench.samples = to_count(s.get_double("bench.samples"), "bench.samples");
  return c;
}

MicrophoneArray build_array(const ExperimentConfig& c) {
  if (c.array_kind == "hex") return hex_circular_array(c.array_radius, c.array_edge);
  if (c.array_kind == "csv") return read_array_csv(c.array_file).array;
  return spiral_array(c.array_count, c.array_radius);
}

std::vector<PsfSummaryRow> run_psf(const ExperimentConfig& c, const std::filesystem::path& out) {
  prepare(out);
  const auto array = build_array(c);
  const auto& g = c.psf;
  const auto grid = az_el_grid(deg_to_rad(g.az_min), deg_to_rad(g.az_max), deg_to_rad(g.az_step), deg_to_rad(g.el_min),
                               deg_to_rad(g.el_max), deg_to_rad(g.el_step));
  const Reflector source{g.range, Direction::from_degrees(g.azimuth, g.elevation), 1.0};
  const auto psfs = compute_psf_set(array, grid, c.beamformers, source, c.pipeline);

  CsvTable table{spec_header({"dynamic_range_db", "peak_sidelobe_db", "beamwidth_deg", "range_width_s"}), {}};
  std::vector<PsfSummaryRow> rows;
  for (const auto& psf : psfs) {
    const auto map = psf.directional_db();
    const auto shape = *grid.shape();
    Matrix picture(shape.elevation_count, shape.azimuth_count);
    // Top row = highest elevation.
    for (std::size_t e = 0; e < shape.elevation_count; ++e)
      for (std::size_t a = 0; a < shape.azimuth_count; ++a)
        picture(shape.elevation_count - 1 - e, a) = map[e * shape.azimuth_count + a];
    write_pgm(picture, c.db_floor, out / ("psf_" + psf.spec.label() + ".pgm"));

    PsfSummaryRow row{psf.spec, dynamic_range(psf), kNaN, kNaN};
    try {
      row.beamwidth_deg = beamwidth_3db(psf);
    } catch (const NumericError&) {
    }
    try {
      row.range_width_s = range_width_3db(psf);
    } catch (const NumericError&) {
    }
    table.add_row(row_of(psf.spec, {row.range.dynamic_range_db, row.range.peak_sidelobe_db, row.beamwidth_deg,
                                    row.range_width_s}));
    rows.push_back(row);
  }
  write_csv(table, out / "psf_summary.csv");
  return rows;
}

std::vector<SnrRow> run_image_snr(const ExperimentConfig& c, const std::filesystem::path& out) {
  prepare(out);
  const auto array = build_array(c);
  const auto& p = c.pipeline;
  const double fs = p.sample_rate();
  const auto grid =
      azimuth_scan_grid(deg_to_rad(-c.snr.scan_half_width), deg_to_rad(c.snr.scan_half_width), deg_to_rad(c.snr.scan_step), 0.0);
  const auto delays = far_field_delays(array, grid, p.sound_speed);
  const Reflector target{c.snr.range, Direction{0.0, 0.0}, 1.0};
  const std::size_t target_direction = nearest_direction(grid, target.direction);

  // Direction guard from the noise-free DAS main lobe on the same scan.
  const auto das_psf = compute_psf(array, grid, BeamformerSpec::das(), target, p);
  ImageSnrGuard guard;
  guard.direction_half_width = deg_to_rad(c.snr.guard_lobes * beamwidth_3db(das_psf) / 2.0);
  guard.range_half_width = p.chirp.sample_count();

  const std::size_t t_begin = range_to_sample(c.snr.window_min, p);
  const std::size_t t_end = range_to_sample(c.snr.window_max, p);
  const std::size_t target_column = range_to_sample(c.snr.range, p) - t_begin;
  const auto emitted = generate_chirp(p.chirp);
  const std::size_t half_env = EnvelopeDetector(p.envelope_cutoff, fs).taps().size() / 2;
  const Reflector scene[] = {target};
  const std::size_t length = std::max(scene_length(array, scene, p, 64), t_end + half_env + 1);
  const auto clean = synthesize_echoes(array, emitted, fs, scene, length, {p.sound_speed, p.spherical_spreading});

  std::vector<SnrRow> rows;
  for (double level : c.snr.levels) {
    for (std::size_t k = 0; k < c.snr.seeds; ++k) {
      const auto noisy = add_noise(clean, level, c.seed + k);
      const auto images = image_pipeline(noisy, emitted, delays, c.beamformers, p, t_begin, t_end);
      for (std::size_t s = 0; s < images.size(); ++s) {
        const auto report = image_snr(images[s], target_direction, target_column, guard, c.beamformers[s].label());
        rows.push_back({c.beamformers[s], level, k, report.snr_db});
      }
    }
  }

  CsvTable all{spec_header({"snr_mic_db", "seed", "snr_image_db"}), {}};
  for (const auto& r : rows)
    all.add_row(row_of(r.spec, {r.snr_mic_db, static_cast<std::int64_t>(c.seed + r.seed_index), r.snr_image_db}));
  write_csv(all, out / "image_snr.csv");

  CsvTable mean{spec_header({"snr_mic_db", "snr_image_db", "direction_guard_deg", "range_guard_samples"}), {}};
  for (double level : c.snr.levels) {
    for (const auto& spec : c.beamformers) {
      double sum = 0.0;
      for (const auto& r : rows)
        if (r.snr_mic_db == level && r.spec == spec) sum += r.snr_image_db;
      mean.add_row(row_of(spec, {level, sum / static_cast<double>(c.snr.seeds), rad_to_deg(guard.direction_half_width),
                                 static_cast<std::int64_t>(guard.range_half_width)}));
    }
  }
  write_csv(mean, out / "image_snr_mean.csv");
  return rows;
}

ResolutionResult run_resolution(const ExperimentConfig& c, const std::filesystem::path& out) {
  prepare(out);
  const auto array = build_array(c);
  ResolutionParams r;
  r.range = c.resolution.range;
  for (double a : c.resolution.half_angles) r.half_angles.push_back(deg_to_rad(a));
  r.scan_half_width = deg_to_rad(c.resolution.scan_half_width);
  r.scan_step = deg_to_rad(c.resolution.scan_step);
  auto result = resolution_sweep(array, c.beamformers, r, c.pipeline);

  CsvTable profiles{spec_header({"half_angle_deg", "azimuth_deg", "level_db", "resolved"}), {}};
  for (const auto& prof : result.profiles)
    for (std::size_t k = 0; k < prof.azimuth.size(); ++k)
      profiles.add_row(row_of(prof.spec, {rad_to_deg(prof.half_angle), rad_to_deg(prof.azimuth[k]), prof.level_db[k],
                                          static_cast<std::int64_t>(prof.resolved)}));
  write_csv(profiles, out / "resolution_profiles.csv");

  CsvTable summary{spec_header({"min_resolvable_half_angle_deg", "scan_step_deg"}), {}};
  for (std::size_t s = 0; s < c.beamformers.size(); ++s)
    summary.add_row(row_of(c.beamformers[s], {rad_to_deg(result.minimal_resolvable[s]), c.resolution.scan_step}));
  write_csv(summary, out / "resolution_summary.csv");
  return result;
}

std::vector<BeamwidthRow> run_beamwidth_sweep(const ExperimentConfig& c, const std::filesystem::path& out) {
  prepare(out);
  const double hw = deg_to_rad(c.beamwidth.scan_half_width);
  const auto grid = azimuth_scan_grid(-hw, hw, deg_to_rad(c.beamwidth.scan_step), 0.0);
  const Reflector source{c.beamwidth.range, Direction{0.0, 0.0}, 1.0};
  std::vector<BeamwidthRow> rows;
  CsvTable table{{"radius_m", "mic_count", "beamformer", "cf", "order", "beamwidth_deg"}, {}};
  for (double radius : c.beamwidth.radii) {
    const auto array = hex_circular_array(radius, c.beamwidth.edge);
    const auto psfs = compute_psf_set(array, grid, c.beamformers, source, c.pipeline);
    for (const auto& psf : psfs) {
      BeamwidthRow row{radius, array.size(), psf.spec, kNaN};
      try {
        row.beamwidth_deg = beamwidth_3db(psf);
      } catch (const NumericError&) {
      }
      auto cells = spec_cells(psf.spec);
      table.add_row({radius, static_cast<std::int64_t>(array.size()), cells[0], cells[1], cells[2], row.beamwidth_deg});
      rows.push_back(row);
    }
  }
  write_csv(table, out / "beamwidth.csv");
  return rows;
}

std::vector<AcousticImage> run_beamform_file(const ExperimentConfig& c, const std::filesystem::path& out) {
  const auto& f = c.beamform_file;
  if (f.input.empty()) throw ConfigError("beamform-file needs beamform_file.input");
  const auto rec = read_recording(f.input);
  std::optional<ArrayGeometry> geometry;
  if (!f.geometry.empty()) geometry = read_array_csv(f.geometry);
  else geometry = ArrayGeometry{build_array(c), {}};
  if (geometry->array.size() != rec.channels())
    throw IoError("geometry has " + std::to_string(geometry->array.size()) + " microphones but the recording has " +
                  std::to_string(rec.channels()) + " channels");
  prepare(out);

  PipelineParams p = c.pipeline;
  p.chirp.sample_rate = rec.sample_rate();
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("pipeline does not fit the recording: ") + e.what());
  }
  const auto grid = azimuth_scan_grid(deg_to_rad(f.az_min), deg_to_rad(f.az_max), deg_to_rad(f.az_step),
                                      deg_to_rad(f.elevation));
  auto delays = far_field_delays(geometry->array, grid, p.sound_speed);
  if (!geometry->delay_offsets.empty()) delays = delays.with_channel_offsets(geometry->delay_offsets);

  const std::size_t t_begin = std::min(range_to_sample(f.range_min, p), rec.length() - 1);
  const std::size_t t_end = f.range_max > 0.0 ? std::min(range_to_sample(f.range_max, p), rec.length()) : rec.length();
  if (t_begin >= t_end) throw ConfigError("beamform_file range window is empty for this recording");
  const auto emitted = generate_chirp(p.chirp);
  auto images = image_pipeline(rec, emitted, delays, c.beamformers, p, t_begin, t_end);

  CsvTable peaks{spec_header({"peak_azimuth_deg", "peak_range_m", "peak_value"}), {}};
  for (std::size_t s = 0; s < images.size(); ++s) {
    const auto& px = images[s].pixels();
    const auto data = px.data();
    const auto best = static_cast<std::size_t>(std::max_element(data.begin(), data.end()) - data.begin());
    const std::size_t d = best / px.cols();
    const std::size_t col = best % px.cols();
    peaks.add_row(row_of(c.beamformers[s], {rad_to_deg(grid[d].azimuth), images[s].range_of(col, p.sound_speed), data[best]}));
    write_pgm(to_db(px), c.db_floor, out / ("image_" + c.beamformers[s].label() + ".pgm"));
  }
  write_csv(peaks, out / "peaks.csv");
  return images;
}

std::vector<BenchRow> run_bench(const ExperimentConfig& c, const std::filesystem::path& out) {
  prepare(out);
  using clock = std::chrono::steady_clock;
  const auto& b = c.bench;

  struct Job {
    std::string measurement;
    double parameter;
    double divisor;
    std::function<void()> work;
    std::vector<double> seconds;
  };
  std::vector<Job> jobs;

  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::vector<std::vector<double>> slice_sets;
  for (double n_mics : b.mics) {
    std::vector<double> slices(static_cast<std::size_t>(n_mics) * b.pixels);
    for (double& v : slices) v = uniform(rng);
    slice_sets.push_back(std::move(slices));
  }
  double sink = 0.0;
  for (std::size_t m = 0; m < b.mics.size(); ++m) {
    const auto n = static_cast<std::size_t>(b.mics[m]);
    const auto& slices = slice_sets[m];
    jobs.push_back({"pixel_dmas5", b.mics[m], static_cast<double>(b.pixels), [&, n] {
                      double acc = 0.0;
                      for (std::size_t k = 0; k < b.pixels; ++k)
                        acc += dmas_fast(std::span<const double>(slices).subspan(k * n, n), 5);
                      sink += acc;
                    }, {}});
  }

  const auto array = build_array(c);
  const double fs = c.pipeline.sample_rate();
  const auto pad = static_cast<std::size_t>(std::ceil(array.aperture_diameter() / c.pipeline.sound_speed * fs)) + 2;
  Matrix noise(array.size(), b.samples + 2 * pad);
  for (double& v : noise.data()) v = uniform(rng);
  const MultichannelRecording rec(std::move(noise), fs);
  BeamformOptions options;
  options.time_begin = pad;
  options.time_end = pad + b.samples;
  options.interpolation = c.pipeline.interpolation;
  options.threads = c.pipeline.threads;
  std::vector<DelayTable> tables;
  for (double m : b.directions) {
    const auto grid = azimuth_scan_grid(-kPi / 2.0, kPi / 2.0, kPi / (m - 1.0), 0.0);
    tables.push_back(far_field_delays(array, grid, c.pipeline.sound_speed));
  }
  for (const auto& delays : tables)
    jobs.push_back({"image_dmas5", static_cast<double>(delays.direction_count()), 1.0,
                    [&] { (void)beamform_image(rec, delays, BeamformerSpec::dmas(5), options); }, {}});

  // Rounds run every job once, so drift in machine speed hits all jobs alike.
  for (std::size_t k = 0; k < b.warmup; ++k)
    for (auto& job : jobs) job.work();
  for (std::size_t k = 0; k < b.repetitions; ++k)
    for (auto& job : jobs) {
      const auto t0 = clock::now();
      job.work();
      job.seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());
    }
  if (!std::isfinite(sink)) throw NumericError("benchmark produced a non-finite value");

  std::vector<BenchRow> rows;
  CsvTable table{{"measurement", "parameter", "median_seconds"}, {}};
  for (auto& job : jobs) {
    rows.push_back({job.measurement, job.parameter, median(std::move(job.seconds)) / job.divisor});
    table.add_row({rows.back().measurement, rows.back().parameter, rows.back().median_seconds});
  }
  write_csv(table, out / "bench.csv");
  return rows;
}

}  // namespace airbeam
