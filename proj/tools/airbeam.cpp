// Experiment runner: each subcommand reads a flat key = value config, applies
// command-line overrides, echoes the resolved config into the output
// directory and writes its CSV/PGM results there.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "airbeam/errors.hpp"
#include "airbeam/experiments.hpp"

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kIoError = 3, kNumericError = 4 };

struct CommonOptions {
  std::string config;
  std::string out = "airbeam_out";
  std::vector<std::string> overrides;
  long long threads = -1;
  long long seed = -1;
  bool full = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "key = value configuration file");
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  cmd->add_option("--set", o.overrides, "override a configuration key (key=value), repeatable");
  cmd->add_option("--threads", o.threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", o.seed, "base seed")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--full", o.full, "fine grids: 0.05 degree scans, 0.5 degree PSF");
}

int run(const std::string& command, const CommonOptions& o) {
  using namespace airbeam;
  auto settings = experiment_settings();
  if (!o.config.empty()) settings.parse_file(o.config);
  for (const auto& assignment : o.overrides) settings.apply_override(assignment);
  if (o.threads >= 0) settings.set("threads", std::to_string(o.threads));
  if (o.seed >= 0) settings.set("seed", std::to_string(o.seed));
  const auto config = resolve_config(settings, o.full);

  const std::filesystem::path out = o.out;
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
  write_text(settings.canonical() + (o.full ? "# --full\n" : ""), out / "config.resolved.txt");

  if (command == "psf") {
    for (const auto& r : run_psf(config, out))
      std::printf("%-9s dynamic range %7.2f dB  beamwidth %6.2f deg  range width %.3g s\n", r.spec.label().c_str(),
                  r.range.dynamic_range_db, r.beamwidth_deg, r.range_width_s);
  } else if (command == "image-snr") {
    const auto rows = run_image_snr(config, out);
    std::printf("%zu image SNR rows written to %s\n", rows.size(), (out / "image_snr.csv").c_str());
  } else if (command == "resolution") {
    const auto result = run_resolution(config, out);
    for (std::size_t s = 0; s < config.beamformers.size(); ++s)
      std::printf("%-9s minimal resolvable half-angle %.2f deg\n", config.beamformers[s].label().c_str(),
                  rad_to_deg(result.minimal_resolvable[s]));
  } else if (command == "beamwidth-sweep") {
    for (const auto& r : run_beamwidth_sweep(config, out))
      std::printf("radius %.3f m  %4zu mics  %-9s %6.2f deg\n", r.radius, r.mic_count, r.spec.label().c_str(),
                  r.beamwidth_deg);
  } else if (command == "beamform-file") {
    const auto images = run_beamform_file(config, out);
    std::printf("%zu images of %zu x %zu written to %s\n", images.size(), images.front().direction_count(),
                images.front().time_count(), out.c_str());
  } else if (command == "bench") {
    for (const auto& r : run_bench(config, out))
      std::printf("%-12s %6g  median %.6g s\n", r.measurement.c_str(), r.parameter, r.median_seconds);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delay-multiply-and-sum acoustic imaging experiments"};
  app.require_subcommand(0, 1);
  bool show_defaults = false;
  app.add_flag("--print-config", show_defaults, "print every configuration key with its default and exit");

  CommonOptions options;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"psf", "point-spread function for every beamformer"},
      {"image-snr", "image SNR against microphone SNR"},
      {"resolution", "two-reflector angular resolution sweep"},
      {"beamwidth-sweep", "-3 dB beamwidth against hexagonal array radius"},
      {"beamform-file", "image a recorded file"},
      {"bench", "runtime scaling in channels and directions"},
  };
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), options);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  if (show_defaults) {
    std::cout << airbeam::experiment_settings().describe();
    return kOk;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, options);
  } catch (const airbeam::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const airbeam::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const airbeam::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const airbeam::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumericError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericError;
  }
}
