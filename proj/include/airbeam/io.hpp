#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "airbeam/array.hpp"
#include "airbeam/beamform.hpp"
#include "airbeam/matrix.hpp"
#include "airbeam/signals.hpp"

namespace airbeam {

// Recording container: "AIRBEAM1", u32 channels, u64 samples, f64 sample rate
// (all little-endian), then channel-major float32 samples.
inline constexpr char kRecordingMagic[8] = {'A', 'I', 'R', 'B', 'E', 'A', 'M', '1'};
inline constexpr std::size_t kRecordingHeaderBytes = 28;

void write_recording(const MultichannelRecording& rec, const std::filesystem::path& path);
MultichannelRecording read_recording(const std::filesystem::path& path);

/// Array geometry CSV: header `x,y,z` (metres), optionally followed by a
/// `delay_offset` column in seconds.
struct ArrayGeometry {
  MicrophoneArray array;
  std::vector<double> delay_offsets;  // empty when the column is absent
};

ArrayGeometry read_array_csv(const std::filesystem::path& path);
void write_array_csv(const MicrophoneArray& array, const std::filesystem::path& path);

using CsvCell = std::variant<std::string, double, std::int64_t>;

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<CsvCell>> rows;

  void add_row(std::vector<CsvCell> row);
  std::string to_string() const;
};

/// Shortest round-trip decimal form with '.' as separator.
std::string format_number(double value);

void write_csv(const CsvTable& table, const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

/// dB value -> 16-bit grey level: [db_floor, 0] maps linearly onto [0, 65535],
/// clamped, rounded half up.
std::uint16_t db_to_grey(double db, double db_floor);

/// Binary 16-bit PGM (P5, big-endian samples, maxval 65535), one row per
/// matrix row. Throws InvalidArgument when db_floor >= 0.
std::string encode_pgm(const Matrix& db, double db_floor);
void write_pgm(const Matrix& db, double db_floor, const std::filesystem::path& path);
void write_pgm(const AcousticImage& image_db, double db_floor, const std::filesystem::path& path);

struct PgmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint16_t> grey;  // row-major
};

PgmImage read_pgm(const std::filesystem::path& path);

}  // namespace airbeam
