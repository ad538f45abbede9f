#include "airbeam/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

#include "airbeam/errors.hpp"

namespace airbeam {

static_assert(std::endian::native == std::endian::little, "recording I/O assumes a little-endian host");

namespace {

template <typename T>
void put_le(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T get_le(const char* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  return value;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

void write_bytes(const std::string& bytes, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return std::move(buffer).str();
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_commas(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(const std::string& text, const std::string& where) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (!text.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || text.empty()) throw IoError("not a number '" + text + "' in " + where);
  if (!std::isfinite(value)) throw IoError("non-finite value in " + where);
  return value;
}

}  // namespace

void write_recording(const MultichannelRecording& rec, const std::filesystem::path& path) {
  if (rec.channels() > 0xFFFFFFFFull) throw InvalidArgument("too many channels for the recording format");
  std::string bytes;
  bytes.reserve(kRecordingHeaderBytes + rec.channels() * rec.length() * 4);
  bytes.append(kRecordingMagic, sizeof kRecordingMagic);
  put_le(bytes, static_cast<std::uint32_t>(rec.channels()));
  put_le(bytes, static_cast<std::uint64_t>(rec.length()));
  put_le(bytes, rec.sample_rate());
  for (std::size_t i = 0; i < rec.channels(); ++i)
    for (double v : rec.channel(i)) put_le(bytes, static_cast<float>(v));
  write_bytes(bytes, path);
}

MultichannelRecording read_recording(const std::filesystem::path& path) {
  const std::string bytes = read_bytes(path);
  if (bytes.size() < kRecordingHeaderBytes) throw IoError("truncated recording header: " + path.string());
  if (std::memcmp(bytes.data(), kRecordingMagic, sizeof kRecordingMagic) != 0)
    throw IoError("bad recording magic: " + path.string());
  const auto channels = get_le<std::uint32_t>(bytes.data() + 8);
  const auto samples = get_le<std::uint64_t>(bytes.data() + 12);
  const auto rate = get_le<double>(bytes.data() + 20);
  if (channels == 0 || samples == 0) throw IoError("recording must have at least one channel and sample");
  if (!(rate > 0.0) || !std::isfinite(rate)) throw IoError("recording sample rate must be positive");
  const std::uint64_t payload = bytes.size() - kRecordingHeaderBytes;
  if (samples > payload / 4 / channels || payload != static_cast<std::uint64_t>(channels) * samples * 4)
    throw IoError("recording payload size does not match its header: " + path.string());

  Matrix data(channels, samples);
  const char* p = bytes.data() + kRecordingHeaderBytes;
  for (double& v : data.data()) {
    const float f = get_le<float>(p);
    p += 4;
    if (std::isnan(f)) throw IoError("NaN sample in recording: " + path.string());
    v = f;
  }
  return MultichannelRecording(std::move(data), rate);
}

ArrayGeometry read_array_csv(const std::filesystem::path& path) {
  std::istringstream in(read_bytes(path));
  std::string line;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line))
    if (!trim(line).empty()) header = split_commas(line);
  const bool with_offsets = header.size() == 4 && header[3] == "delay_offset";
  if (header.size() < 3 || header[0] != "x" || header[1] != "y" || header[2] != "z" ||
      (header.size() == 4 && !with_offsets) || header.size() > 4)
    throw IoError("array CSV header must be x,y,z[,delay_offset]: " + path.string());

  std::vector<Vec3> positions;
  std::vector<double> offsets;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != header.size())
      throw IoError("wrong number of columns on line " + std::to_string(line_no) + " of " + path.string());
    const std::string where = path.string() + ":" + std::to_string(line_no);
    positions.push_back({parse_double(cells[0], where), parse_double(cells[1], where), parse_double(cells[2], where)});
    if (with_offsets) offsets.push_back(parse_double(cells[3], where));
  }
  if (positions.empty()) throw IoError("array CSV has no microphones: " + path.string());
  try {
    return {MicrophoneArray(std::move(positions)), std::move(offsets)};
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("invalid array geometry: ") + e.what());
  }
}

void write_array_csv(const MicrophoneArray& array, const std::filesystem::path& path) {
  CsvTable table{{"x", "y", "z"}, {}};
  for (const auto& p : array.positions()) table.add_row({p.x, p.y, p.z});
  write_csv(table, path);
}

std::string format_number(double value) {
  if (value == 0.0) return "0";  // folds -0
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw NumericError("cannot format number");
  return std::string(buf, ptr);
}

void CsvTable::add_row(std::vector<CsvCell> row) {
  if (row.size() != header.size()) throw InvalidArgument("CSV row width does not match the header");
  rows.push_back(std::move(row));
}

std::string CsvTable::to_string() const {
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) out += (c ? "," : "") + header[c];
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::string>) {
              if (v.find_first_of(",\n\"") != std::string::npos)
                throw InvalidArgument("CSV text cells may not contain commas, quotes or newlines");
              out += v;
            } else if constexpr (std::is_same_v<T, double>) {
              out += format_number(v);
            } else {
              out += std::to_string(v);
            }
          },
          row[c]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const CsvTable& table, const std::filesystem::path& path) { write_bytes(table.to_string(), path); }

void write_text(const std::string& text, const std::filesystem::path& path) { write_bytes(text, path); }

std::string read_text(const std::filesystem::path& path) { return read_bytes(path); }

std::uint16_t db_to_grey(double db, double db_floor) {
  if (!(db_floor < 0.0)) throw InvalidArgument("dB floor must be negative");
  if (std::isnan(db)) throw NumericError("NaN pixel in dB image");
  const double clamped = std::clamp(db, db_floor, 0.0);
  const double level = std::floor((clamped - db_floor) / -db_floor * 65535.0 + 0.5);
  return static_cast<std::uint16_t>(std::min(level, 65535.0));
}

std::string encode_pgm(const Matrix& db, double db_floor) {
  if (!(db_floor < 0.0)) throw InvalidArgument("dB floor must be negative");
  if (db.empty()) throw InvalidArgument("cannot write an empty image");
  std::string out = "P5\n" + std::to_string(db.cols()) + " " + std::to_string(db.rows()) + "\n65535\n";
  out.reserve(out.size() + db.data().size() * 2);
  for (double v : db.data()) {
    const std::uint16_t g = db_to_grey(v, db_floor);
    out += static_cast<char>(g >> 8);
    out += static_cast<char>(g & 0xFF);
  }
  return out;
}

void write_pgm(const Matrix& db, double db_floor, const std::filesystem::path& path) {
  write_bytes(encode_pgm(db, db_floor), path);
}

void write_pgm(const AcousticImage& image_db, double db_floor, const std::filesystem::path& path) {
  write_pgm(image_db.pixels(), db_floor, path);
}

PgmImage read_pgm(const std::filesystem::path& path) {
  const std::string bytes = read_bytes(path);
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  if (next_token() != "P5") throw IoError("not a binary PGM: " + path.string());
  PgmImage img;
  try {
    img.width = std::stoul(next_token());
    img.height = std::stoul(next_token());
    if (std::stoul(next_token()) != 65535) throw IoError("only 16-bit PGM is supported");
  } catch (const std::logic_error&) {
    throw IoError("malformed PGM header: " + path.string());
  }
  ++pos;  // single whitespace before the raster
  const std::size_t count = img.width * img.height;
  if (bytes.size() < pos || bytes.size() - pos != count * 2) throw IoError("PGM raster size mismatch: " + path.string());
  img.grey.resize(count);
  for (std::size_t k = 0; k < count; ++k)
    img.grey[k] = static_cast<std::uint16_t>((static_cast<unsigned char>(bytes[pos + 2 * k]) << 8) |
                                             static_cast<unsigned char>(bytes[pos + 2 * k + 1]));
  return img;
}

}  // namespace airbeam
