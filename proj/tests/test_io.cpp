#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "airbeam/config.hpp"
#include "airbeam/errors.hpp"
#include "airbeam/io.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace airbeam;
using airbeam::test::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) { return read_text(p); }

void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

}  // namespace

TEST_CASE("recording round trip is exact at 32-bit precision") {
  TempDir dir("airbeam_io");
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(3, 257);
  for (double& v : m.data()) v = static_cast<float>(g(rng));
  const MultichannelRecording rec(m, 450e3);
  write_recording(rec, dir / "a.rec");
  CHECK(std::filesystem::file_size(dir / "a.rec") == kRecordingHeaderBytes + 3 * 257 * 4);
  const auto back = read_recording(dir / "a.rec");
  CHECK(back.samples() == rec.samples());
  CHECK(back.sample_rate() == 450e3);

  // Header layout, field by field.
  const std::string bytes = slurp(dir / "a.rec");
  CHECK(bytes.substr(0, 8) == "AIRBEAM1");
  std::uint32_t channels;
  std::uint64_t samples;
  double rate;
  std::memcpy(&channels, bytes.data() + 8, 4);
  std::memcpy(&samples, bytes.data() + 12, 8);
  std::memcpy(&rate, bytes.data() + 20, 8);
  CHECK(channels == 3);
  CHECK(samples == 257);
  CHECK(rate == 450e3);
  float first;
  std::memcpy(&first, bytes.data() + 28, 4);
  CHECK(first == static_cast<float>(m(0, 0)));
  float second_channel;
  std::memcpy(&second_channel, bytes.data() + 28 + 257 * 4, 4);
  CHECK(second_channel == static_cast<float>(m(1, 0)));
}

TEST_CASE("single-sample recording and full-size payload arithmetic") {
  TempDir dir("airbeam_io");
  const MultichannelRecording one(Matrix(1, 1, 0.0), 450e3);
  write_recording(one, dir / "one.rec");
  CHECK(read_recording(dir / "one.rec").samples() == Matrix(1, 1, 0.0));

  const MultichannelRecording big(Matrix(32, 163840), 450e3);
  write_recording(big, dir / "big.rec");
  CHECK(std::filesystem::file_size(dir / "big.rec") - kRecordingHeaderBytes == 20971520);
}

TEST_CASE("corrupt recordings are rejected") {
  TempDir dir("airbeam_io");
  const MultichannelRecording rec(Matrix(2, 8, 0.5), 1000.0);
  write_recording(rec, dir / "ok.rec");
  std::string bytes = slurp(dir / "ok.rec");

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  spit(dir / "magic.rec", bad_magic);
  CHECK_THROWS_AS(read_recording(dir / "magic.rec"), IoError);

  spit(dir / "short.rec", bytes.substr(0, bytes.size() - 1));
  CHECK_THROWS_AS(read_recording(dir / "short.rec"), IoError);
  spit(dir / "long.rec", bytes + "x");
  CHECK_THROWS_AS(read_recording(dir / "long.rec"), IoError);
  spit(dir / "header.rec", bytes.substr(0, 20));
  CHECK_THROWS_AS(read_recording(dir / "header.rec"), IoError);

  std::string with_nan = bytes;
  const float nan = std::nanf("");
  std::memcpy(with_nan.data() + kRecordingHeaderBytes + 12, &nan, 4);
  spit(dir / "nan.rec", with_nan);
  CHECK_THROWS_AS(read_recording(dir / "nan.rec"), IoError);

  std::string zero_rate = bytes;
  const double zero = 0.0;
  std::memcpy(zero_rate.data() + 20, &zero, 8);
  spit(dir / "rate.rec", zero_rate);
  CHECK_THROWS_AS(read_recording(dir / "rate.rec"), IoError);

  CHECK_THROWS_AS(read_recording(dir / "missing.rec"), IoError);
}

TEST_CASE("PGM grey levels") {
  CHECK(db_to_grey(0.0, -60.0) == 65535);
  CHECK(db_to_grey(-60.0, -60.0) == 0);
  CHECK(db_to_grey(-200.0, -60.0) == 0);
  CHECK(db_to_grey(5.0, -60.0) == 65535);
  CHECK(db_to_grey(-30.0, -60.0) == 32768);
  CHECK_THROWS_AS(db_to_grey(-1.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(db_to_grey(std::nan(""), -60.0), NumericError);
}

TEST_CASE("PGM files: header, byte order, determinism and round trip") {
  TempDir dir("airbeam_io");
  Matrix db(2, 3, 0.0);
  db(0, 1) = -30.0;
  db(1, 2) = -60.0;
  write_pgm(db, -60.0, dir / "a.pgm");
  write_pgm(db, -60.0, dir / "b.pgm");
  const std::string bytes = slurp(dir / "a.pgm");
  CHECK(bytes == slurp(dir / "b.pgm"));
  const std::string header = "P5\n3 2\n65535\n";
  REQUIRE(bytes.size() == header.size() + 12);
  CHECK(bytes.substr(0, header.size()) == header);
  CHECK(static_cast<unsigned char>(bytes[header.size() + 2]) == 0x80);  // 32768 big-endian
  CHECK(static_cast<unsigned char>(bytes[header.size() + 3]) == 0x00);
  const auto img = read_pgm(dir / "a.pgm");
  CHECK(img.width == 3);
  CHECK(img.height == 2);
  CHECK(img.grey == std::vector<std::uint16_t>{65535, 32768, 65535, 65535, 65535, 0});
  CHECK_THROWS_AS(write_pgm(db, 0.0, dir / "c.pgm"), InvalidArgument);
  CHECK_THROWS_AS(write_pgm(Matrix(2, 2, 0.0), -60.0, dir.path() / "no_such_dir" / "x.pgm"), IoError);
}

TEST_CASE("CSV tables") {
  CsvTable t{{"name", "value", "count"}, {}};
  t.add_row({std::string("DAS"), 0.1, std::int64_t{3}});
  t.add_row({std::string("DMAS2"), -2.5e-7, std::int64_t{-1}});
  t.add_row({std::string("zero"), -0.0, std::int64_t{0}});
  CHECK(t.to_string() == "name,value,count\nDAS,0.1,3\nDMAS2,-2.5e-07,-1\nzero,0,0\n");
  CHECK_THROWS_AS(t.add_row({1.0}), InvalidArgument);
  CsvTable bad{{"a"}, {}};
  bad.add_row({std::string("x,y")});
  CHECK_THROWS_AS(bad.to_string(), InvalidArgument);
  CHECK(format_number(1.0 / 3.0) == "0.3333333333333333");
  CHECK(format_number(450000.0) == "450000");
}

TEST_CASE("array geometry CSV") {
  TempDir dir("airbeam_io");
  spit(dir / "plain.csv", "x,y,z\n0,0,0\n0,0.01,0\n\n0,0,-0.02\n");
  const auto plain = read_array_csv(dir / "plain.csv");
  CHECK(plain.array.size() == 3);
  CHECK(plain.array[2].z == -0.02);
  CHECK(plain.delay_offsets.empty());

  spit(dir / "offsets.csv", "x,y,z,delay_offset\r\n0,0,0,1e-6\r\n0,0.01,0,-2e-6\r\n");
  const auto off = read_array_csv(dir / "offsets.csv");
  CHECK(off.delay_offsets == std::vector<double>{1e-6, -2e-6});

  const auto spiral = spiral_array(5, 0.02);
  write_array_csv(spiral, dir / "spiral.csv");
  const auto back = read_array_csv(dir / "spiral.csv");
  for (std::size_t i = 0; i < 5; ++i) CHECK(back.array[i] == spiral[i]);

  spit(dir / "header.csv", "a,b,c\n0,0,0\n");
  CHECK_THROWS_AS(read_array_csv(dir / "header.csv"), IoError);
  spit(dir / "text.csv", "x,y,z\n0,zero,0\n");
  CHECK_THROWS_AS(read_array_csv(dir / "text.csv"), IoError);
  spit(dir / "ragged.csv", "x,y,z\n0,0\n");
  CHECK_THROWS_AS(read_array_csv(dir / "ragged.csv"), IoError);
  spit(dir / "dup.csv", "x,y,z\n0,0,0\n0,0,0\n");
  CHECK_THROWS_AS(read_array_csv(dir / "dup.csv"), IoError);
  spit(dir / "empty.csv", "x,y,z\n");
  CHECK_THROWS_AS(read_array_csv(dir / "empty.csv"), IoError);
}

TEST_CASE("settings: parsing, lists, validation and canonical echo") {
  Settings s;
  s.declare("b.value", "1.5", "a number");
  s.declare("a.list", "1,2", "a list");
  s.declare("name", "x", "a word");
  s.declare("flag", "false", "a switch");
  s.parse_text("# comment\n  b.value = 2.25   # trailing\n\na.list = 0:0.5:2, 7\nflag=on\n", "test");
  CHECK(s.get_double("b.value") == 2.25);
  CHECK(s.get_doubles("a.list") == std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0, 7.0});
  CHECK(s.get_bool("flag"));
  CHECK(s.canonical() == "a.list = 0:0.5:2, 7\nb.value = 2.25\nflag = on\nname = x\n");
  s.apply_override("name=hello");
  CHECK(s.get_string("name") == "hello");
  CHECK_THROWS_AS(s.parse_text("unknown = 1\n", "test"), ConfigError);
  CHECK_THROWS_AS(s.parse_text("novalue\n", "test"), ConfigError);
  CHECK_THROWS_AS(s.apply_override("name"), ConfigError);
  CHECK_THROWS_AS(s.get_double("name"), ConfigError);
  CHECK_THROWS_AS(s.get_bool("name"), ConfigError);
  CHECK_THROWS_AS(s.get_string("missing"), ConfigError);
  s.set("a.list", "3:1:1");
  CHECK_THROWS_AS(s.get_doubles("a.list"), ConfigError);
  s.set("b.value", "-3");
  CHECK_THROWS_AS(s.get_uint("b.value"), ConfigError);
  CHECK(s.get_int("b.value") == -3);
  CHECK_THROWS_AS(s.parse_file("/nonexistent/config.txt"), ConfigError);
}
