#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "photonstat/io.hpp"
#include "random_streams.hpp"

using namespace photonstat;
using namespace photonstat::io;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "photonstat_test_io";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string message_of(const std::vector<std::uint8_t>& bytes) {
  try {
    (void)decode_ttag(bytes);
  } catch (const IoError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("TTAG1 header layout") {
  const TimeTagStream s({4, 1000, 3, 2}, {{0, 1, 8}, {2, 0, 996}});
  const auto bytes = encode_ttag(s);
  REQUIRE(bytes.size() == kTtagHeaderBytes + 2 * kTtagRecordBytes);
  CHECK(std::string(bytes.begin(), bytes.begin() + 5) == "TTAG1");
  CHECK(bytes[5] == 1);  // version, little-endian
  CHECK(bytes[6] == 0);
  CHECK(bytes[7] == 4);  // resolution
  CHECK(bytes[11] == 2);  // channels
  CHECK(bytes[12] == 3);  // runs
  CHECK(bytes[16] == 0xE8);  // duration 1000 = 0x3E8
  CHECK(bytes[17] == 0x03);
  CHECK(bytes[24] == 2);  // records
  CHECK(bytes[kTtagHeaderBytes + 4] == 1);  // first record channel
}

TEST_CASE("property: strict decode then encode is the identity at byte level") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = testutil::random_small_stream(rng, 1 + static_cast<std::uint32_t>(rng() % 5), 1 + rng() % 100000, 500);
    const auto bytes = encode_ttag(s);
    const auto back = decode_ttag(bytes);
    CHECK(back.warnings.empty());
    CHECK(back.stream == s);
    CHECK(encode_ttag(back.stream) == bytes);
  }
}

TEST_CASE("file round trip and empty streams") {
  const auto s = testutil::poisson_stream(3, 4, 2, 1'000'000, 1e5, 2);
  write_ttag(scratch("a.ttag"), s);
  CHECK(read_ttag(scratch("a.ttag")).stream == s);
  const TimeTagStream empty({1, 10, 0, 1}, {});
  write_ttag(scratch("empty.ttag"), empty);
  CHECK(read_ttag(scratch("empty.ttag")).stream == empty);
  CHECK_THROWS_AS(read_ttag(scratch("missing.ttag")), IoError);
}

TEST_CASE("malformed TTAG1 errors name the byte offset") {
  const TimeTagStream s({1, 1000, 1, 1}, {{0, 0, 1}, {0, 0, 2}, {0, 0, 3}});
  auto bytes = encode_ttag(s);

  auto truncated = bytes;
  truncated.resize(kTtagHeaderBytes + kTtagRecordBytes + 5);
  CHECK(message_of(truncated).find("byte offset " + std::to_string(kTtagHeaderBytes + kTtagRecordBytes)) !=
        std::string::npos);

  auto header_only = bytes;
  header_only.resize(20);
  CHECK(message_of(header_only).find("byte offset 20") != std::string::npos);

  auto trailing = bytes;
  trailing.push_back(0);
  CHECK(message_of(trailing).find("byte offset " + std::to_string(bytes.size())) != std::string::npos);

  auto magic = bytes;
  magic[0] = 'X';
  CHECK(message_of(magic).find("byte offset 0") != std::string::npos);

  auto version = bytes;
  version[5] = 9;
  CHECK(message_of(version).find("byte offset 5") != std::string::npos);

  auto bad_channel = bytes;
  bad_channel[kTtagHeaderBytes + 4] = 3;
  CHECK_THROWS_AS(decode_ttag(bad_channel), IoError);
}

TEST_CASE("unsorted records: strict rejects, lenient sorts with a warning") {
  const TimeTagStream s({1, 1000, 1, 1}, {{0, 0, 1}, {0, 0, 2}});
  auto bytes = encode_ttag(s);
  // swap the two records
  std::swap_ranges(bytes.begin() + kTtagHeaderBytes, bytes.begin() + kTtagHeaderBytes + kTtagRecordBytes,
                   bytes.begin() + kTtagHeaderBytes + kTtagRecordBytes);
  CHECK_THROWS_AS(decode_ttag(bytes, ReadMode::Strict), IoError);
  const auto lenient = decode_ttag(bytes, ReadMode::Lenient);
  CHECK(lenient.stream == s);
  REQUIRE(lenient.warnings.size() == 1);
}

TEST_CASE("CSV import: units, inference, quantization") {
  const auto r = parse_csv("run,channel,t\n0,0,1.5\n0,1,0.25\n1,0,3\n", {"run", "channel", "t", "us", ',', 100});
  CHECK(r.skipped.empty());
  const auto& s = r.stream;
  CHECK(s.n_runs() == 2);
  CHECK(s.n_channels() == 2);
  CHECK(s.resolution_ns() == 100);
  CHECK(s.duration_ns() == 3100);
  REQUIRE(s.size() == 3);
  CHECK(s.tags()[0] == TimeTag{0, 1, 200});
  CHECK(s.tags()[1] == TimeTag{0, 0, 1500});
  CHECK(s.tags()[2] == TimeTag{1, 0, 3000});

  CsvMapping m;
  m.run_column.clear();
  m.channel_column.clear();
  m.time_column = "time";
  m.time_unit = "ps";
  m.delimiter = ';';
  const auto t = parse_csv("time;extra\n2500;x\n 999 ;y\n", m);
  REQUIRE(t.stream.size() == 2);
  CHECK(t.stream.tags()[0].t_ns == 1);
  CHECK(t.stream.tags()[1].t_ns == 3);  // 2.5 rounds half away from zero
}

TEST_CASE("CSV import: bad rows are listed and bounded") {
  std::string text = "run,channel,t\n";
  for (int i = 0; i < 200; ++i) text += "0,0," + std::to_string(i) + "\n";
  text += "0,0,abc\n";
  text += "0,0\n";
  CsvMapping m;
  m.max_bad_fraction = 0.05;
  const auto r = parse_csv(text, m);
  REQUIRE(r.skipped.size() == 2);
  CHECK(r.skipped[0].line == 202);
  CHECK(r.skipped[1].reason.find("fields") != std::string::npos);
  m.max_bad_fraction = 0.001;
  try {
    (void)parse_csv(text, m);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("line 202") != std::string::npos);
    CHECK(std::string(e.what()).find("line 203") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_csv("a,b\n1,2\n"), IoError);
  CHECK_THROWS_AS(parse_csv(""), IoError);
  CHECK_THROWS_AS(parse_csv("run,channel,t\n", {"run", "channel", "t", "fortnights"}), IoError);

  CsvMapping declared;
  declared.duration_ns = 100;
  declared.max_bad_fraction = 1.0;
  const auto d = parse_csv("run,channel,t\n0,0,50\n0,0,150\n0,0,-4\n", declared);
  CHECK(d.stream.size() == 1);
  CHECK(d.skipped.size() == 2);
}

TEST_CASE("CSV export and import round trip") {
  const auto s = testutil::poisson_stream(5, 3, 2, 500'000, 1e5);
  export_csv(scratch("tags.csv"), s);
  CsvMapping m;
  m.time_column = "t_ns";
  m.duration_ns = s.duration_ns();
  m.n_runs = s.n_runs();
  m.n_channels = s.n_channels();
  CHECK(import_csv(scratch("tags.csv"), m).stream == s);
}

TEST_CASE("config parsing: units, comments, unknown keys") {
  const auto c = parse_config(R"({
    // comment
    "run": {"n_runs": 3, "seed": 9, "duration_ms": 20},
    "source": {"constant_rate": 1000},
    "emission": {"mode": "mcwf", "mcwf": {"omega_over_gamma": 2.0, "delta_mhz": 0, "gamma_mhz": 6.0, "p_dark": 0.5, "max_dwell_us": 3}},
    "detector": {"dead_time_us": 0.1},
    "analysis": {"g2_norm": "local", "g2_window_ms": [1, 2], "lag_bin_ns": 2}
  })");
  CHECK(c.experiment.run.duration_ns == 20'000'000);
  CHECK(c.experiment.source.duration_ns == 20'000'000);
  CHECK(c.experiment.source.profile.back().t_ns == 20'000'000);
  CHECK(c.experiment.emission.mode == EmissionMode::Mcwf);
  CHECK(c.experiment.emission.mcwf.max_dwell_ns == doctest::Approx(3000.0));
  CHECK(c.experiment.emission.mcwf.two_level.omega == doctest::Approx(2.0 * 2.0 * 3.141592653589793 * 6e6));
  CHECK(c.experiment.detector.dead_time_ns == 100);
  CHECK(c.analysis.g2_norm == stats::G2Norm::LocalRate);
  CHECK(c.analysis.g2_window == TimeRange{1'000'000, 2'000'000});

  CHECK_THROWS_AS(parse_config(R"({"run": {"n_runz": 3}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"runs": {}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"run": {"duration_ms": 1, "duration_ns": 5}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"run": {"duration_ms": "x"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"emission": {"mode": "laser"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"source": {"constant_rate": 1, "pulse": {}}})"), ConfigError);
  CHECK_THROWS_AS(load_config(scratch("nope.cfg")), ConfigError);
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("series writers produce the documented columns") {
  stats::FanoSeries fs{1000, 2, {1.0}, {2.0}, {2.0}, {1.5}, {2.5}, 10, 0.95};
  write_fano_csv(scratch("fano.csv"), fs);
  std::ifstream in(scratch("fano.csv"));
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "bin,t_start_ns,t_end_ns,mean,variance,ratio,ratio_lo,ratio_hi");
  CHECK(row == "0,0,1000,1,2,2,1.5,2.5");
}
