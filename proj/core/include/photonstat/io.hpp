#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "photonstat/config.hpp"
#include "photonstat/counts.hpp"
#include "photonstat/g2.hpp"
#include "photonstat/theory.hpp"
#include "photonstat/tia.hpp"
#include "photonstat/timetag.hpp"

namespace photonstat::io {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or invalid configuration file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// TTAG1, little-endian:
//   "TTAG1" | version u16 | resolution_ns u32 | n_channels u8 | n_runs u32 |
//   duration_ns u64 | n_records u64 | n_records x (run_id u32, channel u8, t_ns u64)
inline constexpr std::uint16_t kTtagVersion = 1;
inline constexpr std::size_t kTtagHeaderBytes = 5 + 2 + 4 + 1 + 4 + 8 + 8;
inline constexpr std::size_t kTtagRecordBytes = 13;

enum class ReadMode { Strict, Lenient };

struct TtagRead {
  TimeTagStream stream;
  std::vector<std::string> warnings;
};

std::vector<std::uint8_t> encode_ttag(const TimeTagStream& stream);
/// Strict rejects unsorted records; Lenient sorts them and adds a warning.
/// Errors name the byte offset where the data stops making sense.
TtagRead decode_ttag(const std::vector<std::uint8_t>& bytes, ReadMode mode = ReadMode::Strict);

void write_ttag(const std::filesystem::path& path, const TimeTagStream& stream);
TtagRead read_ttag(const std::filesystem::path& path, ReadMode mode = ReadMode::Strict);

/// Column names and units for CSV import. An empty run or channel column
/// means every row belongs to run 0 / channel 0. Zero header fields are
/// inferred from the data.
struct CsvMapping {
  std::string run_column = "run";
  std::string channel_column = "channel";
  std::string time_column = "t";
  std::string time_unit = "ns";  // ps, ns, us, ms, s
  char delimiter = ',';
  std::uint32_t resolution_ns = 1;
  std::uint64_t duration_ns = 0;
  std::uint32_t n_runs = 0;
  std::uint8_t n_channels = 0;
  double max_bad_fraction = 0.01;
};

struct CsvIssue {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string reason;
};

struct CsvImport {
  TimeTagStream stream;
  std::vector<CsvIssue> skipped;
};

/// Times are converted to ns, rounded to the nearest ns and floored to the
/// resolution; rows are sorted. Unparseable rows, negative times and rows
/// outside a declared header are skipped and listed; more than
/// max_bad_fraction of them throws IoError listing every bad line.
CsvImport import_csv(const std::filesystem::path& path, const CsvMapping& mapping = {});
CsvImport parse_csv(const std::string& text, const CsvMapping& mapping = {});

/// Columns run,channel,t_ns.
void export_csv(const std::filesystem::path& path, const TimeTagStream& stream);

/// Settings for the analysis pipeline run by `analyze` and `report`.
struct AnalysisConfig {
  std::uint64_t fano_bin_ns = 200'000;
  TimeRange background_window{0, 50'000'000};
  unsigned bootstrap_resamples = 200;
  std::uint64_t tia_bin_ns = 100;
  TimeRange tia_window{};  // empty: whole run
  double tia_background_cps = -1.0;  // < 0: dark + stray over all channels
  std::uint64_t lag_bin_ns = 4;
  std::uint64_t max_lag_ns = 3000;
  stats::G2Norm g2_norm = stats::G2Norm::Envelope;
  TimeRange g2_window{};  // empty: whole run
  double g2_zero_half_width_ns = 2.0;
  double g2zero_window_ms = 10.0;
  std::uint64_t coincidence_window_ns = 20;
  double dwell_ns = 0.0;  // <= 0: expected dwell of the emission model
  double alpha = 0.0;  // <= 0: fitted alpha

  friend bool operator==(const AnalysisConfig&, const AnalysisConfig&) = default;
};

struct ConfigFile {
  ExperimentConfig experiment{};
  AnalysisConfig analysis{};

  friend bool operator==(const ConfigFile&, const ConfigFile&) = default;
};

/// JSON config. Durations accept any of the suffixes _ns, _us, _ms, _s.
/// Throws ConfigError on malformed JSON, unknown keys or bad values;
/// physical validity is checked separately with validate().
ConfigFile parse_config(const std::string& text);
ConfigFile load_config(const std::filesystem::path& path);
/// Canonical form: every field, times in ns, profile as explicit knots.
std::string dump_config(const ConfigFile& config);

/// FNV-1a 64 over the bytes of `text`.
std::uint64_t fnv1a64(std::string_view text);

// Series writers; column layouts are listed in docs/outputs.md.
void write_fano_csv(const std::filesystem::path& path, const stats::FanoSeries& fs);
void write_tia_csv(const std::filesystem::path& path, const stats::TiaFit& fit);
void write_g2_csv(const std::filesystem::path& path, const stats::G2Histogram& h,
                  const std::vector<double>& theory = {});
void write_g2zero_csv(const std::filesystem::path& path, const stats::G2ZeroSeries& s);
void write_curve_csv(const std::filesystem::path& path, const std::string& x_name,
                     const std::vector<std::string>& y_names, const std::vector<double>& x,
                     const std::vector<std::vector<double>>& ys);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace photonstat::io
