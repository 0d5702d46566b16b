#include "photonstat/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

namespace photonstat::io {

using nlohmann::json;

namespace {

template <class T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <class T>
T get_le(const std::uint8_t* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(p[i]) << (8 * i));
  return v;
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_ttag(const TimeTagStream& stream) {
  std::vector<std::uint8_t> out;
  out.reserve(kTtagHeaderBytes + stream.size() * kTtagRecordBytes);
  for (char c : std::string_view("TTAG1")) out.push_back(static_cast<std::uint8_t>(c));
  const auto& h = stream.header();
  put_le<std::uint16_t>(out, kTtagVersion);
  put_le<std::uint32_t>(out, h.resolution_ns);
  put_le<std::uint8_t>(out, h.n_channels);
  put_le<std::uint32_t>(out, h.n_runs);
  put_le<std::uint64_t>(out, h.duration_ns);
  put_le<std::uint64_t>(out, stream.size());
  for (const auto& t : stream.tags()) {
    put_le<std::uint32_t>(out, t.run_id);
    put_le<std::uint8_t>(out, t.channel);
    put_le<std::uint64_t>(out, t.t_ns);
  }
  return out;
}

TtagRead decode_ttag(const std::vector<std::uint8_t>& bytes, ReadMode mode) {
  if (bytes.size() < 5 || std::string_view(reinterpret_cast<const char*>(bytes.data()), 5) != "TTAG1") {
    throw IoError("bad magic at byte offset 0: not a TTAG1 file");
  }
  if (bytes.size() < kTtagHeaderBytes) {
    throw IoError("truncated header at byte offset " + std::to_string(bytes.size()) + " (header is " +
                  std::to_string(kTtagHeaderBytes) + " bytes)");
  }
  const std::uint8_t* p = bytes.data() + 5;
  const auto version = get_le<std::uint16_t>(p);
  if (version != kTtagVersion) {
    throw IoError("unsupported TTAG1 version " + std::to_string(version) + " at byte offset 5");
  }
  StreamHeader h;
  h.resolution_ns = get_le<std::uint32_t>(p + 2);
  h.n_channels = get_le<std::uint8_t>(p + 6);
  h.n_runs = get_le<std::uint32_t>(p + 7);
  h.duration_ns = get_le<std::uint64_t>(p + 11);
  const auto n_records = get_le<std::uint64_t>(p + 19);

  const std::size_t body = bytes.size() - kTtagHeaderBytes;
  const std::uint64_t complete = body / kTtagRecordBytes;
  if (complete < n_records) {
    const std::uint64_t offset = kTtagHeaderBytes + complete * kTtagRecordBytes;
    throw IoError("truncated record " + std::to_string(complete) + " at byte offset " + std::to_string(offset) +
                  ": header declares " + std::to_string(n_records) + " records");
  }
  if (body != n_records * kTtagRecordBytes) {
    throw IoError("unexpected trailing data at byte offset " +
                  std::to_string(kTtagHeaderBytes + n_records * kTtagRecordBytes));
  }

  std::vector<TimeTag> tags(n_records);
  const std::uint8_t* r = bytes.data() + kTtagHeaderBytes;
  for (std::uint64_t i = 0; i < n_records; ++i, r += kTtagRecordBytes) {
    tags[i] = {get_le<std::uint32_t>(r), get_le<std::uint8_t>(r + 4), get_le<std::uint64_t>(r + 5)};
  }
  TtagRead out;
  try {
    out.stream = TimeTagStream(h, std::move(tags), mode == ReadMode::Strict ? OrderPolicy::Reject : OrderPolicy::Sort);
  } catch (const StreamError& e) {
    throw IoError(std::string("invalid TTAG1 records: ") + e.what());
  }
  if (out.stream.was_repaired()) out.warnings.push_back("records were not sorted by (run_id, t_ns); sorted on read");
  return out;
}

void write_ttag(const std::filesystem::path& path, const TimeTagStream& stream) {
  const auto bytes = encode_ttag(stream);
  auto out = open_out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

TtagRead read_ttag(const std::filesystem::path& path, ReadMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_ttag(bytes, mode);
}

namespace {

double unit_to_ns(const std::string& unit) {
  static const std::map<std::string, double> table{{"ps", 1e-3}, {"ns", 1.0}, {"us", 1e3}, {"ms", 1e6}, {"s", 1e9}};
  const auto it = table.find(unit);
  if (it == table.end()) throw IoError("unknown time unit '" + unit + "'");
  return it->second;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(delim, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
  }
  return out;
}

template <class T>
bool parse_field(std::string_view s, T& v) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && p == s.data() + s.size();
}

}  // namespace

CsvImport parse_csv(const std::string& text, const CsvMapping& mapping) {
  const double factor = unit_to_ns(mapping.time_unit);
  if (mapping.resolution_ns == 0) throw IoError("resolution must be positive");
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string_view> fields;

  // header
  std::optional<std::size_t> col_run, col_ch, col_t;
  std::size_t n_cols = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    fields = split(line, mapping.delimiter);
    n_cols = fields.size();
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (!mapping.run_column.empty() && fields[i] == mapping.run_column) col_run = i;
      if (!mapping.channel_column.empty() && fields[i] == mapping.channel_column) col_ch = i;
      if (fields[i] == mapping.time_column) col_t = i;
    }
    break;
  }
  if (n_cols == 0) throw IoError("CSV has no header line");
  if (!col_t) throw IoError("CSV header lacks time column '" + mapping.time_column + "'");
  if (!mapping.run_column.empty() && !col_run) throw IoError("CSV header lacks run column '" + mapping.run_column + "'");
  if (!mapping.channel_column.empty() && !col_ch) {
    throw IoError("CSV header lacks channel column '" + mapping.channel_column + "'");
  }

  CsvImport result;
  std::vector<TimeTag> tags;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    ++rows;
    fields = split(line, mapping.delimiter);
    auto bad = [&](std::string reason) { result.skipped.push_back({line_no, std::move(reason)}); };
    if (fields.size() != n_cols) {
      bad("expected " + std::to_string(n_cols) + " fields, found " + std::to_string(fields.size()));
      continue;
    }
    std::uint32_t run = 0;
    unsigned channel = 0;
    double t = 0.0;
    if (col_run && !parse_field(fields[*col_run], run)) {
      bad("unparseable run '" + std::string(fields[*col_run]) + "'");
      continue;
    }
    if (col_ch && (!parse_field(fields[*col_ch], channel) || channel > 255)) {
      bad("unparseable channel '" + std::string(fields[*col_ch]) + "'");
      continue;
    }
    if (!parse_field(fields[*col_t], t) || !std::isfinite(t)) {
      bad("unparseable time '" + std::string(fields[*col_t]) + "'");
      continue;
    }
    if (t < 0.0) {
      bad("negative time");
      continue;
    }
    const double t_ns = std::round(t * factor);
    if (t_ns >= 1.8e19) {
      bad("time out of range");
      continue;
    }
    auto tq = static_cast<std::uint64_t>(t_ns);
    tq -= tq % mapping.resolution_ns;
    if ((mapping.duration_ns && tq >= mapping.duration_ns) || (mapping.n_runs && run >= mapping.n_runs) ||
        (mapping.n_channels && channel >= mapping.n_channels)) {
      bad("outside the declared run, channel or duration");
      continue;
    }
    tags.push_back({run, static_cast<std::uint8_t>(channel), tq});
  }

  if (rows > 0 && static_cast<double>(result.skipped.size()) > mapping.max_bad_fraction * static_cast<double>(rows)) {
    std::string msg = std::to_string(result.skipped.size()) + " of " + std::to_string(rows) + " CSV rows are bad:";
    for (const auto& s : result.skipped) msg += "\n  line " + std::to_string(s.line) + ": " + s.reason;
    throw IoError(msg);
  }

  StreamHeader h;
  h.resolution_ns = mapping.resolution_ns;
  h.duration_ns = mapping.duration_ns;
  h.n_runs = mapping.n_runs;
  h.n_channels = mapping.n_channels;
  if (h.duration_ns == 0) {
    std::uint64_t max_t = 0;
    for (const auto& t : tags) max_t = std::max(max_t, t.t_ns);
    h.duration_ns = tags.empty() ? mapping.resolution_ns : max_t + mapping.resolution_ns;
  }
  if (h.n_runs == 0) {
    for (const auto& t : tags) h.n_runs = std::max(h.n_runs, t.run_id + 1);
  }
  if (h.n_channels == 0) {
    unsigned n = 1;
    for (const auto& t : tags) n = std::max(n, static_cast<unsigned>(t.channel) + 1);
    h.n_channels = static_cast<std::uint8_t>(std::min(n, 255u));
  }
  result.stream = TimeTagStream(h, std::move(tags), OrderPolicy::Sort);
  return result;
}

CsvImport import_csv(const std::filesystem::path& path, const CsvMapping& mapping) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), mapping);
}

void export_csv(const std::filesystem::path& path, const TimeTagStream& stream) {
  auto out = open_out(path);
  out << "run,channel,t_ns\n";
  for (const auto& t : stream.tags()) out << t.run_id << ',' << static_cast<unsigned>(t.channel) << ',' << t.t_ns << '\n';
}

// ---------------------------------------------------------------- config

namespace {

constexpr std::array<std::pair<const char*, double>, 4> kSuffixes{
    {{"_ns", 1.0}, {"_us", 1e3}, {"_ms", 1e6}, {"_s", 1e9}}};

// Tracks which keys of an object were read so leftovers can be reported.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError("'" + name_ + "' must be an object");
  }

  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("'" + name_ + "." + key + "' has the wrong type");
    }
  }

  /// A duration given as base_ns, base_us, base_ms or base_s.
  bool time(const std::string& base, double& out_ns) {
    bool found = false;
    for (const auto& [suffix, factor] : kSuffixes) {
      const std::string key = base + suffix;
      if (!j_.contains(key)) continue;
      if (found) throw ConfigError("'" + name_ + "." + base + "' is given more than once");
      const auto& v = raw(key);
      if (!v.is_number()) throw ConfigError("'" + name_ + "." + key + "' must be a number");
      out_ns = v.get<double>() * factor;
      found = true;
    }
    return found;
  }

  void time_u64(const std::string& base, std::uint64_t& out_ns) {
    double v = 0.0;
    if (!time(base, v)) return;
    if (!(v >= 0.0) || v > 1.8e19) throw ConfigError("'" + name_ + "." + base + "' must be >= 0");
    out_ns = static_cast<std::uint64_t>(std::llround(v));
  }

  void range(const std::string& base, TimeRange& out) {
    for (const auto& [suffix, factor] : kSuffixes) {
      const std::string key = base + suffix;
      if (!j_.contains(key)) continue;
      const auto& v = raw(key);
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw ConfigError("'" + name_ + "." + key + "' must be [begin, end]");
      }
      const double b = v[0].get<double>() * factor, e = v[1].get<double>() * factor;
      if (b < 0.0 || e < b) throw ConfigError("'" + name_ + "." + key + "' must satisfy 0 <= begin <= end");
      out = {static_cast<std::uint64_t>(std::llround(b)), static_cast<std::uint64_t>(std::llround(e))};
      return;
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError("unknown key '" + name_ + "." + it.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> used_;
};

EmissionMode parse_mode(const std::string& s) {
  if (s == "ideal") return EmissionMode::IdealPoisson;
  if (s == "burst") return EmissionMode::Burst;
  if (s == "mcwf") return EmissionMode::Mcwf;
  throw ConfigError("unknown emission mode '" + s + "' (ideal, burst, mcwf)");
}

stats::G2Norm parse_norm(const std::string& s) {
  if (s == "stationary") return stats::G2Norm::Stationary;
  if (s == "local") return stats::G2Norm::LocalRate;
  if (s == "envelope") return stats::G2Norm::Envelope;
  throw ConfigError("unknown g2 normalization '" + s + "' (stationary, local, envelope)");
}

void parse_source(Section& s, AtomSourceConfig& src, std::uint64_t duration_ns) {
  int shapes = 0;
  if (s.has("profile")) {
    ++shapes;
    const auto& arr = s.raw("profile");
    if (!arr.is_array()) throw ConfigError("'source.profile' must be an array of knots");
    src.profile.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Section k(arr[i], "source.profile[" + std::to_string(i) + "]");
      RateKnot knot;
      k.time_u64("t", knot.t_ns);
      k.get("rate", knot.atoms_per_s);
      k.finish();
      src.profile.push_back(knot);
    }
  }
  if (s.has("pulse")) {
    ++shapes;
    Section p(s.raw("pulse"), "source.pulse");
    std::uint64_t onset = 0, rise = 0;
    double decay = 0.0, peak = 0.0;
    unsigned knots = 200;
    p.time_u64("onset", onset);
    p.time_u64("rise", rise);
    p.time("decay", decay);
    p.get("peak_rate", peak);
    p.get("knots", knots);
    p.finish();
    src.profile = pulse_profile(onset, rise, peak, decay, duration_ns, knots);
  }
  if (s.has("constant_rate")) {
    ++shapes;
    double rate = 0.0;
    s.get("constant_rate", rate);
    src.profile = constant_profile(rate, duration_ns);
  }
  if (shapes > 1) throw ConfigError("'source' takes only one of profile, pulse, constant_rate");
  s.time_u64("onset_jitter", src.onset_jitter_ns);
}

void parse_two_level(Section& s, TwoLevelParams& p) {
  double gamma_mhz = 0.0;
  if (s.has("gamma_mhz")) {
    s.get("gamma_mhz", gamma_mhz);
    p.gamma = 2.0 * std::numbers::pi * gamma_mhz * 1e6;
  }
  s.get("gamma_rad_s", p.gamma);
  if (s.has("omega_over_gamma")) {
    double r = 0.0;
    s.get("omega_over_gamma", r);
    p.omega = r * p.gamma;
  }
  s.get("omega_rad_s", p.omega);
  if (s.has("delta_mhz")) {
    double d = 0.0;
    s.get("delta_mhz", d);
    p.delta = 2.0 * std::numbers::pi * d * 1e6;
  }
  s.get("delta_rad_s", p.delta);
  s.get("s", p.s);
}

}  // namespace

ConfigFile parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  ConfigFile cfg;
  Section top(root, "config");
  auto& ex = cfg.experiment;

  if (top.has("run")) {
    Section s(top.raw("run"), "run");
    s.get("n_runs", ex.run.n_runs);
    s.get("seed", ex.run.master_seed);
    s.time_u64("duration", ex.run.duration_ns);
    s.get("resolution_ns", ex.run.resolution_ns);
    s.finish();
  }
  ex.source.duration_ns = ex.run.duration_ns;
  if (top.has("source")) {
    Section s(top.raw("source"), "source");
    parse_source(s, ex.source, ex.run.duration_ns);
    s.finish();
  }
  if (top.has("emission")) {
    Section s(top.raw("emission"), "emission");
    if (s.has("mode")) {
      std::string m;
      s.get("mode", m);
      ex.emission.mode = parse_mode(m);
    }
    if (s.has("ideal")) {
      Section e(s.raw("ideal"), "emission.ideal");
      e.get("alpha", ex.emission.ideal.alpha);
      e.time("dwell", ex.emission.ideal.dwell_ns);
      e.finish();
    }
    if (s.has("burst")) {
      Section e(s.raw("burst"), "emission.burst");
      e.get("scatter_rate", ex.emission.burst.scatter_rate);
      if (e.has("dwell")) {
        std::string kind;
        e.get("dwell", kind);
        if (kind == "fixed") {
          ex.emission.burst.dwell = DwellKind::Fixed;
        } else if (kind == "exponential") {
          ex.emission.burst.dwell = DwellKind::Exponential;
        } else {
          throw ConfigError("'emission.burst.dwell' must be fixed or exponential");
        }
      }
      e.time("dwell", ex.emission.burst.dwell_ns);
      e.finish();
    }
    if (s.has("mcwf")) {
      Section e(s.raw("mcwf"), "emission.mcwf");
      parse_two_level(e, ex.emission.mcwf.two_level);
      e.get("p_dark", ex.emission.mcwf.p_dark);
      e.time("max_dwell", ex.emission.mcwf.max_dwell_ns);
      e.finish();
    }
    s.finish();
  }
  if (top.has("detector")) {
    Section s(top.raw("detector"), "detector");
    auto& d = ex.detector;
    s.get("p_det", d.p_det);
    s.get("n_channels", d.n_channels);
    s.get("split_ratio", d.split_ratio);
    s.get("dark_rate_cps", d.dark_rate_cps);
    s.time_u64("dead_time", d.dead_time_ns);
    s.get("stray_rate_cps", d.stray_rate_cps);
    s.finish();
  }
  if (top.has("analysis")) {
    Section s(top.raw("analysis"), "analysis");
    auto& a = cfg.analysis;
    s.time_u64("fano_bin", a.fano_bin_ns);
    s.range("background_window", a.background_window);
    s.get("bootstrap_resamples", a.bootstrap_resamples);
    s.time_u64("tia_bin", a.tia_bin_ns);
    s.range("tia_window", a.tia_window);
    s.get("tia_background_cps", a.tia_background_cps);
    s.time_u64("lag_bin", a.lag_bin_ns);
    s.time_u64("max_lag", a.max_lag_ns);
    if (s.has("g2_norm")) {
      std::string n;
      s.get("g2_norm", n);
      a.g2_norm = parse_norm(n);
    }
    s.range("g2_window", a.g2_window);
    s.time("g2_zero_half_width", a.g2_zero_half_width_ns);
    s.get("g2zero_window_ms", a.g2zero_window_ms);
    s.time_u64("coincidence_window", a.coincidence_window_ns);
    s.time("dwell", a.dwell_ns);
    s.get("alpha", a.alpha);
    s.finish();
  }
  top.finish();
  return cfg;
}

ConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const ConfigFile& config) {
  const auto& ex = config.experiment;
  const auto& a = config.analysis;
  json knots = json::array();
  for (const auto& k : ex.source.profile) knots.push_back({{"t_ns", k.t_ns}, {"rate", k.atoms_per_s}});
  const auto& tl = ex.emission.mcwf.two_level;
  const auto range = [](TimeRange r) { return json::array({r.begin_ns, r.end_ns}); };
  json j = {
      {"run",
       {{"n_runs", ex.run.n_runs},
        {"seed", ex.run.master_seed},
        {"duration_ns", ex.run.duration_ns},
        {"resolution_ns", ex.run.resolution_ns}}},
      {"source", {{"profile", knots}, {"onset_jitter_ns", ex.source.onset_jitter_ns}}},
      {"emission",
       {{"mode", to_string(ex.emission.mode)},
        {"ideal", {{"alpha", ex.emission.ideal.alpha}, {"dwell_ns", ex.emission.ideal.dwell_ns}}},
        {"burst",
         {{"scatter_rate", ex.emission.burst.scatter_rate},
          {"dwell", to_string(ex.emission.burst.dwell)},
          {"dwell_ns", ex.emission.burst.dwell_ns}}},
        {"mcwf",
         {{"gamma_rad_s", tl.gamma},
          {"omega_rad_s", tl.omega},
          {"delta_rad_s", tl.delta},
          {"s", tl.s},
          {"p_dark", ex.emission.mcwf.p_dark},
          {"max_dwell_ns", ex.emission.mcwf.max_dwell_ns}}}}},
      {"detector",
       {{"p_det", ex.detector.p_det},
        {"n_channels", ex.detector.n_channels},
        {"split_ratio", ex.detector.split_ratio},
        {"dark_rate_cps", ex.detector.dark_rate_cps},
        {"dead_time_ns", ex.detector.dead_time_ns},
        {"stray_rate_cps", ex.detector.stray_rate_cps}}},
      {"analysis",
       {{"fano_bin_ns", a.fano_bin_ns},
        {"background_window_ns", range(a.background_window)},
        {"bootstrap_resamples", a.bootstrap_resamples},
        {"tia_bin_ns", a.tia_bin_ns},
        {"tia_window_ns", range(a.tia_window)},
        {"tia_background_cps", a.tia_background_cps},
        {"lag_bin_ns", a.lag_bin_ns},
        {"max_lag_ns", a.max_lag_ns},
        {"g2_norm", stats::to_string(a.g2_norm)},
        {"g2_window_ns", range(a.g2_window)},
        {"g2_zero_half_width_ns", a.g2_zero_half_width_ns},
        {"g2zero_window_ms", a.g2zero_window_ms},
        {"coincidence_window_ns", a.coincidence_window_ns},
        {"dwell_ns", a.dwell_ns},
        {"alpha", a.alpha}}}};
  return j.dump(2) + "\n";
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------- series

void write_fano_csv(const std::filesystem::path& path, const stats::FanoSeries& fs) {
  auto out = open_out(path);
  out << "bin,t_start_ns,t_end_ns,mean,variance,ratio,ratio_lo,ratio_hi\n";
  for (std::size_t k = 0; k < fs.mean.size(); ++k) {
    out << k << ',' << k * fs.bin_ns << ',' << (k + 1) * fs.bin_ns << ',' << num(fs.mean[k]) << ','
        << num(fs.variance[k]) << ',' << num(fs.ratio[k]) << ',' << num(fs.ratio_lo[k]) << ','
        << num(fs.ratio_hi[k]) << '\n';
  }
}

void write_tia_csv(const std::filesystem::path& path, const stats::TiaFit& fit) {
  auto out = open_out(path);
  out << "k_begin,k_end,interval_ns,count,probability,model\n";
  for (const auto& b : fit.histogram) {
    const double mid = 0.5 * static_cast<double>(b.k_begin + b.k_end) * static_cast<double>(fit.interval_bin_ns);
    out << b.k_begin << ',' << b.k_end << ',' << num(mid) << ',' << b.count << ',' << num(b.probability) << ','
        << num(b.model) << '\n';
  }
}

void write_g2_csv(const std::filesystem::path& path, const stats::G2Histogram& h, const std::vector<double>& theory) {
  auto out = open_out(path);
  out << "lag_ns,counts,norm,accidental,g2,sigma";
  if (!theory.empty()) out << ",theory";
  out << '\n';
  for (std::size_t j = 0; j < h.g2.size(); ++j) {
    out << num(h.raw.lag_ns(j)) << ',' << h.raw.counts[j] << ',' << num(h.norm[j]) << ',' << num(h.accidental[j])
        << ',' << num(h.g2[j]) << ',' << num(h.sigma[j]);
    if (!theory.empty()) out << ',' << num(theory[j]);
    out << '\n';
  }
}

void write_g2zero_csv(const std::filesystem::path& path, const stats::G2ZeroSeries& s) {
  auto out = open_out(path);
  out << "t_start_ns,t_end_ns,detections,coincidences,norm,g2,sigma,rate_cps,mean_atoms,alpha_n,overlay,usable\n";
  for (std::size_t w = 0; w < s.windows.size(); ++w) {
    out << s.windows[w].begin_ns << ',' << s.windows[w].end_ns << ',' << s.detections[w] << ',' << s.coincidences[w]
        << ',' << num(s.norm[w]) << ',' << num(s.g2[w]) << ',' << num(s.sigma[w]) << ',' << num(s.rate_cps[w]) << ','
        << num(s.mean_atoms[w]) << ',' << num(s.alpha * s.mean_atoms[w]) << ',' << num(s.overlay[w]) << ','
        << (s.usable[w] ? 1 : 0) << '\n';
  }
}

void write_curve_csv(const std::filesystem::path& path, const std::string& x_name,
                     const std::vector<std::string>& y_names, const std::vector<double>& x,
                     const std::vector<std::vector<double>>& ys) {
  if (ys.size() != y_names.size()) throw std::invalid_argument("column names and data differ in count");
  auto out = open_out(path);
  out << x_name;
  for (const auto& n : y_names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < x.size(); ++i) {
    out << num(x[i]);
    for (const auto& y : ys) out << ',' << num(y.at(i));
    out << '\n';
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace photonstat::io
