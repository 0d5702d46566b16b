#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include "photonstat/correlator.hpp"
#include "photonstat/counts.hpp"
#include "photonstat/g2.hpp"
#include "photonstat/io.hpp"
#include "photonstat/rng.hpp"
#include "photonstat/simulator.hpp"
#include "photonstat/theory.hpp"
#include "photonstat/tia.hpp"

#ifndef PHOTONSTAT_VERSION
#define PHOTONSTAT_VERSION "dev"
#endif

namespace photonstat::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Bad input that should exit with kUsageError.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

std::uint64_t file_hash(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return io::fnv1a64(s.str());
}

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("PHOTONSTAT_SEED");
  if (!v || !*v) return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long s = std::stoull(v, &used, 0);
    if (v[used] != '\0') throw std::invalid_argument(v);
    return s;
  } catch (const std::exception&) {
    throw UsageError(std::string("PHOTONSTAT_SEED is not an unsigned integer: ") + v);
  }
}

/// --seed, else PHOTONSTAT_SEED, else the value already in the config.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t from_config) {
  if (flag) return *flag;
  if (auto e = env_seed()) return *e;
  return from_config;
}

EmissionMode parse_mode(const std::string& s) {
  if (s == "ideal") return EmissionMode::IdealPoisson;
  if (s == "burst") return EmissionMode::Burst;
  if (s == "mcwf") return EmissionMode::Mcwf;
  throw UsageError("unknown mode '" + s + "'");
}

stats::G2Norm parse_norm(const std::string& s) {
  if (s == "stationary") return stats::G2Norm::Stationary;
  if (s == "local") return stats::G2Norm::LocalRate;
  if (s == "envelope") return stats::G2Norm::Envelope;
  throw UsageError("unknown normalization '" + s + "'");
}

void check_valid(const ExperimentConfig& config) {
  const auto violations = validate(config);
  if (violations.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& v : violations) msg += "\n  " + v.code + ": " + v.message;
  throw UsageError(msg);
}

json manifest(const std::vector<std::string>& args, std::uint64_t seed, const io::ConfigFile* config,
              const std::vector<fs::path>& inputs) {
  json m;
  m["tool"] = "photonstat";
  m["versions"] = {{"photonstat", PHOTONSTAT_VERSION}, {"compiler", __VERSION__}};
  m["command"] = std::vector<std::string>(args.begin() + 1, args.end());
  m["seed"] = seed;
  if (config) {
    const std::string text = io::dump_config(*config);
    m["config_hash"] = hex64(io::fnv1a64(text));
    m["config"] = json::parse(text);
  }
  json in = json::array();
  for (const auto& p : inputs) in.push_back({{"path", p.string()}, {"fnv1a64", hex64(file_hash(p))}});
  m["inputs"] = in;
  return m;
}

void write_json(const fs::path& p, const json& j) { io::write_text(p, j.dump(2) + "\n"); }

json to_json(const stats::AlphaFit& f) {
  return {{"alpha", f.alpha},
          {"alpha_ci", {f.alpha_lo, f.alpha_hi}},
          {"alpha_se", f.alpha_se},
          {"background_b", f.background_b},
          {"background_se", f.background_se},
          {"slope", f.slope},
          {"intercept", f.intercept},
          {"covariance", {{f.covariance[0][0], f.covariance[0][1]}, {f.covariance[1][0], f.covariance[1][1]}}},
          {"chi2", f.chi2},
          {"dof", f.dof},
          {"rms_residual", f.rms_residual},
          {"n_bins", f.n_bins},
          {"n_background_bins", f.n_background_bins},
          {"background_ratio", f.background_ratio},
          {"warnings", f.warnings}};
}

json to_json(const stats::TiaFit& f) {
  json comps = json::array();
  for (const auto& c : f.components) {
    comps.push_back({{"weight", c.weight}, {"q", c.q}, {"rate_hz", c.rate_hz}, {"rate_se_hz", c.rate_se_hz}});
  }
  return {{"interval_bin_ns", f.interval_bin_ns},
          {"n_intervals", f.n_intervals},
          {"components", comps},
          {"single_component", f.single_component},
          {"fallback_reason", f.fallback_reason},
          {"chi2", f.chi2},
          {"dof", f.dof},
          {"chi2_single", f.chi2_single},
          {"normalization", f.normalization},
          {"cluster_gap_bins", f.cluster_gap_k},
          {"n_clusters", f.n_clusters},
          {"cluster_rate_hz", f.cluster_rate_hz},
          {"cluster_rate_se_hz", f.cluster_rate_se_hz},
          {"atom_rate_hz", f.atom_rate_hz},
          {"atom_rate_se_hz", f.atom_rate_se_hz}};
}

json g2_summary(const stats::G2Histogram& h, double half_width_ns) {
  const std::size_t z = h.raw.zero_bin();
  const auto zero_frame = stats::background_frame(h.norm[z], h.accidental[z]);
  const auto w = stats::g2_window(h, half_width_ns);
  const auto window_frame = stats::background_frame(w.norm, w.accidental);
  json j = {{"norm", stats::to_string(h.mode)},
            {"lag_bin_ns", h.raw.lag_bin_ns},
            {"max_lag_ns", h.raw.max_lag_ns},
            {"n_a", h.raw.n_a},
            {"n_b", h.raw.n_b},
            {"g2_zero_bin", h.g2[z]},
            {"g2_zero_bin_sigma", h.sigma[z]},
            {"window_half_width_ns", half_width_ns},
            {"g2_zero_window", w.g2},
            {"g2_zero_window_sigma", w.sigma}};
  if (zero_frame.signal > 0.0) {
    const auto c = stats::g2_background_correct(h.g2[z], zero_frame.signal, zero_frame.background, h.sigma[z]);
    j["corrected_zero_bin"] = {{"value", c.value}, {"sigma", c.sigma}, {"inconsistent", c.inconsistent}};
  }
  if (window_frame.signal > 0.0) {
    const auto c = stats::g2_background_correct(w.g2, window_frame.signal, window_frame.background, w.sigma);
    j["corrected_window"] = {{"value", c.value}, {"sigma", c.sigma}, {"inconsistent", c.inconsistent}};
  }
  return j;
}

json to_json(const stats::G2ZeroSeries& s) {
  std::size_t usable = 0, within = 0;
  for (std::size_t w = 0; w < s.g2.size(); ++w) {
    if (!s.usable[w]) continue;
    ++usable;
    if (std::abs(s.g2[w] - s.overlay[w]) <= 2.0 * s.sigma[w]) ++within;
  }
  return {{"window_ns", s.window_ns},
          {"coincidence_window_ns", s.coincidence_window_ns},
          {"bandwidth_ns", s.bandwidth_ns},
          {"alpha", s.alpha},
          {"dwell_ns", s.dwell_ns},
          {"background_rate_cps", s.background_rate_cps},
          {"windows", s.windows.size()},
          {"usable_windows", usable},
          {"within_2sigma_of_overlay", within}};
}

TimeRange whole_if_empty(TimeRange r, std::uint64_t duration) { return r.empty() ? TimeRange{0, duration} : r; }

double background_cps(const DetectorConfig& d) {
  return (d.dark_rate_cps + d.stray_rate_cps) * static_cast<double>(d.n_channels);
}

TimeTagStream load_stream(const fs::path& p, bool lenient, std::ostream& err) {
  auto r = io::read_ttag(p, lenient ? io::ReadMode::Lenient : io::ReadMode::Strict);
  for (const auto& w : r.warnings) err << "warning: " << w << '\n';
  return std::move(r.stream);
}

std::pair<TimeTagStream, TimeTagStream> channel_pair(const TimeTagStream& s, unsigned a, unsigned b) {
  if (a >= s.n_channels() || b >= s.n_channels()) {
    throw UsageError("channel out of range: stream has " + std::to_string(s.n_channels()) + " channels");
  }
  if (a == b) throw UsageError("g2 needs two distinct channels");
  return {s.channel(static_cast<std::uint8_t>(a)), s.channel(static_cast<std::uint8_t>(b))};
}

void write_stream(std::ostream& out, const std::optional<fs::path>& path,
                  const std::function<void(const fs::path&)>& to_file, const std::string& tmp_name) {
  if (path) {
    to_file(*path);
    return;
  }
  const fs::path tmp = fs::temp_directory_path() / tmp_name;
  to_file(tmp);
  std::ifstream in(tmp);
  out << in.rdbuf();
  fs::remove(tmp);
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Photon statistics of single atoms: simulation, correlation and analysis", "photonstat"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PHOTONSTAT_VERSION);

  // shared
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::optional<std::uint32_t> runs;
  std::string mode;
  fs::path config_path, out_path, in_path;
  bool lenient = false;

  auto* simulate = app.add_subcommand("simulate", "Simulate time tags and write a TTAG1 file");
  simulate->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", out_path, "Output TTAG1 path")->required();
  simulate->add_option("--runs", runs, "Override number of runs");
  simulate->add_option("--seed", seed, "Master seed (default: PHOTONSTAT_SEED, then config)");
  simulate->add_option("--mode", mode, "Emission mode")->check(CLI::IsMember({"ideal", "burst", "mcwf"}));
  simulate->add_option("--threads", threads, "Worker threads, 0 = all cores");
  bool export_csv = false;
  simulate->add_flag("--csv", export_csv, "Also write run,channel,t_ns CSV next to the output");

  auto* analyze = app.add_subcommand("analyze", "Analyze a TTAG1 file");
  analyze->require_subcommand(1);
  std::optional<fs::path> analysis_config;
  auto add_common = [&](CLI::App* c) {
    c->add_option("--in", in_path, "Input TTAG1 file")->required()->check(CLI::ExistingFile);
    c->add_option("--out", out_path, "Output directory")->required();
    c->add_option("--config", analysis_config, "Config whose analysis section supplies defaults")
        ->check(CLI::ExistingFile);
    c->add_flag("--lenient", lenient, "Sort unsorted records instead of rejecting the file");
  };
  auto* a_stats = analyze->add_subcommand("stats", "Fano series and alpha fit");
  add_common(a_stats);
  std::optional<double> bin_us;
  std::vector<double> background_ms;
  std::optional<unsigned> resamples;
  a_stats->add_option("--bin-us", bin_us, "Count bin width in us");
  a_stats->add_option("--background-ms", background_ms, "Background window begin end, ms")->expected(2);
  a_stats->add_option("--resamples", resamples, "Bootstrap resamples");
  a_stats->add_option("--seed", seed, "Bootstrap seed");
  a_stats->add_option("--threads", threads, "Worker threads");

  auto* a_tia = analyze->add_subcommand("tia", "Time-interval analysis");
  add_common(a_tia);
  std::optional<std::uint64_t> tia_bin_ns;
  std::vector<double> window_ms;
  std::optional<double> background;
  a_tia->add_option("--bin-ns", tia_bin_ns, "Interval bin width in ns");
  a_tia->add_option("--window-ms", window_ms, "Time range begin end, ms")->expected(2);
  a_tia->add_option("--background-cps", background, "Background rate subtracted from the slow rate");

  auto* a_g2 = analyze->add_subcommand("g2", "Normalized cross-correlation between two channels");
  add_common(a_g2);
  unsigned ch_a = 0, ch_b = 1;
  std::optional<std::uint64_t> lag_bin_ns, max_lag_ns;
  std::string norm;
  std::optional<double> half_width_ns;
  a_g2->add_option("--ch-a", ch_a, "Start channel");
  a_g2->add_option("--ch-b", ch_b, "Stop channel");
  a_g2->add_option("--lag-bin-ns", lag_bin_ns, "Lag bin width");
  a_g2->add_option("--max-lag-ns", max_lag_ns, "Largest lag");
  a_g2->add_option("--norm", norm, "Normalization")->check(CLI::IsMember({"stationary", "local", "envelope"}));
  a_g2->add_option("--window-ms", window_ms, "Time range begin end, ms")->expected(2);
  a_g2->add_option("--zero-half-width-ns", half_width_ns, "Half width of the pooled g2(0) window");
  a_g2->add_option("--threads", threads, "Worker threads");

  auto* a_g2zero = analyze->add_subcommand("g2zero", "g2(0) per arrival-time window with the flux overlay");
  add_common(a_g2zero);
  std::optional<double> g2zero_window_ms, alpha, dwell_ns;
  std::optional<std::uint64_t> coincidence_ns;
  a_g2zero->add_option("--ch-a", ch_a, "First channel");
  a_g2zero->add_option("--ch-b", ch_b, "Second channel");
  a_g2zero->add_option("--window-ms", g2zero_window_ms, "Arrival-time window, ms");
  a_g2zero->add_option("--coincidence-ns", coincidence_ns, "Full coincidence window, ns");
  a_g2zero->add_option("--alpha", alpha, "Counts per atom");
  a_g2zero->add_option("--dwell-ns", dwell_ns, "Atom dwell time, ns");
  a_g2zero->add_option("--background-cps", background, "Background rate, both channels");

  auto* theory_cmd = app.add_subcommand("theory", "Evaluate theory curves");
  theory_cmd->require_subcommand(1);
  std::optional<fs::path> theory_out;
  double omega_over_gamma = 2.3, delta_mhz = 0.0, gamma_mhz = 6.07, sat = 3.5;
  double t_max_ns = 500.0, t_step_ns = 1.0;
  auto* t_g2 = theory_cmd->add_subcommand("g2", "Two-level g2(tau) as CSV lag_ns,g2");
  t_g2->add_option("--omega-over-gamma", omega_over_gamma, "Rabi frequency in units of gamma")
      ->check(CLI::NonNegativeNumber);
  t_g2->add_option("--delta-mhz", delta_mhz, "Detuning / 2pi, MHz");
  t_g2->add_option("--gamma-mhz", gamma_mhz, "Linewidth / 2pi, MHz")->check(CLI::PositiveNumber);
  t_g2->add_option("--s", sat, "Saturation parameter, used when omega is 0");
  t_g2->add_option("--max-lag-ns", t_max_ns, "Largest lag")->check(CLI::NonNegativeNumber);
  t_g2->add_option("--step-ns", t_step_ns, "Lag step")->check(CLI::PositiveNumber);
  t_g2->add_option("--out", theory_out, "Output CSV (default stdout)");

  auto* t_bounds = theory_cmd->add_subcommand("bounds", "g2(0) flux curve and photon-number bound");
  double b_alpha = 1.08, n_min = 1e-3, n_max = 10.0;
  unsigned n_points = 61;
  t_bounds->add_option("--alpha", b_alpha, "Counts per atom")->check(CLI::PositiveNumber);
  t_bounds->add_option("--min-atoms", n_min, "Smallest mean atom number")->check(CLI::PositiveNumber);
  t_bounds->add_option("--max-atoms", n_max, "Largest mean atom number")->check(CLI::PositiveNumber);
  t_bounds->add_option("--points", n_points, "Points, log spaced")->check(CLI::Range(2u, 100000u));
  t_bounds->add_option("--out", theory_out, "Output CSV (default stdout)");

  auto* t_rates = theory_cmd->add_subcommand("rates", "Scattering and detection budget as JSON");
  double r_alpha = 1.08, p_det = 0.009, na = 0.275, na_new = 0.53;
  t_rates->add_option("--s", sat, "Saturation parameter")->check(CLI::NonNegativeNumber);
  t_rates->add_option("--gamma-mhz", gamma_mhz, "Linewidth / 2pi, MHz")->check(CLI::PositiveNumber);
  t_rates->add_option("--alpha", r_alpha, "Counts per atom")->check(CLI::NonNegativeNumber);
  t_rates->add_option("--p-det", p_det, "Photon detection efficiency")->check(CLI::Range(0.0, 1.0));
  t_rates->add_option("--na", na, "Numerical aperture of the current optics")->check(CLI::Range(0.0, 1.0));
  t_rates->add_option("--na-new", na_new, "Numerical aperture to project to")->check(CLI::Range(0.0, 1.0));
  t_rates->add_option("--out", theory_out, "Output JSON (default stdout)");

  auto* report = app.add_subcommand("report", "Simulate and run the whole analysis chain");
  report->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
  report->add_option("--out", out_path, "Output directory")->required();
  report->add_option("--runs", runs, "Override number of runs");
  report->add_option("--seed", seed, "Master seed");
  report->add_option("--mode", mode, "Emission mode")->check(CLI::IsMember({"ideal", "burst", "mcwf"}));
  report->add_option("--threads", threads, "Worker threads");
  bool save_tags = false;
  report->add_flag("--save-tags", save_tags, "Also write the simulated tags as tags.ttag");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return kUsageError;
  }

  try {
    const auto load_experiment = [&](const fs::path& p) {
      io::ConfigFile cfg = io::load_config(p);
      auto& ex = cfg.experiment;
      if (runs) ex.run.n_runs = *runs;
      if (!mode.empty()) ex.emission.mode = parse_mode(mode);
      ex.run.master_seed = resolve_seed(seed, ex.run.master_seed);
      check_valid(ex);
      return cfg;
    };
    const auto analysis_defaults = [&]() {
      return analysis_config ? io::load_config(*analysis_config).analysis : io::AnalysisConfig{};
    };

    if (simulate->parsed()) {
      const auto cfg = load_experiment(config_path);
      const auto data = sim::run_experiment(cfg.experiment, threads);
      io::write_ttag(out_path, data.stream);
      if (export_csv) io::export_csv(fs::path(out_path).replace_extension(".csv"), data.stream);
      write_json(out_path.string() + ".manifest.json",
                 manifest(args, cfg.experiment.run.master_seed, &cfg, {config_path}));
      out << "wrote " << data.stream.size() << " tags in " << data.stream.n_runs() << " runs to " << out_path.string()
          << '\n';
      return kOk;
    }

    if (analyze->parsed()) {
      const auto a = analysis_defaults();
      const auto stream = load_stream(in_path, lenient, err);
      fs::create_directories(out_path);
      const std::uint64_t used_seed = resolve_seed(seed, 1);
      std::vector<fs::path> inputs{in_path};
      if (analysis_config) inputs.push_back(*analysis_config);

      if (a_stats->parsed()) {
        const std::uint64_t bin = bin_us ? static_cast<std::uint64_t>(std::llround(*bin_us * 1e3)) : a.fano_bin_ns;
        TimeRange bg = a.background_window;
        if (!background_ms.empty()) {
          bg = {static_cast<std::uint64_t>(std::llround(background_ms[0] * 1e6)),
                static_cast<std::uint64_t>(std::llround(background_ms[1] * 1e6))};
        }
        const auto bc = stats::bin_counts(stream, bin);
        stats::AlphaFitOptions opt;
        opt.bootstrap.resamples = resamples.value_or(a.bootstrap_resamples);
        opt.bootstrap.seed = used_seed;
        opt.bootstrap.threads = threads;
        const auto fano = stats::fano_series(bc, opt.bootstrap);
        const auto fit = stats::fit_alpha(fano, bc, bg, opt);
        io::write_fano_csv(out_path / "fano.csv", fano);
        json j = to_json(fit);
        j["p_detection"] = theory::detection_probability(std::max(fit.alpha, 0.0));
        write_json(out_path / "stats.json", j);
      } else if (a_tia->parsed()) {
        TimeRange range = whole_if_empty(a.tia_window, stream.duration_ns());
        if (!window_ms.empty()) {
          range = {static_cast<std::uint64_t>(std::llround(window_ms[0] * 1e6)),
                   static_cast<std::uint64_t>(std::llround(window_ms[1] * 1e6))};
        }
        stats::TiaOptions opt;
        opt.background_rate_hz = background.value_or(std::max(a.tia_background_cps, 0.0));
        const auto fit = stats::tia(stream, tia_bin_ns.value_or(a.tia_bin_ns), range, opt);
        io::write_tia_csv(out_path / "tia.csv", fit);
        write_json(out_path / "tia.json", to_json(fit));
      } else if (a_g2->parsed()) {
        const auto [sa, sb] = channel_pair(stream, ch_a, ch_b);
        TimeRange range = whole_if_empty(a.g2_window, stream.duration_ns());
        if (!window_ms.empty()) {
          range = {static_cast<std::uint64_t>(std::llround(window_ms[0] * 1e6)),
                   static_cast<std::uint64_t>(std::llround(window_ms[1] * 1e6))};
        }
        const auto raw = corr::cross_correlate(sa, sb, lag_bin_ns.value_or(a.lag_bin_ns),
                                               max_lag_ns.value_or(a.max_lag_ns), range, threads);
        stats::G2Options opt;
        opt.mode = norm.empty() ? a.g2_norm : parse_norm(norm);
        const auto h = stats::g2_normalize(raw, sa, sb, opt);
        io::write_g2_csv(out_path / "g2.csv", h);
        write_json(out_path / "g2.json", g2_summary(h, half_width_ns.value_or(a.g2_zero_half_width_ns)));
      } else if (a_g2zero->parsed()) {
        const auto [sa, sb] = channel_pair(stream, ch_a, ch_b);
        const double alpha_used = alpha.value_or(a.alpha);
        if (!(alpha_used > 0.0)) throw UsageError("g2zero needs --alpha (or analysis.alpha in --config)");
        stats::G2ZeroOptions opt;
        opt.dwell_ns = dwell_ns.value_or(a.dwell_ns > 0.0 ? a.dwell_ns : opt.dwell_ns);
        opt.background_rate_cps = background.value_or(0.0);
        const auto s = stats::g2_zero_series(sa, sb, g2zero_window_ms.value_or(a.g2zero_window_ms),
                                             coincidence_ns.value_or(a.coincidence_window_ns), alpha_used, opt);
        io::write_g2zero_csv(out_path / "g2zero.csv", s);
        write_json(out_path / "g2zero.json", to_json(s));
      }
      write_json(out_path / "manifest.json", manifest(args, used_seed, nullptr, inputs));
      return kOk;
    }

    if (theory_cmd->parsed()) {
      if (t_g2->parsed()) {
        TwoLevelParams p;
        p.gamma = 2.0 * std::numbers::pi * gamma_mhz * 1e6;
        p.omega = omega_over_gamma * p.gamma;
        p.delta = 2.0 * std::numbers::pi * delta_mhz * 1e6;
        p.s = sat;
        std::vector<double> lags;
        for (double t = 0.0; t <= t_max_ns + 1e-9 * t_step_ns; t += t_step_ns) lags.push_back(t);
        const auto curve = theory::g2_analytic(p, lags);
        write_stream(out, theory_out,
                     [&](const fs::path& f) { io::write_curve_csv(f, "lag_ns", {"g2"}, curve.lags_ns, {curve.values}); },
                     "photonstat_theory_g2.csv");
      } else if (t_bounds->parsed()) {
        if (n_max <= n_min) throw UsageError("--max-atoms must exceed --min-atoms");
        std::vector<double> n, x, flux, photons, bound;
        for (unsigned i = 0; i < n_points; ++i) {
          const double v = n_min * std::pow(n_max / n_min, static_cast<double>(i) / (n_points - 1));
          n.push_back(v);
          x.push_back(b_alpha * v);
          flux.push_back(theory::g2_zero_vs_flux(b_alpha, v));
          photons.push_back(theory::conditional_mean_photons(b_alpha * v));
          bound.push_back(theory::g2_lower_bound_n(photons.back()));
        }
        write_stream(out, theory_out,
                     [&](const fs::path& f) {
                       io::write_curve_csv(f, "mean_atoms", {"alpha_n", "g2_zero", "mean_photons", "g2_bound_n"}, n,
                                           {x, flux, photons, bound});
                     },
                     "photonstat_theory_bounds.csv");
      } else if (t_rates->parsed()) {
        TwoLevelParams p;
        p.gamma = 2.0 * std::numbers::pi * gamma_mhz * 1e6;
        p.s = sat;
        const double a_new = theory::alpha_na_scaling(r_alpha, na, na_new);
        json j = {{"excited_population", theory::excited_population_ss(p)},
                  {"scattering_rate_per_s", theory::scattering_rate(p)},
                  {"alpha", r_alpha},
                  {"p_detection", theory::detection_probability(r_alpha)},
                  {"scattered_photons", p_det > 0.0 ? stats::scattered_photons(r_alpha, p_det) : 0.0},
                  {"collection_fraction", theory::collection_fraction(na)},
                  {"collection_fraction_new", theory::collection_fraction(na_new)},
                  {"alpha_new", a_new},
                  {"p_detection_new", theory::detection_probability(a_new)}};
        write_stream(out, theory_out, [&](const fs::path& f) { io::write_text(f, j.dump(2) + "\n"); },
                     "photonstat_theory_rates.json");
      }
      return kOk;
    }

    if (report->parsed()) {
      const auto cfg = load_experiment(config_path);
      const auto& ex = cfg.experiment;
      const auto& a = cfg.analysis;
      const std::uint64_t master = ex.run.master_seed;
      fs::create_directories(out_path);
      const auto data = sim::run_experiment(ex, threads);
      const auto& stream = data.stream;
      if (save_tags) io::write_ttag(out_path / "tags.ttag", stream);

      json summary;
      {
        std::uint64_t atoms = 0, emitted = 0, detected = 0, bg = 0;
        for (const auto& r : data.runs) {
          atoms += r.atoms;
          emitted += r.emitted;
          detected += r.detected;
          bg += r.background;
        }
        summary["dataset"] = {{"runs", stream.n_runs()}, {"tags", stream.size()},    {"atoms", atoms},
                              {"emitted", emitted},      {"detected", detected},     {"background", bg},
                              {"mode", to_string(ex.emission.mode)}};
      }
      const double expected = sim::expected_alpha(ex);
      summary["expected"] = {{"alpha", expected},
                             {"p_detection", theory::detection_probability(expected)},
                             {"scattered_photons", stats::scattered_photons(expected, ex.detector.p_det)}};

      // Fano series and alpha
      const auto bc = stats::bin_counts(stream, a.fano_bin_ns);
      stats::AlphaFitOptions fopt;
      fopt.bootstrap.resamples = a.bootstrap_resamples;
      fopt.bootstrap.seed = derive_seed(master, 0xF1'60'02);
      fopt.bootstrap.threads = threads;
      const auto fano = stats::fano_series(bc, fopt.bootstrap);
      const auto fit = stats::fit_alpha(fano, bc, a.background_window, fopt);
      io::write_fano_csv(out_path / "fig2_fano.csv", fano);
      summary["alpha_fit"] = to_json(fit);
      summary["alpha"] = fit.alpha;
      summary["p_detection"] = theory::detection_probability(std::max(fit.alpha, 0.0));
      summary["scattered_photons"] = stats::scattered_photons(fit.alpha, ex.detector.p_det);

      // interval statistics
      stats::TiaOptions topt;
      topt.background_rate_hz = a.tia_background_cps >= 0.0 ? a.tia_background_cps : background_cps(ex.detector);
      const auto tfit = stats::tia(stream, a.tia_bin_ns, whole_if_empty(a.tia_window, stream.duration_ns()), topt);
      io::write_tia_csv(out_path / "fig3_tia.csv", tfit);
      summary["tia"] = to_json(tfit);

      // correlations, needs two channels
      if (stream.n_channels() >= 2) {
        const auto [sa, sb] = channel_pair(stream, 0, 1);
        const auto raw =
            corr::cross_correlate(sa, sb, a.lag_bin_ns, a.max_lag_ns, whole_if_empty(a.g2_window, stream.duration_ns()),
                                  threads);
        stats::G2Options gopt;
        gopt.mode = a.g2_norm;
        const auto h = stats::g2_normalize(raw, sa, sb, gopt);
        std::vector<double> model;
        if (ex.emission.mode == EmissionMode::Mcwf) model = stats::g2_expected(raw, ex.emission.mcwf.two_level);
        io::write_g2_csv(out_path / "fig4a_g2.csv", h, model);
        summary["g2"] = g2_summary(h, a.g2_zero_half_width_ns);

        stats::G2ZeroOptions zopt;
        zopt.dwell_ns = a.dwell_ns > 0.0 ? a.dwell_ns : sim::expected_dwell_ns(ex);
        zopt.background_rate_cps = background_cps(ex.detector);
        const double alpha_used = a.alpha > 0.0 ? a.alpha : (fit.alpha > 0.0 ? fit.alpha : expected);
        const auto zs = stats::g2_zero_series(sa, sb, a.g2zero_window_ms, a.coincidence_window_ns, alpha_used, zopt);
        io::write_g2zero_csv(out_path / "fig4b_g2zero.csv", zs);
        summary["g2zero"] = to_json(zs);
      } else {
        summary["notes"] = {"fig4 outputs need two detector channels; skipped"};
      }

      write_json(out_path / "summary.json", summary);
      write_json(out_path / "manifest.json", manifest(args, master, &cfg, {config_path}));
      out << "report written to " << out_path.string() << '\n';
      return kOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const io::ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}

}  // namespace photonstat::cli
