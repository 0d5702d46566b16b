#include <algorithm>
#include <random>

#include "doctest.h"
#include "photonstat/config.hpp"
#include "photonstat/io.hpp"

using namespace photonstat;

namespace {

bool has_code(const std::vector<Violation>& v, const std::string& code) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.code == code; });
}

ExperimentConfig small_valid() {
  ExperimentConfig c;
  c.run.duration_ns = 10'000'000;
  c.source.duration_ns = c.run.duration_ns;
  c.source.profile = constant_profile(1000.0, c.run.duration_ns);
  return c;
}

}  // namespace

TEST_CASE("default experiment config is valid") { CHECK(validate(small_valid()).empty()); }

TEST_CASE("shipped configs validate cleanly") {
  for (const char* name : {"fig2.cfg", "fig3.cfg", "fig4a.cfg", "paper.cfg"}) {
    INFO(name);
    const auto cfg = io::load_config(std::filesystem::path(PHOTONSTAT_SOURCE_DIR) / "configs" / name);
    CHECK(validate(cfg.experiment).empty());
  }
}

TEST_CASE("violations carry machine-readable codes") {
  auto c = small_valid();
  c.source.profile[1].atoms_per_s = -5.0;
  auto v = validate(c);
  REQUIRE(v.size() == 1);
  CHECK(v[0].code == "negative_arrival_rate");
  CHECK(v[0].message.find("negative arrival rate") != std::string::npos);

  c = small_valid();
  c.detector.p_det = 1.5;
  c.detector.n_channels = 1;
  c.detector.split_ratio = 0.5;
  c.emission.mcwf.p_dark = 0.0;
  c.emission.mcwf.two_level.gamma = 0.0;
  c.emission.mcwf.two_level.s = -1.0;
  c.emission.ideal.alpha = 0.0;
  c.emission.burst.scatter_rate = -1.0;
  c.emission.ideal.dwell_ns = 0.0;
  v = validate(c);
  for (const char* code : {"p_det_range", "split_ratio_single_channel", "p_dark_range", "gamma_nonpositive",
                           "s_negative", "alpha_nonpositive", "scatter_rate_nonpositive", "dwell_nonpositive"}) {
    INFO(code);
    CHECK(has_code(v, code));
  }
}

TEST_CASE("unsorted knots and mismatched durations are reported") {
  auto c = small_valid();
  c.source.profile = {{100, 1.0}, {50, 1.0}};
  CHECK(has_code(validate(c), "knots_unsorted"));
  c = small_valid();
  c.source.duration_ns = 5;
  CHECK(has_code(validate(c), "source_duration_mismatch"));
}

TEST_CASE("p_dark of exactly one is allowed") {
  auto c = small_valid();
  c.emission.mcwf.p_dark = 1.0;
  CHECK(validate(c).empty());
}

TEST_CASE("profile helpers") {
  const auto knots = pulse_profile(50, 10, 100.0, 200.0, 1000, 4);
  REQUIRE(knots.size() == 6);
  CHECK(knots.front().t_ns == 50);
  CHECK(knots[1].atoms_per_s == 100.0);
  CHECK(knots.back().t_ns == 1000);
  AtomSourceConfig src{knots, 1000, 0};
  CHECK(src.rate_at(0.0) == 0.0);
  CHECK(src.rate_at(55.0) == doctest::Approx(50.0));
  CHECK(src.max_rate() == doctest::Approx(100.0));

  AtomSourceConfig flat{constant_profile(2000.0, 1'000'000'000), 1'000'000'000, 0};
  CHECK(flat.expected_atoms() == doctest::Approx(2000.0));
}

TEST_CASE("property: valid configs survive a dump and parse unchanged") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    io::ConfigFile f;
    auto& c = f.experiment;
    c.run.n_runs = static_cast<std::uint32_t>(rng() % 1000);
    c.run.master_seed = rng();
    c.run.duration_ns = 1 + rng() % 5'000'000'000ULL;
    c.run.resolution_ns = 1 + static_cast<std::uint32_t>(rng() % 8);
    c.source.duration_ns = c.run.duration_ns;
    c.source.profile = pulse_profile(rng() % (c.run.duration_ns / 2 + 1), rng() % 1000, 1e5 * u(rng),
                                     1.0 + 1e9 * u(rng), c.run.duration_ns, 1 + rng() % 50);
    c.source.onset_jitter_ns = rng() % 1'000'000;
    c.emission.mode = static_cast<EmissionMode>(rng() % 3);
    c.emission.ideal = {0.01 + 10 * u(rng), 1.0 + 1e5 * u(rng)};
    c.emission.burst = {1e3 + 1e8 * u(rng), rng() % 2 ? DwellKind::Fixed : DwellKind::Exponential, 1 + 1e5 * u(rng)};
    c.emission.mcwf.two_level = {1e6 + 1e8 * u(rng), 1e8 * u(rng), -1e8 + 2e8 * u(rng), 10 * u(rng)};
    c.emission.mcwf.p_dark = 1e-6 + (1 - 1e-6) * u(rng);
    c.emission.mcwf.max_dwell_ns = 1 + 1e6 * u(rng);
    c.detector.n_channels = 1 + static_cast<unsigned>(rng() % 2);
    c.detector.split_ratio = c.detector.n_channels == 1 ? 1.0 : u(rng);
    c.detector.p_det = 1e-4 + 0.9 * u(rng);
    c.detector.dark_rate_cps = 1000 * u(rng);
    c.detector.stray_rate_cps = 100 * u(rng);
    c.detector.dead_time_ns = rng() % 200;
    f.analysis.fano_bin_ns = 1 + rng() % 1'000'000;
    f.analysis.g2_norm = static_cast<stats::G2Norm>(rng() % 3);
    f.analysis.g2_window = {rng() % 1000, 1000 + rng() % 1000};
    f.analysis.alpha = u(rng);
    REQUIRE(validate(c).empty());

    const std::string text = io::dump_config(f);
    const auto back = io::parse_config(text);
    CHECK(back == f);
    CHECK(io::dump_config(back) == text);
  }
}

TEST_CASE("to_string names") {
  CHECK(std::string(to_string(EmissionMode::Mcwf)) == "mcwf");
  CHECK(std::string(to_string(DwellKind::Exponential)) == "exponential");
}
