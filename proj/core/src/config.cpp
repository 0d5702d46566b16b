#include "photonstat/config.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace photonstat {

double AtomSourceConfig::rate_at(double t_ns) const noexcept {
  if (profile.empty()) return 0.0;
  if (t_ns < static_cast<double>(profile.front().t_ns) ||
      t_ns > static_cast<double>(profile.back().t_ns)) {
    return 0.0;
  }
  // Last knot with time <= t, so a repeated time acts as a step.
  auto it = std::upper_bound(profile.begin(), profile.end(), t_ns,
                             [](double t, const RateKnot& k) { return t < static_cast<double>(k.t_ns); });
  if (it == profile.end()) return profile.back().atoms_per_s;
  const RateKnot& hi = *it;
  const RateKnot& lo = *(it - 1);
  const double span = static_cast<double>(hi.t_ns - lo.t_ns);
  const double f = (t_ns - static_cast<double>(lo.t_ns)) / span;
  return lo.atoms_per_s + f * (hi.atoms_per_s - lo.atoms_per_s);
}

double AtomSourceConfig::max_rate() const noexcept {
  double m = 0.0;
  for (const auto& k : profile) m = std::max(m, k.atoms_per_s);
  return m;
}

double AtomSourceConfig::expected_atoms() const noexcept {
  double total = 0.0;
  const double end = static_cast<double>(duration_ns);
  for (std::size_t i = 1; i < profile.size(); ++i) {
    const double t0 = static_cast<double>(profile[i - 1].t_ns);
    const double tk = static_cast<double>(profile[i].t_ns);
    const double t1 = std::min(tk, end);
    if (t1 <= t0) continue;
    const double r0 = profile[i - 1].atoms_per_s;
    const double r1 = r0 + (profile[i].atoms_per_s - r0) * (t1 - t0) / (tk - t0);
    total += 0.5 * (r0 + r1) * (t1 - t0) * 1e-9;
  }
  return total;
}

namespace {

void check(std::vector<Violation>& out, bool ok, const char* code, const std::string& message) {
  if (!ok) out.push_back({code, message});
}

std::string fmt(const char* what, double v) {
  std::ostringstream s;
  s << what << " (got " << v << ")";
  return s.str();
}

}  // namespace

std::vector<Violation> validate(const ExperimentConfig& c) {
  std::vector<Violation> v;

  const auto& d = c.detector;
  check(v, d.p_det >= 0.0 && d.p_det <= 1.0, "p_det_range", fmt("p_det out of [0,1]", d.p_det));
  check(v, d.n_channels == 1 || d.n_channels == 2, "n_channels",
        fmt("n_channels must be 1 or 2", d.n_channels));
  check(v, d.split_ratio >= 0.0 && d.split_ratio <= 1.0, "split_ratio_range",
        fmt("split_ratio out of [0,1]", d.split_ratio));
  check(v, d.n_channels != 1 || d.split_ratio == 1.0, "split_ratio_single_channel",
        fmt("split_ratio must be 1 with a single channel", d.split_ratio));
  check(v, std::isfinite(d.dark_rate_cps) && d.dark_rate_cps >= 0.0, "dark_rate_negative",
        fmt("dark_rate_cps must be non-negative", d.dark_rate_cps));
  check(v, std::isfinite(d.stray_rate_cps) && d.stray_rate_cps >= 0.0, "stray_rate_negative",
        fmt("stray_rate_cps must be non-negative", d.stray_rate_cps));

  const auto& s = c.source;
  for (std::size_t i = 0; i < s.profile.size(); ++i) {
    const auto& k = s.profile[i];
    if (!std::isfinite(k.atoms_per_s)) {
      v.push_back({"profile_not_finite", "arrival rate knot " + std::to_string(i) + " is not finite"});
    } else if (k.atoms_per_s < 0.0) {
      v.push_back({"negative_arrival_rate", fmt(("negative arrival rate at knot " + std::to_string(i)).c_str(),
                                                k.atoms_per_s)});
    }
    if (i > 0 && k.t_ns < s.profile[i - 1].t_ns) {
      v.push_back({"knots_unsorted", "profile knots not sorted in time at knot " + std::to_string(i)});
    }
  }
  check(v, s.duration_ns == c.run.duration_ns, "source_duration_mismatch",
        "source duration differs from run duration");

  const auto& e = c.emission;
  check(v, e.ideal.alpha > 0.0, "alpha_nonpositive", fmt("alpha must be > 0", e.ideal.alpha));
  check(v, e.ideal.dwell_ns > 0.0, "dwell_nonpositive", fmt("ideal dwell_ns must be > 0", e.ideal.dwell_ns));
  check(v, e.burst.scatter_rate > 0.0, "scatter_rate_nonpositive",
        fmt("scatter_rate must be > 0", e.burst.scatter_rate));
  check(v, e.burst.dwell_ns > 0.0, "dwell_nonpositive", fmt("burst dwell_ns must be > 0", e.burst.dwell_ns));
  const auto& tl = e.mcwf.two_level;
  check(v, tl.gamma > 0.0, "gamma_nonpositive", fmt("gamma must be > 0", tl.gamma));
  check(v, tl.s >= 0.0, "s_negative", fmt("saturation parameter s must be >= 0", tl.s));
  check(v, tl.omega >= 0.0, "omega_negative", fmt("Rabi frequency omega must be >= 0", tl.omega));
  check(v, std::isfinite(tl.delta), "delta_not_finite", "detuning must be finite");
  check(v, e.mcwf.p_dark > 0.0 && e.mcwf.p_dark <= 1.0, "p_dark_range",
        fmt("p_dark out of (0,1]", e.mcwf.p_dark));
  check(v, e.mcwf.max_dwell_ns > 0.0, "max_dwell_nonpositive",
        fmt("max_dwell_ns must be > 0", e.mcwf.max_dwell_ns));
  if (e.mode == EmissionMode::IdealPoisson) {
    check(v, d.p_det > 0.0, "p_det_zero_ideal", "ideal-Poisson emission needs p_det > 0 to convert alpha");
  }
  if (e.mode == EmissionMode::Mcwf) {
    check(v, tl.omega > 0.0 || tl.s > 0.0, "no_drive", "MCWF emission needs omega > 0 or s > 0");
  }

  check(v, c.run.resolution_ns > 0, "resolution_zero", "resolution_ns must be positive");
  check(v, c.run.duration_ns > 0, "duration_zero", "duration must be positive");
  return v;
}

std::vector<RateKnot> pulse_profile(std::uint64_t onset_ns, std::uint64_t rise_ns, double peak_rate,
                                    double decay_ns, std::uint64_t duration_ns,
                                    unsigned n_decay_knots) {
  std::vector<RateKnot> knots;
  knots.push_back({onset_ns, 0.0});
  const std::uint64_t peak_t = onset_ns + rise_ns;
  if (peak_t >= duration_ns) return knots;
  knots.push_back({peak_t, peak_rate});
  const double span = static_cast<double>(duration_ns - peak_t);
  for (unsigned i = 1; i <= n_decay_knots; ++i) {
    const double dt = span * i / n_decay_knots;
    const auto t = peak_t + static_cast<std::uint64_t>(std::llround(dt));
    knots.push_back({std::min(t, duration_ns), peak_rate * std::exp(-dt / decay_ns)});
  }
  return knots;
}

std::vector<RateKnot> constant_profile(double rate, std::uint64_t duration_ns) {
  return {{0, rate}, {duration_ns, rate}};
}

const char* to_string(EmissionMode mode) noexcept {
  switch (mode) {
    case EmissionMode::IdealPoisson: return "ideal";
    case EmissionMode::Burst: return "burst";
    case EmissionMode::Mcwf: return "mcwf";
  }
  return "?";
}

const char* to_string(DwellKind kind) noexcept {
  return kind == DwellKind::Fixed ? "fixed" : "exponential";
}

}  // namespace photonstat
