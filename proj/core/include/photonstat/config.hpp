#pragma once

#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

namespace photonstat {

/// Rb-87 D2 natural linewidth, 2*pi*6.07 MHz in rad/s.
inline constexpr double kRb87Gamma = 2.0 * std::numbers::pi * 6.07e6;

/// Driven two-level atom. Rates are angular frequencies in rad/s.
///
/// The saturation parameter `s` and the pair (omega, delta) are stored
/// independently; nothing here derives one from the other.
struct TwoLevelParams {
  double gamma = kRb87Gamma;
  double omega = 2.3 * kRb87Gamma;
  double delta = 2.0 * std::numbers::pi * 3.0e6;
  double s = 3.5;

  friend bool operator==(const TwoLevelParams&, const TwoLevelParams&) = default;
};

struct DetectorConfig {
  double p_det = 0.009;
  unsigned n_channels = 1;
  double split_ratio = 1.0;  // fraction routed to channel 0
  double dark_rate_cps = 250.0;  // per channel
  std::uint64_t dead_time_ns = 50;  // non-paralyzable, per channel
  double stray_rate_cps = 0.0;  // per channel

  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

struct RateKnot {
  std::uint64_t t_ns = 0;
  double atoms_per_s = 0.0;

  friend bool operator==(const RateKnot&, const RateKnot&) = default;
};

/// Piecewise-linear atom arrival rate. The rate is zero before the first and
/// after the last knot; two knots at the same time encode a step.
struct AtomSourceConfig {
  std::vector<RateKnot> profile;
  std::uint64_t duration_ns = 0;
  /// Each run delays the whole profile by a uniform draw from [0, onset_jitter_ns].
  std::uint64_t onset_jitter_ns = 0;

  [[nodiscard]] double rate_at(double t_ns) const noexcept;
  [[nodiscard]] double max_rate() const noexcept;
  /// Expected number of atoms over [0, duration_ns) for zero jitter.
  [[nodiscard]] double expected_atoms() const noexcept;

  friend bool operator==(const AtomSourceConfig&, const AtomSourceConfig&) = default;
};

enum class EmissionMode { IdealPoisson, Burst, Mcwf };
enum class DwellKind { Fixed, Exponential };

struct IdealPoissonParams {
  double alpha = 1.08;  // mean detected counts per atom; emitted mean is alpha / p_det
  double dwell_ns = 12000.0;

  friend bool operator==(const IdealPoissonParams&, const IdealPoissonParams&) = default;
};

struct BurstParams {
  double scatter_rate = 1.0e7;  // photons/s while in the detection region
  DwellKind dwell = DwellKind::Fixed;
  double dwell_ns = 12000.0;  // fixed dwell, or mean of the exponential

  friend bool operator==(const BurstParams&, const BurstParams&) = default;
};

struct McwfParams {
  TwoLevelParams two_level{};
  double p_dark = 1.0 / 120.0;
  double max_dwell_ns = 100000.0;

  friend bool operator==(const McwfParams&, const McwfParams&) = default;
};

/// Parameters for all three emission fidelities; `mode` selects the active one.
struct EmissionConfig {
  EmissionMode mode = EmissionMode::IdealPoisson;
  IdealPoissonParams ideal{};
  BurstParams burst{};
  McwfParams mcwf{};

  friend bool operator==(const EmissionConfig&, const EmissionConfig&) = default;
};

struct RunConfig {
  std::uint32_t n_runs = 600;
  std::uint64_t master_seed = 1;
  std::uint64_t duration_ns = 2'000'000'000;
  std::uint32_t resolution_ns = 1;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Everything needed to reproduce a simulated data set.
struct ExperimentConfig {
  AtomSourceConfig source{};
  EmissionConfig emission{};
  DetectorConfig detector{};
  RunConfig run{};

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct Violation {
  std::string code;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Every invariant violation in `config`; an empty list means valid.
std::vector<Violation> validate(const ExperimentConfig& config);

/// A profile that is zero until `onset_ns`, rises linearly to `peak_rate`
/// over `rise_ns`, then decays exponentially with time constant `decay_ns`
/// (sampled as `n_decay_knots` linear segments) until `duration_ns`.
std::vector<RateKnot> pulse_profile(std::uint64_t onset_ns, std::uint64_t rise_ns, double peak_rate,
                                    double decay_ns, std::uint64_t duration_ns,
                                    unsigned n_decay_knots = 200);

/// Constant rate over [0, duration_ns).
std::vector<RateKnot> constant_profile(double rate, std::uint64_t duration_ns);

const char* to_string(EmissionMode mode) noexcept;
const char* to_string(DwellKind kind) noexcept;

}  // namespace photonstat
