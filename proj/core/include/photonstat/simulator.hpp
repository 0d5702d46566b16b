#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "photonstat/config.hpp"
#include "photonstat/rng.hpp"
#include "photonstat/timetag.hpp"

namespace photonstat::sim {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Termination { DarkState, LeftRegion };

/// One atom's passage through the detection region. Times are in ns since
/// run start and kept continuous; quantization happens at detection.
struct AtomTransit {
  double arrival_ns = 0.0;
  double dwell_ns = 0.0;
  std::vector<double> emitted;  // strictly increasing, within [arrival, arrival + dwell]
  Termination terminated_by = Termination::LeftRegion;
};

/// Inhomogeneous Poisson arrivals, by thinning a homogeneous process at the
/// profile's maximum rate. Sorted, in ns.
std::vector<double> gen_atom_arrivals(const AtomSourceConfig& source, std::uint64_t seed);

/// Per atom: Poisson(alpha_emitted) photons uniform over the dwell window.
std::vector<AtomTransit> emit_ideal_poisson(std::span<const double> arrivals, double alpha_emitted,
                                            double dwell_ns, std::uint64_t seed);

/// Per atom: homogeneous Poisson emission at scatter_rate during a sampled dwell.
std::vector<AtomTransit> emit_burst(std::span<const double> arrivals, const BurstParams& params,
                                    std::uint64_t seed);

/// Waiting-time sampler for quantum jumps of a driven two-level atom.
///
/// After every jump the atom restarts in the ground state, so the no-jump
/// evolution under H_eff = -delta |e><e| + (Omega/2) sigma_x - i (gamma/2) |e><e|
/// is the same each time. It is integrated once (RK4, step
/// min(1e-2/gamma, 1e-2/Omega, 1 ns)) and tabulated as the squared norm
/// S(t). A gap is the time at which S falls to a uniform draw u.
class McwfSampler {
 public:
  /// Throws SimulationError if the tabulated norm ever increases.
  McwfSampler(const TwoLevelParams& params, double horizon_ns);

  /// Next emission delay in ns, or +inf if none occurs within the horizon.
  [[nodiscard]] double next_gap(Rng& rng) const;

  /// Squared norm at time t_ns after a jump (0 beyond the tabulated range).
  [[nodiscard]] double survival(double t_ns) const noexcept;

  [[nodiscard]] double step_ns() const noexcept { return step_ns_; }
  [[nodiscard]] std::size_t table_size() const noexcept { return survival_.size(); }

 private:
  double step_ns_ = 0.0;
  std::vector<double> survival_;
};

/// Quantum-jump unraveling: emissions at sampled gaps; after each emission
/// the atom is pumped dark with probability p_dark, ending the transit;
/// otherwise the transit ends at max_dwell_ns.
std::vector<AtomTransit> emit_mcwf(std::span<const double> arrivals, const McwfParams& params,
                                   std::uint64_t seed);

struct DetectionStats {
  std::uint64_t atoms = 0;
  std::uint64_t emitted = 0;
  std::uint64_t detected = 0;  // after thinning at p_det
  std::uint64_t split[2] = {0, 0};  // detected photons per channel
  std::uint64_t out_of_window = 0;  // detected photons at t >= duration
  std::uint64_t background = 0;  // dark + stray counts added
  std::uint64_t dead_time_removed = 0;

  friend bool operator==(const DetectionStats&, const DetectionStats&) = default;
};

struct DetectedRun {
  std::vector<TimeTag> tags;  // sorted by (t_ns, channel)
  DetectionStats stats;
};

/// Detection chain for one run, applied in this order:
///   1. Bernoulli thinning of every emitted photon at p_det
///   2. channel assignment (channel 0 with probability split_ratio)
///   3. per-channel Poisson dark + stray counts over the full duration
///   4. quantization to the resolution and sorting
///   5. non-paralyzable dead-time filter per channel
/// Transits may be fed in chunks; the result is identical to one call.
class Detector {
 public:
  Detector(const DetectorConfig& config, std::uint64_t duration_ns, std::uint32_t resolution_ns,
           std::uint32_t run_id, std::uint64_t seed);

  void add(std::span<const AtomTransit> transits);
  [[nodiscard]] DetectedRun finish() &&;

 private:
  struct Photon {
    double t_ns;
    std::uint8_t channel;
  };

  DetectorConfig config_;
  std::uint64_t duration_ns_;
  std::uint32_t resolution_ns_;
  std::uint32_t run_id_;
  Rng rng_;
  std::uint64_t skip_ = 0;  // photons left to discard before the next detection
  std::vector<Photon> photons_;
  DetectionStats stats_;

  void draw_skip();
};

DetectedRun detect(std::span<const AtomTransit> transits, const DetectorConfig& config,
                   std::uint64_t duration_ns, std::uint32_t resolution_ns, std::uint64_t seed,
                   std::uint32_t run_id = 0);

/// Non-paralyzable dead time: a tag is kept when at least dead_time_ns has
/// passed since the last kept tag on its channel. Input sorted by time.
std::vector<TimeTag> dead_time_filter(std::span<const TimeTag> tags, std::uint64_t dead_time_ns);

struct Dataset {
  TimeTagStream stream;
  std::vector<DetectionStats> runs;
};

/// Seed of run r: derive_seed(master_seed, r). Within a run the arrival,
/// emission and detection stages draw from stage_seed(run_seed, stage).
/// Runs may execute in parallel; output is ordered by run_id and does not
/// depend on the thread count. Throws std::invalid_argument for an invalid
/// config.
Dataset run_experiment(const ExperimentConfig& config, unsigned threads = 0);

/// Mean detected counts per atom for the active emission mode, as the
/// analysis chain should expect it (p_det times mean emitted photons).
double expected_alpha(const ExperimentConfig& config);

/// Mean time an atom spends emitting, in ns, for the active emission mode.
double expected_dwell_ns(const ExperimentConfig& config);

}  // namespace photonstat::sim
