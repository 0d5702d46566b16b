#include "photonstat/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "photonstat/parallel.hpp"
#include "photonstat/theory.hpp"

namespace photonstat::sim {

std::vector<double> gen_atom_arrivals(const AtomSourceConfig& source, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> arrivals;
  const double shift =
      source.onset_jitter_ns > 0
          ? std::uniform_real_distribution<double>(0.0, static_cast<double>(source.onset_jitter_ns))(rng)
          : 0.0;
  const double max_rate = source.max_rate();
  if (!(max_rate > 0.0) || source.duration_ns == 0) return arrivals;

  const double end = static_cast<double>(source.duration_ns);
  std::exponential_distribution<double> gap(max_rate * 1e-9);
  std::uniform_real_distribution<double> accept(0.0, max_rate);
  arrivals.reserve(static_cast<std::size_t>(source.expected_atoms() * 1.1) + 16);
  for (double t = gap(rng); t < end; t += gap(rng)) {
    if (accept(rng) < source.rate_at(t - shift)) arrivals.push_back(t);
  }
  return arrivals;
}

namespace {

struct IdealEmitter {
  double alpha_emitted;
  double dwell_ns;

  AtomTransit operator()(double arrival, Rng& rng) const {
    AtomTransit t{arrival, dwell_ns, {}, Termination::LeftRegion};
    const auto n = std::poisson_distribution<std::uint64_t>(alpha_emitted)(rng);
    t.emitted.resize(n);
    std::uniform_real_distribution<double> when(arrival, arrival + dwell_ns);
    for (auto& e : t.emitted) e = when(rng);
    std::sort(t.emitted.begin(), t.emitted.end());
    return t;
  }
};

struct BurstEmitter {
  BurstParams params;

  AtomTransit operator()(double arrival, Rng& rng) const {
    double dwell = params.dwell_ns;
    if (params.dwell == DwellKind::Exponential) {
      dwell = std::exponential_distribution<double>(1.0 / params.dwell_ns)(rng);
    }
    AtomTransit t{arrival, dwell, {}, Termination::LeftRegion};
    std::exponential_distribution<double> gap(params.scatter_rate * 1e-9);
    t.emitted.reserve(static_cast<std::size_t>(params.scatter_rate * dwell * 1e-9 * 1.2) + 4);
    for (double e = gap(rng); e < dwell; e += gap(rng)) t.emitted.push_back(arrival + e);
    return t;
  }
};

struct McwfEmitter {
  const McwfSampler* sampler;
  double p_dark;
  double max_dwell_ns;

  AtomTransit operator()(double arrival, Rng& rng) const {
    AtomTransit t{arrival, max_dwell_ns, {}, Termination::LeftRegion};
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    double elapsed = 0.0;
    for (;;) {
      const double gap = sampler->next_gap(rng);
      if (!(elapsed + gap <= max_dwell_ns)) break;
      elapsed += gap;
      // Emission times must stay strictly increasing even for sub-ulp gaps.
      const double at = arrival + elapsed;
      t.emitted.push_back(t.emitted.empty() || at > t.emitted.back()
                              ? at
                              : std::nextafter(t.emitted.back(), std::numeric_limits<double>::infinity()));
      if (coin(rng) < p_dark) {
        t.terminated_by = Termination::DarkState;
        t.dwell_ns = elapsed;
        break;
      }
    }
    return t;
  }
};

template <class Emitter>
std::vector<AtomTransit> emit_all(std::span<const double> arrivals, const Emitter& emit, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<AtomTransit> out;
  out.reserve(arrivals.size());
  for (double a : arrivals) out.push_back(emit(a, rng));
  return out;
}

}  // namespace

std::vector<AtomTransit> emit_ideal_poisson(std::span<const double> arrivals, double alpha_emitted,
                                            double dwell_ns, std::uint64_t seed) {
  if (!(alpha_emitted > 0.0)) throw std::invalid_argument("alpha_emitted must be > 0");
  if (!(dwell_ns > 0.0)) throw std::invalid_argument("dwell must be > 0");
  return emit_all(arrivals, IdealEmitter{alpha_emitted, dwell_ns}, seed);
}

std::vector<AtomTransit> emit_burst(std::span<const double> arrivals, const BurstParams& params,
                                    std::uint64_t seed) {
  if (!(params.scatter_rate > 0.0)) throw std::invalid_argument("scatter_rate must be > 0");
  if (params.dwell == DwellKind::Exponential && !(params.dwell_ns > 0.0)) {
    throw std::invalid_argument("exponential dwell mean must be > 0");
  }
  if (params.dwell_ns < 0.0) throw std::invalid_argument("dwell must be >= 0");
  return emit_all(arrivals, BurstEmitter{params}, seed);
}

std::vector<AtomTransit> emit_mcwf(std::span<const double> arrivals, const McwfParams& params,
                                   std::uint64_t seed) {
  if (!(params.p_dark > 0.0 && params.p_dark <= 1.0)) throw std::invalid_argument("p_dark must be in (0,1]");
  const McwfSampler sampler(params.two_level, params.max_dwell_ns);
  return emit_all(arrivals, McwfEmitter{&sampler, params.p_dark, params.max_dwell_ns}, seed);
}

Detector::Detector(const DetectorConfig& config, std::uint64_t duration_ns, std::uint32_t resolution_ns,
                   std::uint32_t run_id, std::uint64_t seed)
    : config_(config), duration_ns_(duration_ns), resolution_ns_(resolution_ns), run_id_(run_id), rng_(seed) {
  if (!(config.p_det >= 0.0 && config.p_det <= 1.0)) throw std::invalid_argument("p_det out of [0,1]");
  if (resolution_ns == 0) throw std::invalid_argument("resolution must be positive");
  draw_skip();
}

void Detector::draw_skip() {
  if (config_.p_det >= 1.0) {
    skip_ = 0;
  } else if (config_.p_det <= 0.0) {
    skip_ = std::numeric_limits<std::uint64_t>::max();
  } else {
    // Failures before the next success of independent Bernoulli(p_det) trials.
    skip_ = std::geometric_distribution<std::uint64_t>(config_.p_det)(rng_);
  }
}

void Detector::add(std::span<const AtomTransit> transits) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (const auto& atom : transits) {
    ++stats_.atoms;
    const std::uint64_t n = atom.emitted.size();
    stats_.emitted += n;
    std::uint64_t i = 0;
    while (skip_ < n - i) {
      i += skip_;
      const double t = atom.emitted[i++];
      ++stats_.detected;
      std::uint8_t ch = 0;
      if (config_.n_channels == 2 && !(coin(rng_) < config_.split_ratio)) ch = 1;
      ++stats_.split[ch];
      photons_.push_back({t, ch});
      draw_skip();
    }
    if (skip_ != std::numeric_limits<std::uint64_t>::max()) skip_ -= n - i;
  }
}

DetectedRun Detector::finish() && {
  DetectedRun out;
  const double end = static_cast<double>(duration_ns_);
  const auto quantize = [&](double t) {
    const auto ns = static_cast<std::uint64_t>(t);
    return ns - ns % resolution_ns_;
  };

  std::vector<TimeTag> tags;
  tags.reserve(photons_.size());
  for (const auto& p : photons_) {
    if (p.t_ns < 0.0 || p.t_ns >= end) {
      ++stats_.out_of_window;
      continue;
    }
    tags.push_back({run_id_, p.channel, quantize(p.t_ns)});
  }
  photons_ = {};

  const double bg_rate = config_.dark_rate_cps + config_.stray_rate_cps;
  for (unsigned ch = 0; ch < config_.n_channels; ++ch) {
    const auto n = bg_rate > 0.0 ? std::poisson_distribution<std::uint64_t>(bg_rate * end * 1e-9)(rng_) : 0;
    std::uniform_real_distribution<double> when(0.0, end);
    for (std::uint64_t k = 0; k < n; ++k) {
      tags.push_back({run_id_, static_cast<std::uint8_t>(ch), quantize(when(rng_))});
    }
    stats_.background += n;
  }

  sort_tags(tags);
  out.tags = dead_time_filter(tags, config_.dead_time_ns);
  stats_.dead_time_removed = tags.size() - out.tags.size();
  out.stats = stats_;
  return out;
}

DetectedRun detect(std::span<const AtomTransit> transits, const DetectorConfig& config,
                   std::uint64_t duration_ns, std::uint32_t resolution_ns, std::uint64_t seed,
                   std::uint32_t run_id) {
  Detector d(config, duration_ns, resolution_ns, run_id, seed);
  d.add(transits);
  return std::move(d).finish();
}

std::vector<TimeTag> dead_time_filter(std::span<const TimeTag> tags, std::uint64_t dead_time_ns) {
  std::vector<TimeTag> kept;
  kept.reserve(tags.size());
  if (dead_time_ns == 0) {
    kept.assign(tags.begin(), tags.end());
    return kept;
  }
  // Keyed by (run, channel) so multi-run input works too.
  struct Last {
    std::uint32_t run;
    std::uint64_t t;
    bool valid = false;
  };
  Last last[256]{};
  for (const auto& tag : tags) {
    Last& l = last[tag.channel];
    if (l.valid && l.run == tag.run_id && tag.t_ns - l.t < dead_time_ns) continue;
    l = {tag.run_id, tag.t_ns, true};
    kept.push_back(tag);
  }
  return kept;
}

Dataset run_experiment(const ExperimentConfig& config, unsigned threads) {
  if (const auto violations = validate(config); !violations.empty()) {
    std::ostringstream why;
    why << "invalid experiment config:";
    for (const auto& v : violations) why << " [" << v.code << "] " << v.message << ";";
    throw std::invalid_argument(why.str());
  }

  const auto& em = config.emission;
  std::optional<McwfSampler> sampler;
  if (em.mode == EmissionMode::Mcwf) sampler.emplace(em.mcwf.two_level, em.mcwf.max_dwell_ns);

  std::vector<DetectedRun> runs(config.run.n_runs);
  parallel_for(runs.size(), threads, [&](std::size_t r) {
    const std::uint64_t run_seed = derive_seed(config.run.master_seed, r);
    const auto arrivals = gen_atom_arrivals(config.source, stage_seed(run_seed, SeedStage::Arrivals));
    Rng emission_rng(stage_seed(run_seed, SeedStage::Emission));
    Detector detector(config.detector, config.run.duration_ns, config.run.resolution_ns,
                      static_cast<std::uint32_t>(r), stage_seed(run_seed, SeedStage::Detection));

    constexpr std::size_t kChunk = 4096;
    std::vector<AtomTransit> chunk;
    chunk.reserve(kChunk);
    const auto emit_chunks = [&](const auto& emitter) {
      for (std::size_t i = 0; i < arrivals.size(); i += kChunk) {
        chunk.clear();
        const std::size_t end = std::min(arrivals.size(), i + kChunk);
        for (std::size_t k = i; k < end; ++k) chunk.push_back(emitter(arrivals[k], emission_rng));
        detector.add(chunk);
      }
    };
    switch (em.mode) {
      case EmissionMode::IdealPoisson:
        emit_chunks(IdealEmitter{em.ideal.alpha / config.detector.p_det, em.ideal.dwell_ns});
        break;
      case EmissionMode::Burst:
        emit_chunks(BurstEmitter{em.burst});
        break;
      case EmissionMode::Mcwf:
        emit_chunks(McwfEmitter{&*sampler, em.mcwf.p_dark, em.mcwf.max_dwell_ns});
        break;
    }
    runs[r] = std::move(detector).finish();
  });

  std::size_t total = 0;
  for (const auto& r : runs) total += r.tags.size();
  std::vector<TimeTag> tags;
  tags.reserve(total);
  Dataset out;
  out.runs.reserve(runs.size());
  for (auto& r : runs) {
    tags.insert(tags.end(), r.tags.begin(), r.tags.end());
    r.tags = {};
    out.runs.push_back(r.stats);
  }
  const StreamHeader header{config.run.resolution_ns, config.run.duration_ns, config.run.n_runs,
                            static_cast<std::uint8_t>(config.detector.n_channels)};
  out.stream = TimeTagStream(header, std::move(tags));
  return out;
}

double expected_alpha(const ExperimentConfig& config) {
  const auto& em = config.emission;
  switch (em.mode) {
    case EmissionMode::IdealPoisson:
      return em.ideal.alpha;
    case EmissionMode::Burst:
      return config.detector.p_det * em.burst.scatter_rate * em.burst.dwell_ns * 1e-9;
    case EmissionMode::Mcwf: {
      // Emissions are geometric in p_dark, truncated by the transit cutoff;
      // the dark-pumping time is treated as exponential.
      const double rate = em.mcwf.two_level.gamma * theory::bloch_excited_population(em.mcwf.two_level);
      const double mean_dark_ns = 1e9 / (em.mcwf.p_dark * rate);
      const double kept = -std::expm1(-em.mcwf.max_dwell_ns / mean_dark_ns);
      return config.detector.p_det * kept / em.mcwf.p_dark;
    }
  }
  return 0.0;
}

double expected_dwell_ns(const ExperimentConfig& config) {
  const auto& em = config.emission;
  switch (em.mode) {
    case EmissionMode::IdealPoisson:
      return em.ideal.dwell_ns;
    case EmissionMode::Burst:
      return em.burst.dwell_ns;
    case EmissionMode::Mcwf: {
      const double rate = em.mcwf.two_level.gamma * theory::bloch_excited_population(em.mcwf.two_level);
      const double mean_dark_ns = 1e9 / (em.mcwf.p_dark * rate);
      return mean_dark_ns * -std::expm1(-em.mcwf.max_dwell_ns / mean_dark_ns);
    }
  }
  return 0.0;
}

}  // namespace photonstat::sim
