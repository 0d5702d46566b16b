#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include "photonstat/simulator.hpp"
#include "photonstat/theory.hpp"

namespace photonstat::sim {
namespace {

using cplx = std::complex<double>;

struct Amplitudes {
  cplx g, e;
};

// No-jump Schroedinger evolution in ns units.
struct EffectiveHamiltonian {
  double half_gamma, half_omega, delta;

  Amplitudes operator()(const Amplitudes& a) const {
    const cplx i{0.0, 1.0};
    return {-i * half_omega * a.e, cplx{-half_gamma, delta} * a.e - i * half_omega * a.g};
  }
};

Amplitudes rk4(const EffectiveHamiltonian& f, const Amplitudes& a, double h) {
  auto shift = [](const Amplitudes& x, double k, const Amplitudes& d) {
    return Amplitudes{x.g + k * d.g, x.e + k * d.e};
  };
  const Amplitudes k1 = f(a);
  const Amplitudes k2 = f(shift(a, 0.5 * h, k1));
  const Amplitudes k3 = f(shift(a, 0.5 * h, k2));
  const Amplitudes k4 = f(shift(a, h, k3));
  return {a.g + h / 6.0 * (k1.g + 2.0 * k2.g + 2.0 * k3.g + k4.g),
          a.e + h / 6.0 * (k1.e + 2.0 * k2.e + 2.0 * k3.e + k4.e)};
}

constexpr double kSurvivalFloor = 1e-17;

}  // namespace

McwfSampler::McwfSampler(const TwoLevelParams& params, double horizon_ns) {
  if (!(params.gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if (!(horizon_ns > 0.0)) throw std::invalid_argument("MCWF horizon must be positive");
  const double omega = theory::effective_rabi(params);
  const double gamma_ns = params.gamma * 1e-9;
  const double omega_ns = omega * 1e-9;
  step_ns_ = std::min({1e-2 / gamma_ns, 1e-2 / omega_ns, 1.0});

  const EffectiveHamiltonian f{0.5 * gamma_ns, 0.5 * omega_ns, params.delta * 1e-9};
  Amplitudes a{1.0, 0.0};
  survival_.push_back(1.0);
  const auto n_max = static_cast<std::size_t>(std::ceil(horizon_ns / step_ns_)) + 1;
  survival_.reserve(std::min<std::size_t>(n_max, 1 << 16));
  while (survival_.size() < n_max) {
    a = rk4(f, a, step_ns_);
    const double s = std::norm(a.g) + std::norm(a.e);
    if (!(s <= survival_.back() * (1.0 + 1e-12))) {
      std::ostringstream why;
      why << "MCWF step failure: squared norm increased from " << survival_.back() << " to " << s
          << " at t = " << survival_.size() * step_ns_ << " ns (step " << step_ns_ << " ns)";
      throw SimulationError(why.str());
    }
    survival_.push_back(s);
    if (s < kSurvivalFloor) break;
  }
}

double McwfSampler::survival(double t_ns) const noexcept {
  if (t_ns <= 0.0) return 1.0;
  const double x = t_ns / step_ns_;
  const auto k = static_cast<std::size_t>(x);
  if (k + 1 >= survival_.size()) return 0.0;
  const double f = x - static_cast<double>(k);
  return survival_[k] + f * (survival_[k + 1] - survival_[k]);
}

double McwfSampler::next_gap(Rng& rng) const {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  // survival_ is non-increasing; first index where the norm has dropped to u.
  const auto it = std::partition_point(survival_.begin(), survival_.end(), [u](double s) { return s > u; });
  if (it == survival_.end()) return std::numeric_limits<double>::infinity();
  const auto k = static_cast<std::size_t>(it - survival_.begin());
  const double hi = survival_[k - 1];
  const double lo = survival_[k];
  const double f = hi > lo ? (hi - u) / (hi - lo) : 0.0;
  return (static_cast<double>(k - 1) + f) * step_ns_;
}

}  // namespace photonstat::sim
