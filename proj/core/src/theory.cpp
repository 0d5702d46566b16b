#include "photonstat/theory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace photonstat::theory {

double excited_population_ss(const TwoLevelParams& p) {
  if (std::isinf(p.s)) return 0.5;
  return p.s / (2.0 * (1.0 + p.s));
}

double scattering_rate(const TwoLevelParams& p) { return p.gamma * excited_population_ss(p); }

double effective_rabi(const TwoLevelParams& p) {
  if (p.omega > 0.0) return p.omega;
  if (p.s > 0.0) return std::sqrt(p.s * (p.gamma * p.gamma + 4.0 * p.delta * p.delta) / 2.0);
  throw std::invalid_argument("two-level atom has neither Rabi frequency nor saturation: no fluorescence");
}

double bloch_excited_population(const TwoLevelParams& p) {
  const double w = effective_rabi(p);
  return 0.25 * w * w / (p.delta * p.delta + 0.25 * p.gamma * p.gamma + 0.5 * w * w);
}

namespace {

// rho_ee, Re rho_eg, Im rho_eg in the frame rotating with the drive.
using BlochState = std::array<double, 3>;

struct Bloch {
  double gamma, omega, delta;

  BlochState operator()(const BlochState& s) const {
    const double ree = s[0], x = s[1], y = s[2];
    return {-omega * y - gamma * ree,
            -0.5 * gamma * x - delta * y,
            delta * x - 0.5 * gamma * y - 0.5 * omega * (1.0 - 2.0 * ree)};
  }
};

BlochState rk4_step(const Bloch& f, const BlochState& s, double h) {
  auto axpy = [](const BlochState& a, double k, const BlochState& b) {
    return BlochState{a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2]};
  };
  const BlochState k1 = f(s);
  const BlochState k2 = f(axpy(s, 0.5 * h, k1));
  const BlochState k3 = f(axpy(s, 0.5 * h, k2));
  const BlochState k4 = f(axpy(s, h, k3));
  BlochState out;
  for (int i = 0; i < 3; ++i) out[i] = s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

// rho_ee at each lag (seconds, any order) for an atom starting in the ground state.
std::vector<double> excited_trajectory(const Bloch& f, std::span<const double> lags_s,
                                       std::span<const std::size_t> order, double dt) {
  std::vector<double> out(lags_s.size());
  BlochState s{0.0, 0.0, 0.0};
  double t = 0.0;
  for (const std::size_t i : order) {
    const double target = lags_s[i];
    while (t < target) {
      const double h = std::min(dt, target - t);
      s = rk4_step(f, s, h);
      t = (target - t <= dt) ? target : t + h;
    }
    out[i] = s[0];
  }
  return out;
}

void check_lags(std::span<const double> lags_ns) {
  for (double l : lags_ns) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw std::invalid_argument("g2 lags must be finite and >= 0");
  }
}

}  // namespace

G2Curve g2_analytic(const TwoLevelParams& p, std::span<const double> lags_ns) {
  if (!(p.gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  check_lags(lags_ns);
  const double omega = effective_rabi(p);
  const Bloch f{p.gamma, omega, p.delta};
  const double ree_ss = bloch_excited_population(p);

  std::vector<double> lags_s(lags_ns.size());
  std::transform(lags_ns.begin(), lags_ns.end(), lags_s.begin(), [](double l) { return l * 1e-9; });
  std::vector<std::size_t> order(lags_s.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return lags_s[a] < lags_s[b]; });

  double dt = std::min(1e-2 / p.gamma, 1e-2 / omega);
  std::vector<double> coarse = excited_trajectory(f, lags_s, order, dt);
  for (int refinement = 0; refinement < 16; ++refinement) {
    dt *= 0.5;
    std::vector<double> fine = excited_trajectory(f, lags_s, order, dt);
    double diff = 0.0;
    for (std::size_t i = 0; i < fine.size(); ++i) diff = std::max(diff, std::abs(fine[i] - coarse[i]) / ree_ss);
    coarse = std::move(fine);
    if (diff < 1e-8) break;
  }

  G2Curve curve{std::vector<double>(lags_ns.begin(), lags_ns.end()), std::move(coarse)};
  for (double& v : curve.values) v /= ree_ss;
  return curve;
}

G2Curve g2_closed_form(const TwoLevelParams& p, std::span<const double> lags_ns) {
  if (p.delta != 0.0) throw std::invalid_argument("closed-form g2 is only maintained on resonance");
  check_lags(lags_ns);
  const double omega = effective_rabi(p);
  const double a = 0.75 * p.gamma;
  const double disc = omega * omega - p.gamma * p.gamma / 16.0;

  G2Curve curve{std::vector<double>(lags_ns.begin(), lags_ns.end()), {}};
  curve.values.reserve(lags_ns.size());
  for (double l : lags_ns) {
    const double tau = l * 1e-9;
    double osc;
    if (disc > 0.0) {
      const double mu = std::sqrt(disc);
      osc = std::cos(mu * tau) + a / mu * std::sin(mu * tau);
    } else if (disc < 0.0) {
      const double k = std::sqrt(-disc);
      osc = std::cosh(k * tau) + a / k * std::sinh(k * tau);
    } else {
      osc = 1.0 + a * tau;
    }
    curve.values.push_back(1.0 - std::exp(-a * tau) * osc);
  }
  return curve;
}

double g2_lower_bound_n(double n) {
  if (n < 0.0) throw std::invalid_argument("mean photon number must be >= 0");
  return n <= 1.0 ? 0.0 : 1.0 - 1.0 / n;
}

double conditional_mean_photons(double x) {
  if (x < 0.0) throw std::invalid_argument("mean must be >= 0");
  if (x < 1e-12) return 1.0 + 0.5 * x;
  return x / -std::expm1(-x);
}

double g2_zero_vs_flux(double alpha, double mean_atoms) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  if (mean_atoms < 0.0) throw std::invalid_argument("mean atom number must be >= 0");
  const double x = alpha * mean_atoms;
  if (x < 1e-6) return x / 2.0 - x * x / 6.0;  // series; avoids cancellation
  if (std::isinf(x)) return 1.0;
  return 1.0 + std::expm1(-x) / x;
}

double detection_probability(double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
  return -std::expm1(-alpha);
}

double collection_fraction(double na) {
  if (!(na > 0.0 && na < 1.0) && na != 1.0) throw std::invalid_argument("numerical aperture must be in (0, 1]");
  return 0.5 * (1.0 - std::sqrt(1.0 - na * na));
}

double alpha_na_scaling(double alpha_ref, double na_ref, double na_new) {
  return alpha_ref * collection_fraction(na_new) / collection_fraction(na_ref);
}

}  // namespace photonstat::theory
