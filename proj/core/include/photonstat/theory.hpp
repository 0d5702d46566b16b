#pragma once

#include <span>
#include <vector>

#include "photonstat/config.hpp"

/// Reference physics for a driven two-level atom and the counting-statistics
/// bounds used to interpret g2(0).
namespace photonstat::theory {

/// s / (2 (1 + s)), from the stored saturation parameter.
double excited_population_ss(const TwoLevelParams& p);

/// gamma * excited_population_ss(p), photons/s.
double scattering_rate(const TwoLevelParams& p);

/// Rabi frequency used by the Bloch-equation routes: `omega` when it is
/// positive, otherwise sqrt(s (gamma^2 + 4 delta^2) / 2). Throws
/// std::invalid_argument when both omega and s are zero.
double effective_rabi(const TwoLevelParams& p);

/// Steady-state excited population of the optical Bloch equations,
/// (Omega^2/4) / (delta^2 + gamma^2/4 + Omega^2/2).
double bloch_excited_population(const TwoLevelParams& p);

struct G2Curve {
  std::vector<double> lags_ns;
  std::vector<double> values;
};

/// Single-atom g2(tau) = rho_ee(tau | ground at 0) / rho_ee(inf), integrated
/// from the optical Bloch equations with fixed-step RK4. The step starts at
/// min(1e-2/gamma, 1e-2/Omega) and is halved until two successive
/// refinements differ by less than 1e-8 at every requested lag.
G2Curve g2_analytic(const TwoLevelParams& p, std::span<const double> lags_ns);

/// On-resonance closed form
///   g2(tau) = 1 - exp(-3 gamma tau / 4) [cos(mu tau) + (3 gamma / 4 mu) sin(mu tau)],
///   mu = sqrt(Omega^2 - gamma^2 / 16),
/// continued analytically for Omega < gamma/4. Throws for delta != 0.
G2Curve g2_closed_form(const TwoLevelParams& p, std::span<const double> lags_ns);

/// Lower bound on g2(0) for mean photon number n: max(0, 1 - 1/n).
double g2_lower_bound_n(double mean_photon_number);

/// Mean photon number conditioned on n >= 1 for Poisson(x): x / (1 - exp(-x)).
double conditional_mean_photons(double x);

/// g2(0) bound with the mean photon number taken under the condition n >= 1:
/// 1 - (1 - exp(-a N)) / (a N).
double g2_zero_vs_flux(double alpha, double mean_atoms);

/// Probability that an atom yields at least one count: 1 - exp(-alpha).
double detection_probability(double alpha);

/// Fraction of the full solid angle inside a cone of numerical aperture na:
/// (1 - sqrt(1 - na^2)) / 2.
double collection_fraction(double na);

/// alpha scaled by collection_fraction(na_new) / collection_fraction(na_ref).
double alpha_na_scaling(double alpha_ref, double na_ref, double na_new);

}  // namespace photonstat::theory
