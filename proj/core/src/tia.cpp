#include "photonstat/tia.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace photonstat::stats {

namespace {

struct Group {
  std::uint64_t k0, k1, count;
};

struct Component {
  double log_w, log_rho;  // rho = rate * interval bin
};

// ln sum_i w_i (q_i^k0 - q_i^k1) and its gradient with respect to
// (log_w_i, log_rho_i) for each component.
double log_model(std::span<const Component> comps, const Group& g, double* grad) {
  double lt[2];
  double dlr[2];
  const double L = static_cast<double>(g.k1 - g.k0);
  const double k0 = static_cast<double>(g.k0);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const double rho = std::exp(comps[i].log_rho);
    lt[i] = comps[i].log_w - rho * k0 + std::log(-std::expm1(-rho * L));
    dlr[i] = rho * (-k0 + L / std::expm1(rho * L));
    mx = std::max(mx, lt[i]);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < comps.size(); ++i) sum += std::exp(lt[i] - mx);
  const double lm = mx + std::log(sum);
  if (grad) {
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const double share = std::exp(lt[i] - lm);
      grad[2 * i] = share;
      grad[2 * i + 1] = share * dlr[i];
    }
  }
  return lm;
}

struct LsqResult {
  std::vector<Component> comps;
  double chi2 = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd jtj;
  bool ok = false;
};

void unpack(const Eigen::VectorXd& theta, std::vector<Component>& comps) {
  for (std::size_t i = 0; i < comps.size(); ++i) comps[i] = {theta[2 * i], theta[2 * i + 1]};
}

double residuals(std::span<const Group> groups, double n_total, const std::vector<Component>& comps,
                 Eigen::VectorXd& r, Eigen::MatrixXd* J) {
  const std::size_t p = 2 * comps.size();
  double grad[4];
  double chi2 = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double n = static_cast<double>(groups[g].count);
    const double sw = std::sqrt(n);
    const double lm = log_model(comps, groups[g], J ? grad : nullptr);
    r[g] = sw * (std::log(n / n_total) - lm);
    chi2 += r[g] * r[g];
    if (J) {
      for (std::size_t j = 0; j < p; ++j) (*J)(g, j) = -sw * grad[j];
    }
  }
  return std::isfinite(chi2) ? chi2 : std::numeric_limits<double>::infinity();
}

// Levenberg-Marquardt on the log-probability residuals.
LsqResult fit_log_space(std::span<const Group> groups, double n_total, std::vector<Component> comps) {
  const std::size_t m = groups.size();
  const std::size_t p = 2 * comps.size();
  Eigen::VectorXd theta(p);
  for (std::size_t i = 0; i < comps.size(); ++i) {
    theta[2 * i] = comps[i].log_w;
    theta[2 * i + 1] = comps[i].log_rho;
  }
  Eigen::VectorXd r(m), r_try(m);
  Eigen::MatrixXd J(m, p);
  double cost = residuals(groups, n_total, comps, r, &J);
  LsqResult out;
  if (!std::isfinite(cost)) return out;
  double lambda = 1e-3;
  std::vector<Component> trial = comps;
  for (int iter = 0; iter < 300; ++iter) {
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    bool improved = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::MatrixXd A = JtJ;
      for (std::size_t j = 0; j < p; ++j) A(j, j) += lambda * std::max(JtJ(j, j), 1e-12);
      const Eigen::VectorXd step = A.ldlt().solve(-g);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd next = theta + step;
      unpack(next, trial);
      const double c = residuals(groups, n_total, trial, r_try, nullptr);
      if (c < cost) {
        const double rel = (cost - c) / std::max(cost, 1e-300);
        theta = next;
        comps = trial;
        cost = c;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
        residuals(groups, n_total, comps, r, &J);
        if (rel < 1e-13 || step.norm() < 1e-12) iter = 300;
        break;
      }
      lambda *= 4.0;
    }
    if (!improved) break;
  }
  out.comps = comps;
  out.chi2 = cost;
  out.jtj = J.transpose() * J;
  out.ok = std::isfinite(cost);
  return out;
}

struct Unique {
  std::uint64_t k, count;
};

// EM for a two-component geometric mixture; only used to start the
// least-squares fit.
std::vector<Component> em_start(std::span<const Unique> values, std::uint64_t total) {
  const auto quantile_mean = [&](double lo, double hi) {
    const double a = lo * static_cast<double>(total), b = hi * static_cast<double>(total);
    double seen = 0.0, s = 0.0, n = 0.0;
    for (const auto& v : values) {
      const double c0 = seen, c1 = seen + static_cast<double>(v.count);
      const double take = std::max(0.0, std::min(c1, b) - std::max(c0, a));
      s += take * static_cast<double>(v.k);
      n += take;
      seen = c1;
    }
    return n > 0.0 ? s / n : 0.0;
  };
  double mean[2] = {quantile_mean(0.0, 0.5), quantile_mean(0.9, 1.0)};
  double w[2] = {0.5, 0.5};
  for (double& m : mean) m = std::max(m, 1e-3);
  if (mean[1] <= mean[0] * 1.5) mean[1] = mean[0] * 10.0;
  for (int iter = 0; iter < 300; ++iter) {
    double sr[2] = {0, 0}, sk[2] = {0, 0};
    for (const auto& v : values) {
      double lp[2];
      for (int i = 0; i < 2; ++i) {
        const double q = mean[i] / (1.0 + mean[i]);
        lp[i] = std::log(w[i]) + std::log1p(-q) + static_cast<double>(v.k) * std::log(q);
      }
      const double mx = std::max(lp[0], lp[1]);
      const double e0 = std::exp(lp[0] - mx), e1 = std::exp(lp[1] - mx);
      const double r0 = e0 / (e0 + e1);
      const double c = static_cast<double>(v.count);
      sr[0] += c * r0;
      sr[1] += c * (1.0 - r0);
      sk[0] += c * r0 * static_cast<double>(v.k);
      sk[1] += c * (1.0 - r0) * static_cast<double>(v.k);
    }
    double change = 0.0;
    for (int i = 0; i < 2; ++i) {
      if (sr[i] <= 0.0) continue;
      const double nm = std::max(sk[i] / sr[i], 1e-3);
      change = std::max(change, std::abs(nm - mean[i]) / mean[i]);
      mean[i] = nm;
      w[i] = std::max(sr[i] / static_cast<double>(total), 1e-9);
    }
    if (change < 1e-9) break;
  }
  if (mean[0] > mean[1]) {
    std::swap(mean[0], mean[1]);
    std::swap(w[0], w[1]);
  }
  std::vector<Component> comps(2);
  for (int i = 0; i < 2; ++i) {
    comps[i] = {std::log(w[i]), std::log(std::log1p(1.0 / mean[i]))};  // rho = -ln q
  }
  return comps;
}

}  // namespace

TiaFit tia(const TimeTagStream& stream, std::uint64_t interval_bin_ns, TimeRange range, const TiaOptions& options) {
  if (interval_bin_ns == 0) throw std::invalid_argument("interval bin must be positive");
  if (range.empty()) throw std::invalid_argument("empty time range");

  std::vector<std::uint64_t> gaps;
  std::uint64_t nonempty_runs = 0;
  for (std::uint32_t run = 0; run < stream.n_runs(); ++run) {
    const auto tags = stream.run(run, range);
    if (!tags.empty()) ++nonempty_runs;
    for (std::size_t i = 1; i < tags.size(); ++i) gaps.push_back(tags[i].t_ns - tags[i - 1].t_ns);
  }
  if (gaps.size() < options.min_intervals) {
    throw std::invalid_argument("time-interval analysis needs at least " + std::to_string(options.min_intervals) +
                                " intervals, found " + std::to_string(gaps.size()));
  }

  TiaFit fit;
  fit.interval_bin_ns = interval_bin_ns;
  fit.n_intervals = gaps.size();
  const double n_total = static_cast<double>(gaps.size());

  std::vector<std::uint64_t> ks(gaps.size());
  std::transform(gaps.begin(), gaps.end(), ks.begin(), [&](std::uint64_t g) { return g / interval_bin_ns; });
  std::sort(ks.begin(), ks.end());
  std::vector<Unique> values;
  for (std::uint64_t k : ks) {
    if (values.empty() || values.back().k != k) values.push_back({k, 0});
    ++values.back().count;
  }

  std::vector<Group> groups;
  {
    std::uint64_t start = values.front().k, acc = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      acc += values[i].count;
      if (acc >= options.min_group_count) {
        const std::uint64_t end = i + 1 < values.size() ? values[i + 1].k : values[i].k + 1;
        groups.push_back({start, end, acc});
        start = end;
        acc = 0;
      }
    }
    if (acc > 0) {
      if (groups.empty()) {
        groups.push_back({start, values.back().k + 1, acc});
      } else {
        groups.back().k1 = values.back().k + 1;
        groups.back().count += acc;
      }
    }
  }

  const double mean_k = std::accumulate(ks.begin(), ks.end(), 0.0,
                                        [](double s, std::uint64_t k) { return s + static_cast<double>(k); }) /
                        n_total;
  const LsqResult single =
      fit_log_space(groups, n_total, {Component{0.0, std::log(std::log1p(1.0 / std::max(mean_k, 1e-3)))}});
  fit.chi2_single = single.chi2;

  LsqResult best = single;
  fit.single_component = true;
  if (groups.size() > 4) {
    LsqResult dbl = fit_log_space(groups, n_total, em_start(values, ks.size()));
    if (dbl.ok) {
      if (dbl.comps[0].log_rho < dbl.comps[1].log_rho) {
        std::swap(dbl.comps[0], dbl.comps[1]);
        Eigen::PermutationMatrix<4> perm;
        perm.indices() << 2, 3, 0, 1;
        dbl.jtj = perm.transpose() * dbl.jtj * perm;
      }
      const double separation = std::exp(dbl.comps[0].log_rho - dbl.comps[1].log_rho);
      const double w0 = std::exp(dbl.comps[0].log_w), w1 = std::exp(dbl.comps[1].log_w);
      const double minor = std::min(w0, w1) / (w0 + w1);
      if (separation < options.min_rate_separation) {
        fit.fallback_reason = "rates_within_tolerance";
      } else if (minor < options.min_weight) {
        fit.fallback_reason = "negligible_component";
      } else if (single.chi2 - dbl.chi2 < options.min_delta_chi2) {
        fit.fallback_reason = "no_significant_improvement";
      } else {
        best = dbl;
        fit.single_component = false;
      }
    } else {
      fit.fallback_reason = "two_component_fit_failed";
    }
  } else {
    fit.fallback_reason = "too_few_histogram_cells";
  }
  if (!best.ok) throw std::runtime_error("time-interval fit did not converge");

  const std::size_t p = 2 * best.comps.size();
  fit.chi2 = best.chi2;
  fit.dof = groups.size() > p ? groups.size() - p : 0;
  const double scale = fit.dof > 0 ? std::max(1.0, fit.chi2 / static_cast<double>(fit.dof)) : 1.0;
  const Eigen::MatrixXd cov = best.jtj.completeOrthogonalDecomposition().pseudoInverse() * scale;

  const double bin_s = static_cast<double>(interval_bin_ns) * 1e-9;
  for (std::size_t i = 0; i < best.comps.size(); ++i) {
    GeometricComponent c;
    const double rho = std::exp(best.comps[i].log_rho);
    c.weight = std::exp(best.comps[i].log_w);
    c.q = std::exp(-rho);
    c.rate_hz = rho / bin_s;
    c.rate_se_hz = c.rate_hz * std::sqrt(std::max(cov(2 * i + 1, 2 * i + 1), 0.0));
    fit.components.push_back(c);
    fit.normalization += c.weight;
  }

  for (const auto& g : groups) {
    const double width = static_cast<double>(g.k1 - g.k0);
    TiaBin b{g.k0, g.k1, g.count, static_cast<double>(g.count) / (n_total * width),
             std::exp(log_model(best.comps, g, nullptr)) / width};
    fit.histogram.push_back(b);
  }

  if (fit.single_component) {
    fit.cluster_gap_k = 0.0;
  } else {
    const auto& f = fit.components[0];
    const auto& s = fit.components[1];
    const double rf = -std::log(f.q), rs = -std::log(s.q);
    fit.cluster_gap_k =
        std::max(0.0, (std::log(f.weight * -std::expm1(-rf)) - std::log(s.weight * -std::expm1(-rs))) / (rf - rs));
  }
  double inside_ns = 0.0;
  std::uint64_t slow_gaps = 0;
  for (std::uint64_t g : gaps) {
    if (fit.single_component || static_cast<double>(g / interval_bin_ns) > fit.cluster_gap_k) {
      ++slow_gaps;
    } else {
      inside_ns += static_cast<double>(g);
    }
  }
  fit.n_clusters = slow_gaps + nonempty_runs;
  const double outside_s =
      (static_cast<double>(stream.n_runs()) * static_cast<double>(range.length()) - inside_ns) * 1e-9;
  if (outside_s > 0.0) {
    fit.cluster_rate_hz = static_cast<double>(fit.n_clusters) / outside_s;
    fit.cluster_rate_se_hz = std::sqrt(static_cast<double>(fit.n_clusters)) / outside_s;
  }
  fit.atom_rate_hz = fit.slow().rate_hz - options.background_rate_hz;
  fit.atom_rate_se_hz = fit.slow().rate_se_hz;
  return fit;
}

}  // namespace photonstat::stats
