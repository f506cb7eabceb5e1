#include "ttvp/threshold.hpp"

#include "ttvp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ttvp {

double ThresholdBlock::prior_lo(Eigen::Index j) const { return prior_lo_mult * std::sqrt(slab_var[j]); }
double ThresholdBlock::prior_hi(Eigen::Index j) const { return prior_hi_mult * std::sqrt(slab_var[j]); }

void ThresholdBlock::refresh_spike() { spike_var = xi * ols_var; }

void ThresholdBlock::validate() const {
  const Eigen::Index K = slab_var.size();
  if (d.size() != K || spike_var.size() != K || ols_var.size() != K) {
    throw InvalidArgument("threshold: block vectors must share one length");
  }
  if (!(xi > 0.0) || !(r0 > 0.0) || !(r1 > 0.0)) throw InvalidArgument("threshold: xi, r0, r1 must be positive");
  if (!(prior_lo_mult > 0.0) || !(prior_lo_mult < prior_hi_mult)) {
    throw InvalidArgument("threshold: need 0 < prior_lo_mult < prior_hi_mult");
  }
  if (grid_size < 2) throw InvalidArgument("threshold: grid_size must be at least 2");
  if ((slab_var.array() <= 0.0).any() || (spike_var.array() <= 0.0).any() || (ols_var.array() <= 0.0).any()) {
    throw InvalidArgument("threshold: variances must be positive");
  }
  if (thresholded && (d.array() <= 0.0).any()) throw InvalidArgument("threshold: thresholds must be positive");
}

Eigen::MatrixXd trajectory_increments(const StateTrajectory& traj) {
  const Eigen::Index T = traj.values.rows() - 1;
  return traj.values.bottomRows(T) - traj.values.topRows(T);
}

IndicatorPath compute_indicators(const StateTrajectory& traj, const ThresholdBlock& block) {
  const Eigen::MatrixXd delta = trajectory_increments(traj);
  if (delta.cols() != block.size()) throw InvalidArgument("compute_indicators: column count differs from block");
  IndicatorPath out;
  out.s.resize(delta.rows(), delta.cols());
  for (Eigen::Index j = 0; j < delta.cols(); ++j) {
    for (Eigen::Index t = 0; t < delta.rows(); ++t) {
      out.s(t, j) = !block.thresholded || std::abs(delta(t, j)) > block.d[j];
    }
  }
  return out;
}

Eigen::MatrixXd build_state_variances(const IndicatorPath& s, const ThresholdBlock& block) {
  Eigen::MatrixXd theta(s.s.rows(), s.s.cols());
  for (Eigen::Index j = 0; j < s.s.cols(); ++j) {
    for (Eigen::Index t = 0; t < s.s.rows(); ++t) theta(t, j) = s.s(t, j) ? block.slab_var[j] : block.spike_var[j];
  }
  return theta;
}

GammaParams slab_precision_conditional(const StateTrajectory& traj, const IndicatorPath& s, const ThresholdBlock& block,
                                       Eigen::Index j) {
  const Eigen::Index T = traj.values.rows() - 1;
  double count = 0.0;
  double ss = 0.0;
  for (Eigen::Index t = 0; t < T; ++t) {
    if (!s.s(t, j)) continue;
    const double delta = traj.values(t + 1, j) - traj.values(t, j);
    count += 1.0;
    ss += delta * delta;
  }
  GammaParams g{block.r0 + 0.5 * count, block.r1 + 0.5 * ss};
  if (block.thresholded) g.shape += 0.5;
  return g;
}

void update_slab_precision(const StateTrajectory& traj, const IndicatorPath& s, ThresholdBlock& block, Rng& rng) {
  for (Eigen::Index j = 0; j < block.size(); ++j) {
    const GammaParams g = slab_precision_conditional(traj, s, block, j);
    double precision;
    if (block.thresholded) {
      const double lo = block.prior_lo_mult / block.d[j];
      const double hi = block.prior_hi_mult / block.d[j];
      precision = sample_truncated_gamma(g.shape, g.rate, lo * lo, hi * hi, rng);
    } else {
      precision = sample_gamma(g.shape, g.rate, rng);
    }
    block.slab_var[j] = 1.0 / precision;
  }
}

ThresholdGrid threshold_grid(const StateTrajectory& traj, const ThresholdBlock& block, Eigen::Index j) {
  const Eigen::Index T = traj.values.rows() - 1;
  const int n = block.grid_size;
  const double lo = block.prior_lo(j);
  const double hi = block.prior_hi(j);
  const double slab = block.slab_var[j];
  const double spike = block.spike_var[j];
  const double log_slab = std::log(slab);
  const double log_spike = std::log(spike);

  ThresholdGrid g;
  g.points = Eigen::VectorXd::LinSpaced(n, lo, hi);
  g.log_density.resize(n);
  for (int i = 0; i < n; ++i) {
    double ld = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
      const double delta = traj.values(t + 1, j) - traj.values(t, j);
      const double sq = delta * delta;
      ld += std::abs(delta) > g.points[i] ? -0.5 * (log_slab + sq / slab) : -0.5 * (log_spike + sq / spike);
    }
    g.log_density[i] = ld;
  }
  return g;
}

double sample_from_grid(const Eigen::VectorXd& points, const Eigen::VectorXd& log_density, Rng& rng) {
  const Eigen::Index n = points.size();
  if (n < 2 || log_density.size() != n) throw InvalidArgument("sample_from_grid: need at least two grid points");
  const double top = log_density.maxCoeff();
  if (!std::isfinite(top)) throw NumericalError("sample_from_grid: conditional density vanishes on the whole grid");
  Eigen::VectorXd w = (log_density.array() - top).exp();
  Eigen::VectorXd cdf(n);
  cdf[0] = 0.0;
  for (Eigen::Index i = 1; i < n; ++i) cdf[i] = cdf[i - 1] + 0.5 * (w[i - 1] + w[i]) * (points[i] - points[i - 1]);
  const double target = rng.uniform() * cdf[n - 1];
  const auto it = std::upper_bound(cdf.data() + 1, cdf.data() + n, target);
  const Eigen::Index i = std::min<Eigen::Index>(it - cdf.data(), n - 1);
  const double span = cdf[i] - cdf[i - 1];
  const double frac = span > 0.0 ? (target - cdf[i - 1]) / span : 0.5;
  return points[i - 1] + frac * (points[i] - points[i - 1]);
}

void update_threshold_griddy(const StateTrajectory& traj, ThresholdBlock& block, Eigen::Index j, Rng& rng) {
  const ThresholdGrid g = threshold_grid(traj, block, j);
  block.d[j] = sample_from_grid(g.points, g.log_density, rng);
}

void update_threshold_exact(const StateTrajectory& traj, ThresholdBlock& block, Eigen::Index j, Rng& rng) {
  const Eigen::Index T = traj.values.rows() - 1;
  const double lo = block.prior_lo(j);
  const double hi = block.prior_hi(j);
  const double slab = block.slab_var[j];
  const double spike = block.spike_var[j];
  std::vector<double> mag(T);
  for (Eigen::Index t = 0; t < T; ++t) mag[t] = std::abs(traj.values(t + 1, j) - traj.values(t, j));
  std::sort(mag.begin(), mag.end());

  std::vector<double> knots{lo};
  for (double m : mag) {
    if (m > lo && m < hi) knots.push_back(m);
  }
  knots.push_back(hi);

  double ld = 0.0;
  for (double m : mag) ld += m > lo ? -0.5 * (std::log(slab) + m * m / slab) : -0.5 * (std::log(spike) + m * m / spike);
  const std::size_t n = knots.size() - 1;
  std::vector<double> logw(n);
  std::size_t next = std::upper_bound(mag.begin(), mag.end(), lo) - mag.begin();
  for (std::size_t i = 0; i < n; ++i) {
    logw[i] = ld + std::log(std::max(knots[i + 1] - knots[i], 1e-300));
    // increments with |delta| == knots[i+1] become spike increments beyond this segment
    while (next < mag.size() && mag[next] <= knots[i + 1]) {
      const double m = mag[next++];
      ld += 0.5 * (std::log(slab) + m * m / slab) - 0.5 * (std::log(spike) + m * m / spike);
    }
  }
  const double top = *std::max_element(logw.begin(), logw.end());
  double total = 0.0;
  for (double& w : logw) total += (w = std::exp(w - top));
  double u = rng.uniform() * total;
  std::size_t i = 0;
  while (i + 1 < n && u > logw[i]) u -= logw[i++];
  block.d[j] = knots[i] + rng.uniform() * (knots[i + 1] - knots[i]);
}

Eigen::MatrixXd posterior_moving_probability(const std::vector<IndicatorPath>& draws) {
  if (draws.empty()) throw InvalidArgument("posterior_moving_probability: no draws");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(draws.front().s.rows(), draws.front().s.cols());
  for (const auto& d : draws) {
    if (d.s.rows() != acc.rows() || d.s.cols() != acc.cols()) {
      throw InvalidArgument("posterior_moving_probability: draws differ in shape");
    }
    acc += d.s.cast<double>();
  }
  return acc / static_cast<double>(draws.size());
}

// ---------------------------------------------------------------------------

namespace {

// P(|e1| > d) and P(|e0| <= d)
std::pair<double, double> branch_masses(double d, double slab, double spike) {
  return {std::erfc(d / std::sqrt(2.0 * slab)), std::erf(d / std::sqrt(2.0 * spike))};
}

double sample_slab_tail(double d, double slab, Rng& rng) {
  const double mag = sample_truncnorm(0.0, std::sqrt(slab), d, kInfinity, rng);
  return rng.uniform() < 0.5 ? -mag : mag;
}

} // namespace

double log_increment_normalizer(double d, double slab, double spike) {
  const auto [a, b] = branch_masses(d, slab, spike);
  return std::log(a + b);
}

double log_increment_density(double delta, double d, double slab, double spike) {
  const double theta = std::abs(delta) > d ? slab : spike;
  return log_normal_pdf(delta, 0.0, theta) - log_increment_normalizer(d, slab, spike);
}

double sample_increment(double d, double slab, double spike, ForwardLaw law, Rng& rng) {
  if (law == ForwardLaw::ProposeSlab) {
    const double e = std::sqrt(slab) * rng.normal();
    if (std::abs(e) > d) return e;
    return sample_truncnorm(0.0, std::sqrt(spike), -d, d, rng);
  }
  const auto [a, b] = branch_masses(d, slab, spike);
  if (rng.uniform() * (a + b) < a) return sample_slab_tail(d, slab, rng);
  return sample_truncnorm(0.0, std::sqrt(spike), -d, d, rng);
}

void draw_threshold_prior(ThresholdBlock& block, Eigen::Index T, Rng& rng) {
  for (Eigen::Index j = 0; j < block.size(); ++j) {
    if (!block.thresholded) {
      block.slab_var[j] = 1.0 / sample_gamma(block.r0, block.r1, rng);
      block.d[j] = 0.0;
      continue;
    }
    const double log_zmax = std::log1p(std::erfc(block.prior_lo_mult / std::numbers::sqrt2));
    for (long it = 0;; ++it) {
      if (it > 10000000) throw NumericalError("draw_threshold_prior: rejection sampler did not terminate");
      const double slab = 1.0 / sample_gamma(block.r0, block.r1, rng);
      const double c = block.prior_lo_mult + rng.uniform() * (block.prior_hi_mult - block.prior_lo_mult);
      const double d = c * std::sqrt(slab);
      const double log_z = log_increment_normalizer(d, slab, block.spike_var[j]);
      if (std::log(rng.uniform()) < static_cast<double>(T) * (log_z - log_zmax)) {
        block.slab_var[j] = slab;
        block.d[j] = d;
        break;
      }
    }
  }
}

} // namespace ttvp
