#include "ttvp/validation.hpp"

#include "ttvp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace ttvp {

void draw_equation_prior(EquationState& st, Eigen::Index T, Rng& rng) {
  const Eigen::Index K = st.threshold.size();
  const Eigen::VectorXd beta0 = draw_shrinkage_prior(st.shrinkage, rng);
  draw_threshold_prior(st.threshold, T, rng);
  st.traj.values.resize(T + 1, K);
  st.traj.values.row(0) = beta0.transpose();
  for (Eigen::Index j = 0; j < K; ++j) {
    const double d = st.threshold.d[j];
    const double slab = st.threshold.slab_var[j];
    const double spike = st.threshold.spike_var[j];
    for (Eigen::Index t = 1; t <= T; ++t) {
      st.traj.values(t, j) = st.traj.values(t - 1, j) + sample_increment(d, slab, spike, ForwardLaw::Exact, rng);
    }
  }
  st.indicators = compute_indicators(st.traj, st.threshold);
  draw_volatility_prior(st.vol, T, rng);
}

Eigen::VectorXd simulate_observations(const EquationState& st, const Eigen::MatrixXd& X, Rng& rng) {
  const Eigen::Index T = X.rows();
  const Eigen::VectorXd v = st.vol.variances(T);
  Eigen::VectorXd y(T);
  for (Eigen::Index t = 0; t < T; ++t) y[t] = X.row(t).dot(st.traj.values.row(t + 1)) + std::sqrt(v[t]) * rng.normal();
  return y;
}

bool GewekeReport::passed(double z_max) const {
  for (const auto& m : moments) {
    if (!(std::abs(m.z) < z_max)) return false;
  }
  return !moments.empty();
}

SamplerConfig geweke_config() {
  SamplerConfig c;
  c.a = 1.0;
  c.b0 = 6.0;
  c.b1 = 6.0;
  c.r0 = 6.0;
  c.r1 = 0.5;
  c.xi = 1e-3;
  c.mu_mean = 0.0;
  c.mu_var = 1.0;
  c.a_rho = 20.0;
  c.b_rho = 2.0;
  c.B_zeta = 0.1;
  c.c0 = 6.0;
  c.c1 = 5.0;
  c.n_draws = 2;
  c.n_burn = 0;
  return c;
}

namespace {

using Functional = std::function<double(const EquationState&)>;

std::vector<std::pair<std::string, Functional>> tracked(const SamplerConfig& c) {
  std::vector<std::pair<std::string, Functional>> f;
  auto both = [&](const std::string& name, std::function<double(const EquationState&)> g) {
    f.emplace_back("E[" + name + "]", g);
    f.emplace_back("E[" + name + "^2]", [g](const EquationState& s) {
      const double v = g(s);
      return v * v;
    });
  };
  both("beta0_1", [](const EquationState& s) { return s.traj.values(0, 0); });
  both("lambda2", [](const EquationState& s) { return s.shrinkage.lambda2; });
  both("tau2_1", [](const EquationState& s) { return s.shrinkage.tau2[0]; });
  both("slab_var_1", [](const EquationState& s) { return s.threshold.slab_var[0]; });
  if (c.model == ModelKind::Threshold) both("d_1", [](const EquationState& s) { return s.threshold.d[0]; });
  if (c.vol_mode == VolMode::Stochastic) {
    both("mu", [](const EquationState& s) { return s.vol.mu; });
    both("rho", [](const EquationState& s) { return s.vol.rho; });
    both("zeta", [](const EquationState& s) { return s.vol.zeta; });
  } else {
    both("sigma2", [](const EquationState& s) { return s.vol.sigma2; });
  }
  return f;
}

double mean_of(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / x.size(); }

double iid_se(const std::vector<double>& x) {
  const double m = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / (x.size() - 1.0) / x.size());
}

double batch_se(const std::vector<double>& x) {
  const std::size_t batches = 100;
  const std::size_t len = x.size() / batches;
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    means[b] = std::accumulate(x.begin() + b * len, x.begin() + (b + 1) * len, 0.0) / len;
  }
  return iid_se(means);
}

} // namespace

GewekeReport geweke_equation(const GewekeSetup& setup) {
  const SamplerConfig& cfg = setup.config;
  Rng rng = Rng::stream(setup.seed, 7, 0);

  EquationData data;
  data.regressors.resize(setup.T, setup.K);
  for (Eigen::Index i = 0; i < data.regressors.size(); ++i) data.regressors.data()[i] = 2.0 * rng.uniform() - 1.0;
  data.ols_var = Eigen::VectorXd::Constant(setup.K, setup.ols_var);
  data.observations = Eigen::VectorXd::Zero(setup.T);

  // Template state with the right constants; its values are overwritten.
  EquationData seed_data = data;
  for (Eigen::Index t = 0; t < setup.T; ++t) seed_data.observations[t] = rng.normal();
  EquationState st = initialize_state(cfg, seed_data);

  const auto fns = tracked(cfg);
  std::vector<std::vector<double>> mc(fns.size());
  std::vector<std::vector<double>> sc(fns.size());

  for (long i = 0; i < setup.n_marginal; ++i) {
    draw_equation_prior(st, setup.T, rng);
    for (std::size_t k = 0; k < fns.size(); ++k) mc[k].push_back(fns[k].second(st));
  }

  draw_equation_prior(st, setup.T, rng);
  for (long i = 0; i < setup.burn + setup.n_successive; ++i) {
    data.observations = simulate_observations(st, data.regressors, rng);
    gibbs_sweep(st, data, cfg, rng);
    if (i < setup.burn) continue;
    for (std::size_t k = 0; k < fns.size(); ++k) sc[k].push_back(fns[k].second(st));
  }

  GewekeReport report;
  for (std::size_t k = 0; k < fns.size(); ++k) {
    MomentCheck m;
    m.name = fns[k].first;
    m.marginal_mean = mean_of(mc[k]);
    m.successive_mean = mean_of(sc[k]);
    const double se = std::hypot(iid_se(mc[k]), batch_se(sc[k]));
    m.z = (m.marginal_mean - m.successive_mean) / se;
    report.moments.push_back(m);
  }
  return report;
}

std::vector<GigParams> gig_reference_grid() {
  return {{-0.45, 1e-4, 0.1}, {-0.45, 0.01, 1.0}, {-0.45, 1.0, 10.0}, {0.5, 0.5, 0.5},
          {1.5, 2.0, 0.2},    {-2.0, 3.0, 1.0},   {0.0, 1.0, 1.0},    {-0.05, 0.1, 0.02},
          {2.5, 0.01, 5.0},   {-1.0, 10.0, 0.01}, {0.9, 1e-3, 1e-3},  {-0.95, 0.2, 50.0}};
}

GigMomentCheck check_gig_moments(const GigParams& g, long min_draws, Rng& rng, long max_draws) {
  GigMomentCheck c;
  c.params = g;
  c.tolerance = g.chi <= 0.01 ? 0.02 : 0.01;
  double m[5] = {1.0};
  for (int k = 1; k <= 4; ++k) m[k] = gig_moment_oracle(g, k);
  const double cv = std::max(std::sqrt(m[2] / (m[1] * m[1]) - 1.0), std::sqrt(m[4] / (m[2] * m[2]) - 1.0));
  const double needed = std::ceil(std::pow(4.0 * cv / c.tolerance, 2));
  c.draws = std::clamp(static_cast<long>(std::min(needed, 1e18)), min_draws, std::max(min_draws, max_draws));
  double s1 = 0.0, s2 = 0.0;
  for (long n = 0; n < c.draws; ++n) {
    const double x = sample_gig(g, rng);
    s1 += x;
    s2 += x * x;
  }
  const double nd = static_cast<double>(c.draws);
  c.mean_rel_err = s1 / nd / m[1] - 1.0;
  c.second_rel_err = s2 / nd / m[2] - 1.0;
  return c;
}

} // namespace ttvp
