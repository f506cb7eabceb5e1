#include "ttvp/equation_sampler.hpp"

#include "ttvp/errors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>

namespace ttvp {

void SamplerConfig::validate() const {
  if (n_draws < 1 || n_burn < 0 || thin < 1) throw InvalidArgument("sampler: need n_draws >= 1, n_burn >= 0, thin >= 1");
  if (n_burn >= n_draws) throw InvalidArgument("sampler: n_burn must be smaller than n_draws");
  if (!(a > 0.0) || !(b0 > 0.0) || !(b1 > 0.0)) throw InvalidArgument("sampler: a, b0, b1 must be positive");
  if (!(r0 > 0.0) || !(r1 > 0.0) || !(xi > 0.0)) throw InvalidArgument("sampler: r0, r1, xi must be positive");
  if (!(prior_lo_mult > 0.0) || !(prior_lo_mult < prior_hi_mult)) {
    throw InvalidArgument("sampler: need 0 < prior_lo_mult < prior_hi_mult");
  }
  if (grid_size < 2) throw InvalidArgument("sampler: grid_size must be at least 2");
  if (!(mu_var > 0.0) || !(a_rho > 0.0) || !(b_rho > 0.0) || !(B_zeta > 0.0) || !(c0 > 0.0) || !(c1 > 0.0)) {
    throw InvalidArgument("sampler: volatility prior constants must be positive");
  }
}

int SamplerConfig::retained() const { return (n_draws - n_burn) / thin; }

bool SamplerConfig::keeps(int sweep) const { return sweep >= n_burn && (sweep - n_burn + 1) % thin == 0; }

void EquationData::validate() const {
  if (regressors.rows() != observations.size()) throw InvalidArgument("equation data: regressor rows differ from T");
  if (observations.size() < 1) throw InvalidArgument("equation data: empty sample");
  if (regressors.cols() < 1) throw InvalidArgument("equation data: no regressors");
  if (!regressors.allFinite() || !observations.allFinite()) throw InvalidArgument("equation data: non-finite values");
  if (ols_var.size() != 0 && (ols_var.size() != regressors.cols() || (ols_var.array() <= 0.0).any())) {
    throw InvalidArgument("equation data: ols_var must be positive with one entry per regressor");
  }
}

Eigen::VectorXd EquationState::residuals(const EquationData& data) const {
  const Eigen::Index T = data.time_points();
  Eigen::VectorXd r(T);
  for (Eigen::Index t = 0; t < T; ++t) r[t] = data.observations[t] - data.regressors.row(t).dot(traj.values.row(t + 1));
  return r;
}

Eigen::VectorXd ols_coefficient_variance(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index T = X.rows();
  const Eigen::Index K = X.cols();
  Eigen::MatrixXd XtX = X.transpose() * X;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(XtX);
  const double trace = XtX.trace();
  const bool singular = ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
                        ldlt.vectorD().minCoeff() <= 1e-12 * std::max(trace, 1e-300);
  if (singular) {
    XtX.diagonal().array() += 1e-6 * std::max(trace, 1.0);
    ldlt.compute(XtX);
  }
  const Eigen::VectorXd beta = ldlt.solve(X.transpose() * y);
  const double dof = std::max<double>(static_cast<double>(T - K), 1.0);
  const double s2 = std::max((y - X * beta).squaredNorm() / dof, 1e-300);
  const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(K, K));
  Eigen::VectorXd v = s2 * inv.diagonal();
  for (Eigen::Index k = 0; k < K; ++k) v[k] = std::max(v[k], 1e-300);
  return v;
}

namespace {

ThresholdBlock make_threshold_block(const SamplerConfig& c, const Eigen::VectorXd& ols_var) {
  ThresholdBlock b;
  const Eigen::Index K = ols_var.size();
  b.xi = c.xi;
  b.r0 = c.r0;
  b.r1 = c.r1;
  b.prior_lo_mult = c.prior_lo_mult;
  b.prior_hi_mult = c.prior_hi_mult;
  b.grid_size = c.grid_size;
  b.thresholded = c.model == ModelKind::Threshold;
  b.ols_var = ols_var;
  b.refresh_spike();
  b.slab_var = Eigen::VectorXd::Constant(K, c.r1 / c.r0);
  b.d.resize(K);
  for (Eigen::Index j = 0; j < K; ++j) b.d[j] = b.thresholded ? 0.5 * (b.prior_lo(j) + b.prior_hi(j)) : 0.0;
  return b;
}

VolatilityBlock make_vol_block(const SamplerConfig& c) {
  VolatilityBlock v;
  v.mode = c.vol_mode;
  v.mu_mean = c.mu_mean;
  v.mu_var = c.mu_var;
  v.a_rho = c.a_rho;
  v.b_rho = c.b_rho;
  v.B_zeta = c.B_zeta;
  v.c0 = c.c0;
  v.c1 = c.c1;
  return v;
}

ShrinkageBlock make_shrinkage_block(const SamplerConfig& c, Eigen::Index K) {
  ShrinkageBlock s;
  s.a = c.a;
  s.b0 = c.b0;
  s.b1 = c.b1;
  s.lambda2 = 1.0;
  s.tau2 = Eigen::VectorXd::Ones(K);
  return s;
}

StateSpaceProblem make_problem(const EquationState& st, const EquationData& data, const Eigen::MatrixXd& theta) {
  StateSpaceProblem p;
  p.regressors = data.regressors;
  p.observations = data.observations;
  p.obs_variance = st.vol.variances(data.time_points());
  p.state_innovation_variance = theta;
  p.initial_mean = Eigen::VectorXd::Zero(data.dim());
  p.initial_variance = st.shrinkage.tau2;
  return p;
}

double log_normal_interval(double a, double b) {
  // log(Phi(b) - Phi(a)) for a < b
  if (a > 0.0) {
    const double la = log_normal_ccdf(a);
    const double lb = log_normal_ccdf(b);
    return la + std::log1p(-std::exp(lb - la));
  }
  if (b < 0.0) {
    const double lb = log_normal_cdf(b);
    const double la = log_normal_cdf(a);
    return lb + std::log1p(-std::exp(la - lb));
  }
  return std::log1p(-normal_cdf(a) - normal_ccdf(b));
}

// Metropolis-Hastings corrected FFBS move. The proposal is FFBS under the
// regime path of the current trajectory; the target weights each increment
// by the variance of the regime it actually falls into.
bool exact_state_move(EquationState& st, const EquationData& data, Rng& rng) {
  const ThresholdBlock& tb = st.threshold;
  const Eigen::MatrixXd theta_cur = build_state_variances(st.indicators, tb);
  const StateSpaceProblem prob_cur = make_problem(st, data, theta_cur);
  const FilterResult f_cur = kalman_filter(prob_cur);
  StateTrajectory prop = ffbs_draw(prob_cur, f_cur, rng);
  IndicatorPath s_prop = compute_indicators(prop, tb);
  if (s_prop.s == st.indicators.s) {
    st.traj = std::move(prop);
    return true;
  }
  const Eigen::MatrixXd theta_prop = build_state_variances(s_prop, tb);
  StateSpaceProblem prob_prop = prob_cur;
  prob_prop.state_innovation_variance = theta_prop;
  const double ml_prop = kalman_filter(prob_prop).log_likelihood();
  const Eigen::MatrixXd d_prop = trajectory_increments(prop);
  const Eigen::MatrixXd d_cur = trajectory_increments(st.traj);
  double log_r = f_cur.log_likelihood() - ml_prop;
  for (Eigen::Index j = 0; j < theta_cur.cols(); ++j) {
    for (Eigen::Index t = 0; t < theta_cur.rows(); ++t) {
      const double a = theta_prop(t, j);
      const double b = theta_cur(t, j);
      if (a == b) continue;
      log_r += log_normal_pdf(d_prop(t, j), 0.0, a) - log_normal_pdf(d_prop(t, j), 0.0, b);
      log_r += log_normal_pdf(d_cur(t, j), 0.0, a) - log_normal_pdf(d_cur(t, j), 0.0, b);
    }
  }
  if (std::log(rng.uniform()) < log_r) {
    st.traj = std::move(prop);
    return true;
  }
  return false;
}

// Exact Gibbs update of each increment b_{t,j} - b_{t-1,j} given everything
// else. Moving one increment shifts b_{u,j} for all u >= t, so its conditional
// combines a Gaussian likelihood term with the three-piece regime prior.
void increment_gibbs(EquationState& st, const EquationData& data, Rng& rng) {
  const Eigen::Index T = data.time_points();
  const Eigen::Index K = data.dim();
  const Eigen::VectorXd obs_var = st.vol.variances(T);
  Eigen::VectorXd resid = st.residuals(data);
  Eigen::VectorXd A(T + 1);
  Eigen::VectorXd B(T + 1);
  Eigen::VectorXd shift(T);
  for (Eigen::Index j = 0; j < K; ++j) {
    const double d = st.threshold.d[j];
    const double theta[2] = {st.threshold.spike_var[j], st.threshold.slab_var[j]};
    A[T] = 0.0;
    B[T] = 0.0;
    for (Eigen::Index u = T - 1; u >= 0; --u) {
      const double x = data.regressors(u, j);
      A[u] = A[u + 1] + x * x / obs_var[u];
      B[u] = B[u + 1] + x * resid[u] / obs_var[u];
    }
    double cum = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
      const double delta = st.traj.values(t + 1, j) - st.traj.values(t, j);
      const double a = A[t];
      const double c = B[t] - a * cum + a * delta;
      // pieces: 0 = (-inf, -d), 1 = [-d, d], 2 = (d, inf)
      double logm[3];
      double mean[3];
      double sd[3];
      for (int k = 0; k < 3; ++k) {
        const double th = theta[k == 1 ? 0 : 1];
        const double P = a + 1.0 / th;
        mean[k] = c / P;
        sd[k] = 1.0 / std::sqrt(P);
        double lp;
        if (k == 0) lp = log_normal_cdf((-d - mean[k]) / sd[k]);
        else if (k == 2) lp = log_normal_ccdf((d - mean[k]) / sd[k]);
        else lp = log_normal_interval((-d - mean[k]) / sd[k], (d - mean[k]) / sd[k]);
        logm[k] = -0.5 * std::log(th * P) + 0.5 * c * c / P + lp;
      }
      const double top = std::max({logm[0], logm[1], logm[2]});
      double w[3];
      for (int k = 0; k < 3; ++k) w[k] = std::exp(logm[k] - top);
      double u = rng.uniform() * (w[0] + w[1] + w[2]);
      const int k = u < w[0] ? 0 : (u < w[0] + w[1] ? 1 : 2);
      double lo = k == 0 ? -kInfinity : (k == 1 ? -d : d);
      double hi = k == 0 ? -d : (k == 1 ? d : kInfinity);
      const double fresh = sample_truncnorm(mean[k], sd[k], lo, hi, rng);
      const double step = fresh - delta;
      cum += step;
      shift[t] = cum;
    }
    for (Eigen::Index t = 0; t < T; ++t) {
      st.traj.values(t + 1, j) += shift[t];
      resid[t] -= data.regressors(t, j) * shift[t];
    }
  }
}

// Single-site Gibbs update of every b_{t,j} given its neighbours. The
// conditional is a Gaussian likelihood term times the regime densities of the
// increments on either side; each regime pair holds on an interval bounded by
// b_{t-1,j} +- d and b_{t+1,j} +- d.
void state_site_gibbs(EquationState& st, const EquationData& data, Rng& rng) {
  const Eigen::Index T = data.time_points();
  const Eigen::VectorXd obs_var = st.vol.variances(T);
  Eigen::VectorXd resid = st.residuals(data);
  Eigen::MatrixXd& b = st.traj.values;

  struct Term {
    double w;      // precision
    double center;
  };
  for (Eigen::Index j = 0; j < data.dim(); ++j) {
    const double d = st.threshold.d[j];
    const double spike = st.threshold.spike_var[j];
    const double slab = st.threshold.slab_var[j];
    auto theta = [&](double delta) { return std::abs(delta) > d ? slab : spike; };

    for (Eigen::Index t = 0; t <= T; ++t) {
      const double cur = b(t, j);
      std::vector<Term> fixed;
      if (t == 0) {
        fixed.push_back({1.0 / st.shrinkage.tau2[j], 0.0});
      } else {
        const double x = data.regressors(t - 1, j);
        if (x != 0.0) fixed.push_back({x * x / obs_var[t - 1], cur + resid[t - 1] / x});
      }
      // neighbours: left increment b - b_{t-1}, right increment b_{t+1} - b
      const bool has_left = t > 0;
      const bool has_right = t < T;
      double cuts[4];
      int n_cuts = 0;
      if (has_left) {
        cuts[n_cuts++] = b(t - 1, j) - d;
        cuts[n_cuts++] = b(t - 1, j) + d;
      }
      if (has_right) {
        cuts[n_cuts++] = b(t + 1, j) - d;
        cuts[n_cuts++] = b(t + 1, j) + d;
      }
      std::sort(cuts, cuts + n_cuts);

      double logm[5], mean[5], sd[5], lo[5], hi[5];
      const int n_pieces = n_cuts + 1;
      for (int k = 0; k < n_pieces; ++k) {
        lo[k] = k == 0 ? -kInfinity : cuts[k - 1];
        hi[k] = k == n_cuts ? kInfinity : cuts[k];
        const double probe = k == 0 ? hi[k] - 1.0 : (k == n_cuts ? lo[k] + 1.0 : 0.5 * (lo[k] + hi[k]));
        std::vector<Term> terms = fixed;
        double log_theta = 0.0;
        if (has_left) {
          const double th = theta(probe - b(t - 1, j));
          terms.push_back({1.0 / th, b(t - 1, j)});
          log_theta += std::log(th);
        }
        if (has_right) {
          const double th = theta(b(t + 1, j) - probe);
          terms.push_back({1.0 / th, b(t + 1, j)});
          log_theta += std::log(th);
        }
        double P = 0.0, L = 0.0;
        for (const auto& tm : terms) {
          P += tm.w;
          L += tm.w * tm.center;
        }
        const double m = L / P;
        double q = 0.0;
        for (const auto& tm : terms) q += tm.w * (tm.center - m) * (tm.center - m);
        mean[k] = m;
        sd[k] = 1.0 / std::sqrt(P);
        double lp;
        if (k == 0) lp = log_normal_cdf((hi[k] - m) / sd[k]);
        else if (k == n_cuts) lp = log_normal_ccdf((lo[k] - m) / sd[k]);
        else lp = hi[k] > lo[k] ? log_normal_interval((lo[k] - m) / sd[k], (hi[k] - m) / sd[k]) : -kInfinity;
        logm[k] = -0.5 * log_theta - 0.5 * std::log(P) - 0.5 * q + lp;
      }
      const double top = *std::max_element(logm, logm + n_pieces);
      double w[5], total = 0.0;
      for (int k = 0; k < n_pieces; ++k) total += (w[k] = std::exp(logm[k] - top));
      double u = rng.uniform() * total;
      int k = 0;
      while (k < n_pieces - 1 && u >= w[k]) u -= w[k++];
      const double fresh = sample_truncnorm(mean[k], sd[k], lo[k], hi[k], rng);
      b(t, j) = fresh;
      if (t > 0) resid[t - 1] -= data.regressors(t - 1, j) * (fresh - cur);
    }
  }
}

// Gibbs update of each initial state with the increments held fixed, which
// shifts the whole path of that coefficient by a constant.
void initial_state_gibbs(EquationState& st, const EquationData& data, Rng& rng) {
  const Eigen::Index T = data.time_points();
  const Eigen::VectorXd obs_var = st.vol.variances(T);
  Eigen::VectorXd resid = st.residuals(data);
  for (Eigen::Index j = 0; j < data.dim(); ++j) {
    double a = 0.0;
    double b = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
      const double x = data.regressors(t, j);
      a += x * x / obs_var[t];
      b += x * resid[t] / obs_var[t];
    }
    const double b0 = st.traj.values(0, j);
    const double prec = a + 1.0 / st.shrinkage.tau2[j];
    const double fresh = (a * b0 + b) / prec + rng.normal() / std::sqrt(prec);
    const double shift = fresh - b0;
    st.traj.values.col(j).array() += shift;
    resid -= data.regressors.col(j) * shift;
  }
}

} // namespace

EquationState initialize_state(const SamplerConfig& config, const EquationData& data) {
  config.validate();
  data.validate();
  const Eigen::Index K = data.dim();
  const Eigen::VectorXd ols_var =
      data.ols_var.size() == K ? data.ols_var : ols_coefficient_variance(data.regressors, data.observations);

  EquationState st;
  st.threshold = make_threshold_block(config, ols_var);
  if (st.threshold.thresholded && st.threshold.slab_var.minCoeff() <= 10.0 * st.threshold.spike_var.maxCoeff()) {
    throw InvalidArgument("sampler: slab variance must exceed ten times the spike variance");
  }
  st.shrinkage = make_shrinkage_block(config, K);
  st.vol = make_vol_block(config);

  Eigen::MatrixXd XtX = data.regressors.transpose() * data.regressors;
  XtX.diagonal().array() += 1e-8 * std::max(XtX.trace(), 1.0);
  const Eigen::VectorXd beta = XtX.ldlt().solve(data.regressors.transpose() * data.observations);
  initialize_volatility(st.vol, data.observations - data.regressors * beta);

  const Eigen::MatrixXd theta = st.threshold.slab_var.transpose().replicate(data.time_points(), 1);
  const StateSpaceProblem p = make_problem(st, data, theta);
  st.traj.values = kalman_smoother(p);
  st.indicators = compute_indicators(st.traj, st.threshold);
  return st;
}

void gibbs_sweep(EquationState& st, const EquationData& data, const SamplerConfig& config, Rng& rng) {
  const bool thresholded = st.threshold.thresholded;
  int step = 1;
  try {
    // (1) states
    if (thresholded && config.state_update == StateUpdate::Exact) {
      exact_state_move(st, data, rng);
      increment_gibbs(st, data, rng);
      state_site_gibbs(st, data, rng);
      initial_state_gibbs(st, data, rng);
    } else {
      const StateSpaceProblem p = make_problem(st, data, build_state_variances(st.indicators, st.threshold));
      st.traj = ffbs_draw(p, rng);
    }
    st.indicators = compute_indicators(st.traj, st.threshold);

    // (2) slab variances
    step = 2;
    update_slab_precision(st.traj, st.indicators, st.threshold, rng);

    // (3), (4) shrinkage scales
    step = 3;
    update_tau2(st.shrinkage, st.traj.values.row(0).transpose(), rng);
    step = 4;
    update_lambda2(st.shrinkage, rng);

    // (5) thresholds
    step = 5;
    if (thresholded) {
      for (Eigen::Index j = 0; j < st.threshold.size(); ++j) {
        if (config.threshold_update == ThresholdUpdate::Griddy) {
          update_threshold_griddy(st.traj, st.threshold, j, rng);
        } else {
          update_threshold_exact(st.traj, st.threshold, j, rng);
        }
      }
      st.indicators = compute_indicators(st.traj, st.threshold);
    }

    // (6) observation variances
    step = 6;
    const Eigen::VectorXd r = st.residuals(data);
    if (st.vol.mode == VolMode::Stochastic) {
      update_sv(r, st.vol, rng, config.sv_kernel);
    } else {
      update_sigma2_homoscedastic(r, st.vol, rng);
    }
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(e.what()) + " in update step " + std::to_string(step), e.index());
  }
  if (!st.traj.values.allFinite()) throw NumericalError("gibbs_sweep: non-finite states");
}

// ---------------------------------------------------------------------------
// draw records

DrawRecord DrawRecord::from_state(const EquationState& st, int sweep) {
  DrawRecord r;
  r.states = st.traj.values;
  r.indicators = st.indicators.s;
  r.d = st.threshold.d;
  r.slab_var = st.threshold.slab_var;
  r.spike_var = st.threshold.spike_var;
  r.lambda2 = st.shrinkage.lambda2;
  r.tau2 = st.shrinkage.tau2;
  const Eigen::Index T = st.indicators.s.rows();
  if (st.vol.mode == VolMode::Stochastic) {
    r.h = st.vol.h;
    r.h0 = st.vol.h0;
    r.mu = st.vol.mu;
    r.rho = st.vol.rho;
    r.zeta = st.vol.zeta;
  } else {
    r.h = Eigen::VectorXd::Constant(T, std::log(st.vol.sigma2));
    r.h0 = std::log(st.vol.sigma2);
    r.mu = r.h0;
  }
  r.sigma2 = st.vol.sigma2;
  r.stochastic_vol = st.vol.mode == VolMode::Stochastic;
  r.sweep = sweep;
  return r;
}

EquationState DrawRecord::to_state(const SamplerConfig& config, const EquationData& data) const {
  EquationState st;
  st.threshold = make_threshold_block(config, data.ols_var.size() == states.cols()
                                                  ? data.ols_var
                                                  : ols_coefficient_variance(data.regressors, data.observations));
  st.threshold.d = d;
  st.threshold.slab_var = slab_var;
  st.threshold.spike_var = spike_var;
  st.shrinkage = make_shrinkage_block(config, states.cols());
  st.shrinkage.lambda2 = lambda2;
  st.shrinkage.tau2 = tau2;
  st.vol = make_vol_block(config);
  st.vol.sigma2 = sigma2;
  if (config.vol_mode == VolMode::Stochastic) {
    st.vol.h = h;
    st.vol.h0 = h0;
    st.vol.mu = mu;
    st.vol.rho = rho;
    st.vol.zeta = zeta;
  }
  st.traj.values = states;
  st.indicators = compute_indicators(st.traj, st.threshold);
  return st;
}

Eigen::MatrixXd DrawRecord::state_variances() const {
  Eigen::MatrixXd theta(indicators.rows(), indicators.cols());
  for (Eigen::Index j = 0; j < indicators.cols(); ++j) {
    for (Eigen::Index t = 0; t < indicators.rows(); ++t) theta(t, j) = indicators(t, j) ? slab_var[j] : spike_var[j];
  }
  return theta;
}

namespace {

std::size_t record_bytes(const DrawRecord& r) {
  return sizeof(double) * (r.states.size() + r.d.size() * 4 + r.h.size() + 8) + r.indicators.size();
}

std::atomic<unsigned long> spill_counter{0};

} // namespace

DrawStore::DrawStore(std::size_t spill_bytes, std::filesystem::path spill_dir)
    : spill_bytes_(spill_bytes), spill_dir_(std::move(spill_dir)) {}

DrawStore::DrawStore(DrawStore&&) noexcept = default;
DrawStore& DrawStore::operator=(DrawStore&&) noexcept = default;

DrawStore::~DrawStore() {
  if (file_) file_->close();
  if (!path_.empty()) {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
}

void DrawStore::push(DrawRecord record) {
  if (count_ == 0) {
    T_ = record.indicators.rows();
    K_ = record.states.cols();
    record_doubles_ = packed_record_size(T_, K_);
  }
  if (record.states.cols() != K_ || record.indicators.rows() != T_) throw InvalidArgument("DrawStore: shape change");
  ++count_;
  if (!path_.empty()) {
    write_record(record);
    return;
  }
  bytes_ += record_bytes(record);
  memory_.push_back(std::move(record));
  if (spill_bytes_ > 0 && bytes_ > spill_bytes_) spill_memory();
}

void DrawStore::spill_memory() {
  const auto dir = spill_dir_.empty() ? std::filesystem::temp_directory_path() : spill_dir_;
  path_ = dir / ("ttvp-draws-" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + "-" +
                 std::to_string(spill_counter++) + ".bin");
  file_ = std::make_unique<std::fstream>(path_, std::ios::binary | std::ios::in | std::ios::out | std::ios::trunc);
  if (!*file_) throw IoError("DrawStore: cannot open spill file " + path_.string());
  for (const auto& r : memory_) write_record(r);
  memory_.clear();
  memory_.shrink_to_fit();
}

std::size_t packed_record_size(Eigen::Index T, Eigen::Index K) {
  return static_cast<std::size_t>((T + 1) * K + T * K + 4 * K + T + 8);
}

std::vector<double> pack_record(const DrawRecord& r) {
  const Eigen::Index T = r.indicators.rows();
  const Eigen::Index K = r.indicators.cols();
  std::vector<double> buf;
  buf.reserve(packed_record_size(T, K));
  buf.insert(buf.end(), r.states.data(), r.states.data() + r.states.size());
  for (Eigen::Index i = 0; i < r.indicators.size(); ++i) buf.push_back(r.indicators.data()[i]);
  for (const auto* v : {&r.d, &r.slab_var, &r.spike_var, &r.tau2}) buf.insert(buf.end(), v->data(), v->data() + v->size());
  buf.insert(buf.end(), r.h.data(), r.h.data() + r.h.size());
  for (double x : {r.lambda2, r.h0, r.mu, r.rho, r.zeta, r.sigma2, static_cast<double>(r.sweep),
                   r.stochastic_vol ? 1.0 : 0.0}) {
    buf.push_back(x);
  }
  return buf;
}

DrawRecord unpack_record(const double* p, Eigen::Index T, Eigen::Index K) {
  DrawRecord r;
  auto take = [&](Eigen::Index n) {
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(p, n);
    p += n;
    return v;
  };
  r.states = Eigen::Map<const Eigen::MatrixXd>(p, T + 1, K);
  p += (T + 1) * K;
  r.indicators.resize(T, K);
  for (Eigen::Index k = 0; k < T * K; ++k) r.indicators.data()[k] = static_cast<std::uint8_t>(*p++);
  r.d = take(K);
  r.slab_var = take(K);
  r.spike_var = take(K);
  r.tau2 = take(K);
  r.h = take(T);
  r.lambda2 = *p++;
  r.h0 = *p++;
  r.mu = *p++;
  r.rho = *p++;
  r.zeta = *p++;
  r.sigma2 = *p++;
  r.sweep = static_cast<int>(*p++);
  r.stochastic_vol = *p++ != 0.0;
  return r;
}

void DrawStore::write_record(const DrawRecord& r) {
  const std::vector<double> buf = pack_record(r);
  file_->seekp(0, std::ios::end);
  file_->write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
  if (!*file_) throw IoError("DrawStore: write to spill file failed");
}

DrawRecord DrawStore::get(std::size_t i) const {
  if (i >= count_) throw InvalidArgument("DrawStore: index out of range");
  if (path_.empty()) return memory_[i];
  std::vector<double> buf(record_doubles_);
  file_->seekg(static_cast<std::streamoff>(i * record_doubles_ * sizeof(double)));
  file_->read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
  if (!*file_) throw IoError("DrawStore: read from spill file failed");
  return unpack_record(buf.data(), T_, K_);
}

// ---------------------------------------------------------------------------

double effective_sample_size(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 4) return static_cast<double>(n);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  auto acov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - mean) * (x[i + lag] - mean);
    return s / static_cast<double>(n);
  };
  const double g0 = acov(0);
  if (!(g0 > 0.0)) return static_cast<double>(n);
  double sum = 0.0;
  double prev_pair = kInfinity;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = acov(2 * k) + acov(2 * k + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    sum += pair;
    prev_pair = pair;
  }
  const double tau = std::max(2.0 * sum / g0 - 1.0, 1.0 / static_cast<double>(n));
  return std::min(static_cast<double>(n) / tau, static_cast<double>(n));
}

PosteriorDraws run_chain(const SamplerConfig& config, const EquationData& data, Rng& rng,
                         const EquationState* initial) {
  config.validate();
  data.validate();
  const auto start = std::chrono::steady_clock::now();
  PosteriorDraws out;
  out.draws = DrawStore(config.spill_bytes, config.spill_dir);
  EquationState st = initial ? *initial : initialize_state(config, data);

  std::vector<std::vector<double>> traces(6);
  for (int i = 0; i < config.n_draws; ++i) {
    try {
      gibbs_sweep(st, data, config, rng);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " at sweep " + std::to_string(i), i);
    }
    if (!config.keeps(i)) continue;
    out.draws.push(DrawRecord::from_state(st, i));
    traces[0].push_back(st.shrinkage.lambda2);
    traces[1].push_back(st.threshold.slab_var.mean());
    traces[2].push_back(st.threshold.d.mean());
    traces[3].push_back(st.vol.mode == VolMode::Stochastic ? st.vol.mu : std::log(st.vol.sigma2));
    traces[4].push_back(st.vol.rho);
    traces[5].push_back(st.vol.mode == VolMode::Stochastic ? st.vol.zeta : st.vol.sigma2);
  }
  const char* names[6] = {"lambda2", "slab_var_mean", "threshold_mean", "mu", "rho",
                          config.vol_mode == VolMode::Stochastic ? "zeta" : "sigma2"};
  for (int k = 0; k < 6; ++k) {
    if (k == 2 && config.model != ModelKind::Threshold) continue;
    if (k == 4 && config.vol_mode != VolMode::Stochastic) continue;
    out.diagnostics.ess.emplace_back(names[k], effective_sample_size(traces[k]));
  }
  out.last_state = std::move(st);
  out.diagnostics.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

PosteriorDraws run_chain(const SamplerConfig& config, const EquationData& data) {
  Rng rng = Rng::stream(config.seed, 0, 0);
  return run_chain(config, data, rng);
}

} // namespace ttvp
