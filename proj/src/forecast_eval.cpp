#include "ttvp/forecast_eval.hpp"

#include "ttvp/errors.hpp"

#include <cmath>
#include <numbers>

namespace ttvp {

namespace {

double log_sum_exp_mean(const std::vector<double>& x) {
  double top = -kInfinity;
  for (double v : x) top = std::max(top, v);
  if (!std::isfinite(top)) return top;
  double s = 0.0;
  for (double v : x) s += std::exp(v - top);
  return top + std::log(s / static_cast<double>(x.size()));
}

double log_mvn(const Eigen::VectorXd& y, const Eigen::VectorXd& mean, const Eigen::LLT<Eigen::MatrixXd>& llt) {
  const Eigen::VectorXd z = llt.matrixL().solve(y - mean);
  const Eigen::MatrixXd L = llt.matrixL();
  const double logdet = 2.0 * L.diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi) + logdet + z.squaredNorm());
}

} // namespace

ForecastRecord simulate_one_step(const std::vector<VarDraw>& draws, const Eigen::MatrixXd& history,
                                 const std::optional<Eigen::VectorXd>& realized, Rng& rng, ForwardLaw law) {
  if (draws.empty()) throw InvalidArgument("simulate_one_step: no posterior draws");
  const VarSpec& spec = draws.front().spec;
  const int m = spec.m;
  if (history.cols() != m || history.rows() < spec.p) throw InvalidArgument("simulate_one_step: history too short");
  if (realized && realized->size() != m) throw InvalidArgument("simulate_one_step: realized vector has wrong size");

  const std::size_t n = draws.size();
  ForecastRecord rec;
  rec.predictive.resize(n, m);
  std::vector<double> joint(n);
  std::vector<std::vector<double>> marg(m, std::vector<double>(n));

  for (std::size_t k = 0; k < n; ++k) {
    const VarDraw& dr = draws[k];
    std::vector<Eigen::VectorXd> coef(m);
    Eigen::VectorXd log_h(m);
    for (int i = 0; i < m; ++i) {
      const DrawRecord& e = dr.equations[i];
      const Eigen::Index T = e.h.size();
      Eigen::VectorXd b = e.states.row(T).transpose();
      for (Eigen::Index j = 0; j < b.size(); ++j) b[j] += sample_increment(e.d[j], e.slab_var[j], e.spike_var[j], law, rng);
      coef[i] = b;
      if (e.stochastic_vol) {
        log_h[i] = e.mu + e.rho * (e.h[T - 1] - e.mu) + std::sqrt(e.zeta) * rng.normal();
      } else {
        log_h[i] = std::log(e.sigma2);
      }
    }
    const TimeSlice s = make_time_slice(spec, coef, log_h);
    Eigen::VectorXd structural = s.intercept;
    for (int l = 1; l <= spec.p; ++l) structural += s.lags[l - 1] * history.row(history.rows() - l).transpose();
    const Eigen::MatrixXd V = s.V();
    const Eigen::VectorXd mean = V * structural;
    const Eigen::MatrixXd cov = s.covariance();
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw NumericalError("simulate_one_step: predictive covariance not positive definite");
    Eigen::VectorXd z(m);
    for (int i = 0; i < m; ++i) z[i] = rng.normal();
    rec.predictive.row(k) = (mean + llt.matrixL() * z).transpose();
    if (realized) {
      joint[k] = log_mvn(*realized, mean, llt);
      for (int i = 0; i < m; ++i) marg[i][k] = log_normal_pdf((*realized)[i], mean[i], cov(i, i));
    }
  }
  rec.predictive_mean = rec.predictive.colwise().mean().transpose();
  rec.lps_marginal = Eigen::VectorXd::Zero(m);
  if (realized) {
    rec.lps = log_sum_exp_mean(joint);
    for (int i = 0; i < m; ++i) rec.lps_marginal[i] = log_sum_exp_mean(marg[i]);
    if (!std::isfinite(rec.lps)) throw NumericalError("simulate_one_step: log predictive score is not finite");
  }
  return rec;
}

Eigen::VectorXd log_predictive_bayes_factor(const Eigen::VectorXd& lps_model, const Eigen::VectorXd& lps_benchmark) {
  if (lps_model.size() != lps_benchmark.size()) throw InvalidArgument("log_predictive_bayes_factor: length mismatch");
  Eigen::VectorXd out(lps_model.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = (acc += lps_model[i] - lps_benchmark[i]);
  return out;
}

std::vector<TurningPoint> classify_turning_points(const Eigen::VectorXd& s) {
  std::vector<TurningPoint> out(s.size(), TurningPoint::None);
  for (Eigen::Index k = 3; k < s.size(); ++k) {
    if (s[k - 3] < s[k - 1] && s[k - 2] < s[k - 1] && s[k - 1] > s[k]) out[k] = TurningPoint::Downward;
    else if (s[k - 3] > s[k - 1] && s[k - 2] > s[k - 1] && s[k - 1] < s[k]) out[k] = TurningPoint::Upward;
  }
  return out;
}

TurningPointProbability turning_point_probability(const Eigen::VectorXd& draws, const Eigen::Vector3d& h) {
  TurningPointProbability p;
  p.down_defined = h[0] < h[2] && h[1] < h[2];
  p.up_defined = h[0] > h[2] && h[1] > h[2];
  if (draws.size() == 0) return p;
  const double n = static_cast<double>(draws.size());
  if (p.down_defined) p.p_down = (draws.array() < h[2]).count() / n;
  if (p.up_defined) p.p_up = (draws.array() > h[2]).count() / n;
  return p;
}

double qps(const Eigen::VectorXd& p, const Eigen::VectorXd& o) {
  if (p.size() != o.size()) throw InvalidArgument("qps: length mismatch");
  if (p.size() == 0) throw InvalidArgument("qps: empty input");
  return 2.0 * (p - o).squaredNorm() / static_cast<double>(p.size());
}

EquationState extend_state(const EquationState& state, Eigen::Index new_T) {
  EquationState st = state;
  const Eigen::Index T = state.traj.values.rows() - 1;
  if (new_T < T) throw InvalidArgument("extend_state: cannot shorten a state");
  const Eigen::Index K = state.traj.values.cols();
  st.traj.values.conservativeResize(new_T + 1, K);
  for (Eigen::Index t = T + 1; t <= new_T; ++t) st.traj.values.row(t) = state.traj.values.row(T);
  if (st.vol.mode == VolMode::Stochastic) {
    const double last = T > 0 ? state.vol.h[T - 1] : state.vol.h0;
    st.vol.h.conservativeResize(new_T);
    for (Eigen::Index t = T; t < new_T; ++t) st.vol.h[t] = last;
  }
  st.indicators = compute_indicators(st.traj, st.threshold);
  return st;
}

std::vector<ForecastRecord> expanding_window_evaluate(const Eigen::MatrixXd& data, const VarSpec& spec,
                                                      const SamplerConfig& config, const ForecastOptions& opt) {
  spec.validate();
  const Eigen::Index N = data.rows();
  if (opt.holdout < 1 || opt.holdout >= N - spec.p - 1) throw InvalidArgument("forecast: holdout out of range");
  if (opt.refit_every < 1) throw InvalidArgument("forecast: refit_every must be positive");
  const Eigen::MatrixXd ordered = spec.ordered(data);
  VarSpec inner = spec;
  inner.ordering.clear();

  std::vector<ForecastRecord> out;
  std::vector<EquationState> carry;
  for (int h = 0; h < opt.holdout; ++h) {
    const Eigen::Index target = N - opt.holdout + h;
    const Eigen::MatrixXd sample = ordered.topRows(target);
    SamplerConfig cfg = config;
    cfg.seed = Rng::stream(config.seed, 0x5eed, static_cast<std::uint64_t>(target)).engine()();
    VarFit fit;
    if (h % opt.refit_every == 0 || carry.empty()) {
      fit = fit_var(sample, inner, cfg, opt.threads);
    } else {
      cfg.n_burn = opt.warm_burn;
      cfg.n_draws = opt.warm_burn + (config.n_draws - config.n_burn);
      std::vector<EquationState> init;
      for (const auto& st : carry) init.push_back(extend_state(st, target - spec.p));
      fit = fit_var(sample, inner, cfg, opt.threads, &init);
    }
    carry = fit.last_states();

    std::vector<VarDraw> draws;
    for (std::size_t k = 0; k < fit.n_draws(); ++k) draws.push_back(fit.draw(k));
    Rng rng = Rng::stream(config.seed, 0xf0ca, static_cast<std::uint64_t>(target));
    const Eigen::VectorXd realized = ordered.row(target).transpose();
    ForecastRecord rec = simulate_one_step(draws, sample, realized, rng, opt.law);
    rec.origin = static_cast<int>(target);
    if (opt.turning_point_variable >= 0 && target >= 3) {
      const int v = opt.turning_point_variable;
      const Eigen::Vector3d hist(ordered(target - 3, v), ordered(target - 2, v), ordered(target - 1, v));
      const auto tp = turning_point_probability(rec.predictive.col(v), hist);
      rec.p_down = tp.p_down;
      rec.p_up = tp.p_up;
      rec.down_defined = tp.down_defined;
      rec.up_defined = tp.up_defined;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

} // namespace ttvp
