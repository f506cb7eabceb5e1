#include "ttvp/forecast_eval.hpp"

#include "ttvp/errors.hpp"
#include "ttvp/simulate.hpp"

#include "stats_util.hpp"

#include <doctest.h>

#include <numbers>

using namespace ttvp;

namespace {

// A draw whose coefficients stay at `beta` for T periods and whose
// observation variance is sigma2; increments are effectively switched off.
DrawRecord frozen_record(const Eigen::VectorXd& beta, double sigma2, Eigen::Index T) {
  const Eigen::Index K = beta.size();
  DrawRecord r;
  r.states = beta.transpose().replicate(T + 1, 1);
  r.indicators = IndicatorMatrix::Zero(T, K);
  r.d = Eigen::VectorXd::Constant(K, 1e6);
  r.slab_var = Eigen::VectorXd::Ones(K);
  r.spike_var = Eigen::VectorXd::Constant(K, 1e-300);
  r.tau2 = Eigen::VectorXd::Ones(K);
  r.lambda2 = 1.0;
  r.h = Eigen::VectorXd::Constant(T, std::log(sigma2));
  r.sigma2 = sigma2;
  r.stochastic_vol = false;
  return r;
}

VarSpec univariate() {
  VarSpec s;
  s.m = 1;
  s.p = 1;
  return s;
}

double student_t_logpdf(double x, double nu, double loc, double scale2) {
  const double z = (x - loc) * (x - loc) / scale2;
  return std::lgamma(0.5 * (nu + 1)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi * scale2) -
         0.5 * (nu + 1) * std::log1p(z / nu);
}

// Labels by the defining inequalities with 1-based time: point t+1 is a
// downturn when S(t-2) < S(t), S(t-1) < S(t) and S(t) > S(t+1).
std::vector<int> brute_force_labels(const std::vector<double>& s) {
  const int T = static_cast<int>(s.size());
  auto S = [&](int t) { return s[t - 1]; };
  std::vector<int> out(T, 0);
  for (int t = 3; t + 1 <= T; ++t) {
    if (S(t - 2) < S(t) && S(t - 1) < S(t) && S(t) > S(t + 1)) out[t] = 1;
    if (S(t - 2) > S(t) && S(t - 1) > S(t) && S(t) < S(t + 1)) out[t] = 2;
  }
  return out;
}

} // namespace

TEST_CASE("predictive score matches the conjugate Student-t") {
  // y_t = c + phi y_{t-1} + e_t with the normal-inverse-gamma posterior
  Rng rng(1);
  const Eigen::Index T = 80;
  Eigen::VectorXd y(T + 1);
  y[0] = 0.0;
  for (Eigen::Index t = 1; t <= T; ++t) y[t] = 0.3 + 0.6 * y[t - 1] + 0.8 * rng.normal();
  Eigen::MatrixXd X(T, 2);
  X.col(0).setOnes();
  X.col(1) = y.head(T);
  const Eigen::VectorXd obs = y.tail(T);
  const double a0 = 2.0, b0 = 1.0;
  const Eigen::Matrix2d prec = Eigen::Matrix2d::Identity() / 10.0 + X.transpose() * X;
  const Eigen::Matrix2d Vn = prec.inverse();
  const Eigen::Vector2d mn = Vn * X.transpose() * obs;
  const double an = a0 + 0.5 * T;
  const double bn = b0 + 0.5 * (obs.squaredNorm() - mn.dot(prec * mn));
  const Eigen::Matrix2d Ln = Vn.llt().matrixL();

  std::vector<VarDraw> draws;
  for (int k = 0; k < 5000; ++k) {
    const double s2 = 1.0 / sample_gamma(an, bn, rng);
    const Eigen::Vector2d beta = mn + std::sqrt(s2) * Ln * Eigen::Vector2d(rng.normal(), rng.normal());
    draws.push_back({univariate(), {frozen_record(beta, s2, T)}});
  }
  const Eigen::Vector2d x_new(1.0, y[T]);
  const double loc = x_new.dot(mn);
  const double scale2 = bn / an * (1.0 + x_new.dot(Vn * x_new));
  for (double offset : {-1.5, 0.0, 0.7, 2.0}) {
    const double realized = loc + offset * std::sqrt(scale2);
    const ForecastRecord rec =
        simulate_one_step(draws, y.tail(1), Eigen::VectorXd::Constant(1, realized), rng, ForwardLaw::Exact);
    CAPTURE(offset);
    CHECK(std::abs(rec.lps - student_t_logpdf(realized, 2.0 * an, loc, scale2)) < 0.02);
    CHECK(rec.lps == doctest::Approx(rec.lps_marginal[0]));
  }
}

TEST_CASE("predictive mean and turning-point probability with known parameters") {
  Rng rng(2);
  const Eigen::Vector2d beta(0.5, 0.8);
  const double sigma2 = 0.25;
  const std::vector<VarDraw> draws(40000, VarDraw{univariate(), {frozen_record(beta, sigma2, 10)}});
  const double last = 1.2;
  const ForecastRecord rec = simulate_one_step(draws, Eigen::MatrixXd::Constant(1, 1, last), std::nullopt, rng);
  const double mean = 0.5 + 0.8 * last;
  CHECK(std::abs(rec.predictive_mean[0] - mean) < 4.0 * std::sqrt(sigma2 / 40000.0));

  // S_t = last; downturn history holds, probability of S_{t+1} < S_t is Gaussian
  const auto tp = turning_point_probability(rec.predictive.col(0), Eigen::Vector3d(0.5, 1.0, last));
  REQUIRE(tp.down_defined);
  CHECK_FALSE(tp.up_defined);
  CHECK(tp.p_up == 0.0);
  CHECK(std::abs(tp.p_down - normal_cdf((last - mean) / std::sqrt(sigma2))) < 0.01);
}

TEST_CASE("joint score of independent variables is the sum of marginals") {
  VarSpec spec;
  spec.m = 2;
  spec.p = 1;
  DrawRecord e1 = frozen_record(Eigen::Vector3d(0.1, 0.5, 0.0), 0.5, 5);
  DrawRecord e2 = frozen_record(Eigen::Vector4d(-0.2, 0.1, 0.3, 0.0), 2.0, 5);
  const std::vector<VarDraw> draws(50, VarDraw{spec, {e1, e2}});
  Rng rng(3);
  const ForecastRecord rec =
      simulate_one_step(draws, Eigen::RowVector2d(1.0, -1.0), Eigen::Vector2d(0.3, 0.4), rng);
  CHECK(rec.lps == doctest::Approx(rec.lps_marginal.sum()).epsilon(1e-12));
  CHECK(rec.lps_marginal[0] == doctest::Approx(log_normal_pdf(0.3, 0.6, 0.5)).epsilon(1e-12));
}

TEST_CASE("score is invariant to draw order and proportional duplication") {
  Rng rng(4);
  std::vector<VarDraw> draws;
  for (int k = 0; k < 30; ++k) {
    draws.push_back({univariate(), {frozen_record(Eigen::Vector2d(rng.normal(), 0.5), 0.5 + rng.uniform(), 8)}});
  }
  const Eigen::MatrixXd hist = Eigen::MatrixXd::Constant(1, 1, 0.2);
  const Eigen::VectorXd real = Eigen::VectorXd::Constant(1, 0.9);
  const double base = simulate_one_step(draws, hist, real, rng).lps;
  std::vector<VarDraw> shuffled(draws.rbegin(), draws.rend());
  CHECK(simulate_one_step(shuffled, hist, real, rng).lps == doctest::Approx(base).epsilon(1e-12));
  std::vector<VarDraw> doubled = draws;
  doubled.insert(doubled.end(), draws.begin(), draws.end());
  CHECK(simulate_one_step(doubled, hist, real, rng).lps == doctest::Approx(base).epsilon(1e-12));

  CHECK_THROWS_AS(simulate_one_step({}, hist, real, rng), InvalidArgument);
}

TEST_CASE("log predictive Bayes factors") {
  const Eigen::VectorXd a = Eigen::VectorXd::LinSpaced(100, -3.0, 1.0);
  CHECK(log_predictive_bayes_factor(a, a).isZero());
  const Eigen::VectorXd b = (a.array() + 0.1).matrix();
  const Eigen::VectorXd bf = log_predictive_bayes_factor(b, a);
  CHECK(bf[99] == doctest::Approx(10.0));
  CHECK(bf[0] == doctest::Approx(0.1));
  CHECK(log_predictive_bayes_factor(a, b)[99] < 0.0);
  CHECK_THROWS_AS(log_predictive_bayes_factor(a, a.head(5)), InvalidArgument);
}

TEST_CASE("turning point labels") {
  CHECK(classify_turning_points(Eigen::VectorXd::LinSpaced(10, 0.0, 9.0)) ==
        std::vector<TurningPoint>(10, TurningPoint::None));

  Eigen::VectorXd s(5);
  s << 0, 1, 2, 3, 1;
  const auto lab = classify_turning_points(s);
  CHECK(lab[4] == TurningPoint::Downward);
  CHECK(std::count(lab.begin(), lab.end(), TurningPoint::None) == 4);
  CHECK(classify_turning_points((-s).eval())[4] == TurningPoint::Upward);

  Rng rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    Eigen::VectorXd x(30);
    for (auto& v : x) v = std::round(3.0 * rng.normal()); // ties exercise strictness
    const auto got = classify_turning_points(x);
    const auto want = brute_force_labels(std::vector<double>(x.begin(), x.end()));
    for (int k = 0; k < 30; ++k) CHECK(static_cast<int>(got[k]) == want[k]);
    CHECK(classify_turning_points((x.array() + 7.5).matrix()) == got);
    for (int k = 0; k < 3; ++k) CHECK(got[k] == TurningPoint::None);
  }
}

TEST_CASE("turning point probabilities") {
  const Eigen::VectorXd below = Eigen::VectorXd::Constant(10, 0.5);
  auto p = turning_point_probability(below, Eigen::Vector3d(0.0, 0.2, 1.0));
  CHECK(p.down_defined);
  CHECK(p.p_down == 1.0);

  p = turning_point_probability(below, Eigen::Vector3d(2.0, 0.2, 1.0));
  CHECK_FALSE(p.down_defined);
  CHECK_FALSE(p.up_defined);
  CHECK(p.p_down == 0.0);
  CHECK(p.p_up == 0.0);

  p = turning_point_probability(below, Eigen::Vector3d(2.0, 3.0, 0.0));
  CHECK(p.up_defined);
  CHECK(p.p_up == 1.0);
}

TEST_CASE("quadratic probability score") {
  const Eigen::Vector4d o(1, 0, 0, 1);
  CHECK(qps(o, o) == 0.0);
  CHECK(qps(Eigen::Vector4d::Constant(0.5), o) == doctest::Approx(0.5));
  CHECK(qps(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)) == doctest::Approx(2.0));
  for (double p1 = 0.0; p1 <= 1.0; p1 += 0.1) {
    for (double p2 = 0.0; p2 <= 1.0; p2 += 0.1) {
      const Eigen::Vector4d a = Eigen::Vector4d::Constant(p1), b = Eigen::Vector4d::Constant(p2);
      const double mid = qps(0.5 * (a + b), o);
      CHECK(mid <= 0.5 * (qps(a, o) + qps(b, o)) + 1e-12);
      CHECK(mid >= 0.0);
      CHECK(mid <= 2.0);
    }
  }
  CHECK_THROWS_AS(qps(Eigen::VectorXd(0), Eigen::VectorXd(0)), InvalidArgument);
  CHECK_THROWS_AS(qps(Eigen::Vector2d(0, 1), Eigen::Vector3d(0, 1, 1)), InvalidArgument);
}

TEST_CASE("expanding window evaluation") {
  DgpSpec dgp;
  dgp.kind = DgpKind::VarTtvp;
  dgp.m = 2;
  dgp.T = 60;
  Rng rng(6);
  const VarSample sample = simulate_var(dgp, rng);
  VarSpec spec;
  spec.m = 2;
  SamplerConfig c;
  c.n_draws = 80;
  c.n_burn = 30;
  ForecastOptions opt;
  opt.holdout = 3;
  opt.refit_every = 2;
  opt.warm_burn = 10;
  opt.turning_point_variable = 0;
  const auto recs = expanding_window_evaluate(sample.data, spec, c, opt);
  REQUIRE(recs.size() == 3);
  const Eigen::Index N = sample.data.rows();
  Eigen::VectorXd lps(3);
  for (int h = 0; h < 3; ++h) {
    CHECK(recs[h].origin == N - 3 + h);
    CHECK(std::isfinite(recs[h].lps));
    CHECK(recs[h].predictive.rows() == 50);
    CHECK(recs[h].p_down >= 0.0);
    CHECK(recs[h].p_down <= 1.0);
    lps[h] = recs[h].lps;
  }
  CHECK(log_predictive_bayes_factor(lps, Eigen::VectorXd::Zero(3))[2] == doctest::Approx(lps.sum()));

  const auto again = expanding_window_evaluate(sample.data, spec, c, opt);
  for (int h = 0; h < 3; ++h) CHECK(again[h].lps == recs[h].lps);

  opt.holdout = static_cast<int>(N);
  CHECK_THROWS_AS(expanding_window_evaluate(sample.data, spec, c, opt), InvalidArgument);
}

TEST_CASE("extending a state repeats the last period") {
  EquationData d;
  Rng rng(7);
  d.regressors = Eigen::MatrixXd::Ones(12, 2);
  for (Eigen::Index t = 0; t < 12; ++t) d.regressors(t, 1) = rng.normal();
  d.observations = d.regressors.col(1) * 0.5 + 0.1 * Eigen::VectorXd::Ones(12);
  SamplerConfig c;
  const EquationState st = initialize_state(c, d);
  const EquationState ext = extend_state(st, 14);
  CHECK(ext.traj.values.rows() == 15);
  CHECK(ext.traj.values.row(14) == st.traj.values.row(12));
  CHECK(ext.traj.values.topRows(13) == st.traj.values);
  CHECK(ext.vol.h.size() == 14);
  CHECK(ext.vol.h[13] == st.vol.h[11]);
  CHECK(ext.indicators.s.rows() == 14);
  CHECK_THROWS_AS(extend_state(st, 5), InvalidArgument);
}
