#include "ttvp/structural_analysis.hpp"

#include "ttvp/errors.hpp"

#include <doctest.h>

using namespace ttvp;

namespace {

std::vector<Eigen::VectorXd> random_coefficients(const VarSpec& spec, double lag_scale, Rng& rng) {
  std::vector<Eigen::VectorXd> coef;
  for (int i = 0; i < spec.m; ++i) {
    Eigen::VectorXd b(spec.equation_dim(i));
    for (auto& x : b) x = rng.normal();
    const int first_lag = spec.intercept ? 1 : 0;
    b.segment(first_lag, spec.m * spec.p) *= lag_scale;
    coef.push_back(b);
  }
  return coef;
}

TimeSlice stable_slice(const VarSpec& spec, Rng& rng) {
  for (;;) {
    Eigen::VectorXd log_h(spec.m);
    for (auto& x : log_h) x = 0.5 * rng.normal();
    const TimeSlice s = make_time_slice(spec, random_coefficients(spec, 0.4, rng), log_h);
    if (companion_spectral_radius(s) < 0.95) return s;
  }
}

// y_t solved from the structural form for a given structural innovation.
Eigen::VectorXd step(const TimeSlice& s, const std::vector<Eigen::VectorXd>& past, const Eigen::VectorXd& eps) {
  Eigen::VectorXd rhs = s.intercept + (0.5 * s.log_h.array()).exp().matrix().cwiseProduct(eps);
  for (std::size_t l = 0; l < s.lags.size(); ++l) rhs += s.lags[l] * past[past.size() - 1 - l];
  return s.Vinv.triangularView<Eigen::UnitLower>().solve(rhs);
}

VarDraw constant_draw(const VarSpec& spec, const TimeSlice& s, Eigen::Index T) {
  VarDraw d;
  d.spec = spec;
  for (int i = 0; i < spec.m; ++i) {
    Eigen::VectorXd b(spec.equation_dim(i));
    int c = 0;
    if (spec.intercept) b[c++] = s.intercept[i];
    for (int l = 0; l < spec.p; ++l) {
      for (int k = 0; k < spec.m; ++k) b[c++] = s.lags[l](i, k);
    }
    for (int k = 0; k < i; ++k) b[c++] = -s.Vinv(i, k);
    DrawRecord r;
    r.states = b.transpose().replicate(T + 1, 1);
    r.h = Eigen::VectorXd::Constant(T, s.log_h[i]);
    d.equations.push_back(r);
  }
  return d;
}

PosteriorDraws draws_with_variances(const std::vector<Eigen::MatrixXd>& theta_per_draw, double slab, double spike) {
  PosteriorDraws p;
  for (const auto& theta : theta_per_draw) {
    DrawRecord r;
    const Eigen::Index T = theta.rows(), K = theta.cols();
    r.states = Eigen::MatrixXd::Zero(T + 1, K);
    r.indicators = (theta.array() > 0.5).cast<std::uint8_t>();
    r.slab_var = Eigen::VectorXd::Constant(K, slab);
    r.spike_var = Eigen::VectorXd::Constant(K, spike);
    r.d = r.tau2 = Eigen::VectorXd::Ones(K);
    r.h = Eigen::VectorXd::Zero(T);
    p.draws.push(r);
  }
  return p;
}

} // namespace

TEST_CASE("zero lags and a diagonal covariance give an impact-only response") {
  VarSpec spec;
  spec.m = 3;
  spec.intercept = false;
  std::vector<Eigen::VectorXd> coef;
  for (int i = 0; i < 3; ++i) coef.push_back(Eigen::VectorXd::Zero(spec.equation_dim(i)));
  const TimeSlice s = make_time_slice(spec, coef, Eigen::Vector3d(0.1, -0.3, 0.7));
  IrfRequest req;
  req.shock = 1;
  req.shock_size = 2.5;
  req.horizon = 6;
  const ImpulseResponse r = impulse_response(s, req);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(6, 3);
  expected(0, 1) = 2.5;
  CHECK((r.response - expected).norm() < 1e-14);
  CHECK_FALSE(r.explosive);
}

TEST_CASE("first-order autoregression decays geometrically") {
  VarSpec spec;
  spec.intercept = false;
  IrfRequest req;
  req.horizon = 12;
  for (double phi : {0.9, -0.5, 1.1}) {
    const TimeSlice s = make_time_slice(spec, {Eigen::VectorXd::Constant(1, phi)}, Eigen::VectorXd::Constant(1, 0.3));
    const ImpulseResponse r = impulse_response(s, req);
    for (int h = 0; h < 12; ++h) CHECK(r.response(h, 0) == doctest::Approx(std::pow(phi, h)).epsilon(1e-12));
    CHECK(r.explosive == (phi > 1.0));
    CHECK(companion_spectral_radius(s) == doctest::Approx(std::abs(phi)));
  }
}

TEST_CASE("responses equal the difference of shocked and baseline simulations") {
  Rng rng(1);
  for (int p : {1, 2}) {
    VarSpec spec;
    spec.m = 2;
    spec.p = p;
    for (int rep = 0; rep < 50; ++rep) {
      const TimeSlice s = stable_slice(spec, rng);
      IrfRequest req;
      req.shock = rep % 2;
      req.shock_size = 0.5 + rng.uniform();
      req.horizon = 15;
      const ImpulseResponse irf = impulse_response(s, req);

      std::vector<Eigen::VectorXd> base, shocked;
      for (int l = 0; l < p; ++l) {
        const Eigen::VectorXd y0 = Eigen::Vector2d(rng.normal(), rng.normal());
        base.push_back(y0);
        shocked.push_back(y0);
      }
      const double impact = s.impact()(req.shock, req.shock);
      double worst = 0.0;
      for (int h = 0; h < req.horizon; ++h) {
        const Eigen::VectorXd eps = Eigen::Vector2d(rng.normal(), rng.normal());
        Eigen::VectorXd eps_shocked = eps;
        if (h == 0) eps_shocked[req.shock] += req.shock_size / impact;
        base.push_back(step(s, base, eps));
        shocked.push_back(step(s, shocked, eps_shocked));
        const Eigen::VectorXd diff = shocked.back() - base.back();
        worst = std::max(worst, (diff - irf.response.row(h).transpose()).cwiseAbs().maxCoeff());
      }
      CHECK(worst < 1e-10);
    }
  }
}

TEST_CASE("responses are linear in the shock size") {
  Rng rng(2);
  VarSpec spec;
  spec.m = 3;
  spec.p = 2;
  const TimeSlice s = stable_slice(spec, rng);
  IrfRequest req;
  req.shock = 2;
  const ImpulseResponse a = impulse_response(s, req);
  req.shock_size = 2.0;
  const ImpulseResponse b = impulse_response(s, req);
  CHECK((b.response - 2.0 * a.response).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(a.response(0, 2) == doctest::Approx(1.0));
  CHECK((a.response.row(0).transpose() - s.impact().col(2) / s.impact()(2, 2)).norm() < 1e-14);
}

TEST_CASE("summaries over identical draws collapse to the single path") {
  Rng rng(3);
  VarSpec spec;
  spec.m = 2;
  const TimeSlice s = stable_slice(spec, rng);
  const VarDraw d = constant_draw(spec, s, 6);
  IrfRequest req;
  req.horizon = 5;
  const IrfSummary sum = irf_summary(std::vector<VarDraw>(4, d), req);
  CHECK(sum.times.size() == 6);
  REQUIRE(sum.quantiles.size() == 5);
  const ImpulseResponse path = impulse_response(s, req);
  for (const auto& q : sum.quantiles) {
    for (std::size_t ti = 0; ti < 6; ++ti) {
      CHECK((q.middleRows(ti * 5, 5) - path.response).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  const auto window = irf_window_quantiles(std::vector<VarDraw>(4, d), req, 2, 5);
  for (const auto& q : window) CHECK((q - path.response).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(sum.explosive_draws == 0);
}

TEST_CASE("posterior quantiles are ordered") {
  Rng rng(4);
  VarSpec spec;
  spec.m = 2;
  std::vector<VarDraw> draws;
  for (int k = 0; k < 60; ++k) draws.push_back(constant_draw(spec, stable_slice(spec, rng), 4));
  IrfRequest req;
  req.horizon = 8;
  req.times = {1, 3};
  const IrfSummary sum = irf_summary(draws, req);
  CHECK(sum.times == std::vector<Eigen::Index>{1, 3});
  for (std::size_t q = 1; q < sum.quantiles.size(); ++q) {
    CHECK((sum.quantiles[q] - sum.quantiles[q - 1]).minCoeff() >= 0.0);
  }
  const auto window = irf_window_quantiles(draws, req, 1, 4);
  for (std::size_t q = 1; q < window.size(); ++q) CHECK((window[q] - window[q - 1]).minCoeff() >= 0.0);

  CHECK_THROWS_AS(irf_summary({}, req), InvalidArgument);
  req.shock = 2;
  CHECK_THROWS_AS(irf_summary(draws, req), InvalidArgument);
  req.shock = 0;
  req.horizon = 0;
  CHECK_THROWS_AS(req.validate(2), InvalidArgument);
}

TEST_CASE("explosive draws are counted") {
  VarSpec spec;
  spec.intercept = false;
  IrfRequest req;
  req.horizon = 3;
  std::vector<VarDraw> draws;
  for (double phi : {0.5, 1.2, 0.9, 1.01}) {
    draws.push_back(constant_draw(spec, make_time_slice(spec, {Eigen::VectorXd::Constant(1, phi)}, Eigen::VectorXd::Zero(1)), 2));
  }
  CHECK(irf_summary(draws, req).explosive_draws == 4); // two draws, two time points each
}

TEST_CASE("linear interpolation quantiles") {
  const std::vector<double> v{4.0, 1.0, 3.0, 2.0};
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 4.0);
  CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
  CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
  CHECK(quantile({7.0}, 0.3) == 7.0);
  CHECK_THROWS_AS(quantile({}, 0.5), InvalidArgument);
}

TEST_CASE("break diagnostic") {
  const Eigen::Index T = 10;
  SUBCASE("constant variances give a flat series") {
    std::vector<PosteriorDraws> eqs;
    eqs.push_back(draws_with_variances({Eigen::MatrixXd::Ones(T, 2), Eigen::MatrixXd::Zero(T, 2)}, 0.04, 1e-6));
    const BreakDiagnostic bd = break_diagnostic(eqs);
    CHECK((bd.per_equation.array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK((bd.overall.array() - 1.0).abs().maxCoeff() < 1e-12);
  }

  SUBCASE("one slab period") {
    Eigen::MatrixXd ind = Eigen::MatrixXd::Zero(T, 1);
    ind(4, 0) = 1.0;
    const double ratio = 1e4;
    std::vector<PosteriorDraws> eqs;
    eqs.push_back(draws_with_variances({ind}, 1e-2, 1e-2 / ratio));
    eqs.push_back(draws_with_variances({Eigen::MatrixXd::Zero(T, 1)}, 1e-2, 1e-2 / ratio));
    const BreakDiagnostic bd = break_diagnostic(eqs);
    const double peak = std::exp(std::log(ratio) * (1.0 - 1.0 / T));
    const double rest = std::exp(-std::log(ratio) / T);
    CHECK(bd.per_equation(4, 0) == doctest::Approx(peak));
    CHECK(bd.per_equation(0, 0) == doctest::Approx(rest));
    CHECK(bd.per_equation(9, 0) == doctest::Approx(rest));
    CHECK(bd.per_equation.col(1).isOnes(1e-12));
    CHECK(bd.overall[4] == doctest::Approx(peak));
    CHECK(bd.per_equation.col(0).array().log().sum() == doctest::Approx(0.0).epsilon(1e-12));

    std::vector<PosteriorDraws> scaled;
    scaled.push_back(draws_with_variances({ind}, 7e-2, 7e-2 / ratio));
    scaled.push_back(draws_with_variances({Eigen::MatrixXd::Zero(T, 1)}, 7e-2, 7e-2 / ratio));
    CHECK((break_diagnostic(scaled).per_equation - bd.per_equation).cwiseAbs().maxCoeff() < 1e-10);
  }

  SUBCASE("averages the demeaned log determinant over draws") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(T, 1), b = Eigen::MatrixXd::Zero(T, 1);
    a(2, 0) = 1.0;
    b(7, 0) = 1.0;
    std::vector<PosteriorDraws> eqs;
    eqs.push_back(draws_with_variances({a, b}, 1.0, std::exp(-10.0)));
    const BreakDiagnostic bd = break_diagnostic(eqs);
    CHECK(bd.per_equation(2, 0) == doctest::Approx(std::exp(0.5 * 10.0 - 10.0 / T)));
    CHECK(bd.per_equation(0, 0) == doctest::Approx(std::exp(-10.0 / T)));
  }
}
