#include "ttvp/var_model.hpp"

#include "ttvp/errors.hpp"

#include "stats_util.hpp"

#include <doctest.h>

using namespace ttvp;

namespace {

Eigen::MatrixXd var_data(Eigen::Index rows, int m, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(rows, m);
  for (Eigen::Index t = 1; t < rows; ++t) {
    for (int k = 0; k < m; ++k) y(t, k) = 0.5 * y(t - 1, k) + (k > 0 ? 0.3 * y(t, k - 1) : 0.0) + rng.normal();
  }
  return y;
}

SamplerConfig quick(int n_draws = 60, int n_burn = 20) {
  SamplerConfig c;
  c.n_draws = n_draws;
  c.n_burn = n_burn;
  c.seed = 13;
  return c;
}

bool same_fit(const VarFit& a, const VarFit& b) {
  if (a.n_draws() != b.n_draws() || a.equations.size() != b.equations.size()) return false;
  for (std::size_t i = 0; i < a.equations.size(); ++i) {
    for (std::size_t k = 0; k < a.n_draws(); ++k) {
      const DrawRecord x = a.equations[i].draws[k], y = b.equations[i].draws[k];
      if (x.states != y.states || x.h != y.h || x.d != y.d || x.slab_var != y.slab_var) return false;
    }
  }
  return true;
}

} // namespace

TEST_CASE("regressor rows of a bivariate system") {
  Eigen::MatrixXd y(4, 2);
  y << 1, 2, 3, 4, 5, 6, 7, 8;
  VarSpec spec;
  spec.m = 2;
  spec.p = 1;

  const EquationData e1 = build_equation_regressors(y, spec, 0);
  REQUIRE(e1.regressors.rows() == 3);
  REQUIRE(e1.regressors.cols() == 3);
  CHECK(e1.regressors.row(0) == Eigen::RowVector3d(1, 1, 2));
  CHECK(e1.regressors.row(2) == Eigen::RowVector3d(1, 5, 6));
  CHECK(e1.observations == Eigen::Vector3d(3, 5, 7));

  const EquationData e2 = build_equation_regressors(y, spec, 1);
  REQUIRE(e2.regressors.cols() == 4);
  CHECK(e2.regressors.row(0) == Eigen::RowVector4d(1, 1, 2, 3));
  CHECK(e2.regressors.row(2) == Eigen::RowVector4d(1, 5, 6, 7));
  CHECK(e2.observations == Eigen::Vector3d(4, 6, 8));
  CHECK(e2.ols_var.size() == 4);

  spec.intercept = false;
  spec.p = 2;
  const EquationData e3 = build_equation_regressors(y, spec, 1);
  CHECK(e3.regressors.row(0) == Eigen::RowVector<double, 5>(3, 4, 1, 2, 5));
  CHECK_THROWS_AS(build_equation_regressors(y.topRows(2), spec, 0), InvalidArgument);
}

TEST_CASE("regressor counts at application scale") {
  VarSpec spec;
  spec.m = 7;
  spec.p = 2;
  CHECK(spec.equation_dim(0) == 15);
  CHECK(spec.equation_dim(6) == 21);
  const EquationData e = build_equation_regressors(var_data(30, 7, 1), spec, 6);
  CHECK(e.dim() == 21);
  CHECK(e.time_points() == 28);
}

TEST_CASE("first equation ignores later contemporaneous values") {
  VarSpec spec;
  spec.m = 3;
  Eigen::MatrixXd y = var_data(20, 3, 2);
  const EquationData a = build_equation_regressors(y, spec, 0);
  y(19, 1) += 5.0;
  y(19, 2) -= 3.0;
  const EquationData b = build_equation_regressors(y, spec, 0);
  CHECK(a.regressors == b.regressors);
  CHECK(a.observations == b.observations);
  CHECK(build_equation_regressors(y, spec, 2).regressors(18, 5) == y(19, 1));
}

TEST_CASE("covariance from loadings") {
  VarSpec spec;
  spec.m = 2;
  spec.intercept = false;

  SUBCASE("zero loadings give a diagonal matrix") {
    const TimeSlice s = make_time_slice(spec, {Eigen::Vector2d(0.1, 0.2), Eigen::Vector3d(0, 0, 0)},
                                        Eigen::Vector2d(std::log(2.0), std::log(3.0)));
    CHECK(s.covariance().isApprox(Eigen::Vector2d(2, 3).asDiagonal().toDenseMatrix()));
  }

  SUBCASE("loading one half") {
    const TimeSlice s = make_time_slice(spec, {Eigen::Vector2d(0, 0), Eigen::Vector3d(0, 0, 0.5)}, Eigen::Vector2d(0, 0));
    Eigen::Matrix2d expected;
    expected << 1.0, 0.5, 0.5, 1.25;
    CHECK((s.covariance() - expected).norm() < 1e-14);

    Rng rng(3);
    Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double y1 = rng.normal();
      const double y2 = 0.5 * y1 + rng.normal();
      const Eigen::Vector2d v(y1, y2);
      acc += v * v.transpose();
    }
    CHECK(((acc / n) - expected).cwiseAbs().maxCoeff() < 0.02);
  }
}

TEST_CASE("Cholesky factor of the covariance is the impact matrix") {
  VarSpec spec;
  spec.m = 4;
  spec.p = 2;
  Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<Eigen::VectorXd> coef;
    for (int i = 0; i < spec.m; ++i) {
      Eigen::VectorXd b(spec.equation_dim(i));
      for (auto& x : b) x = rng.normal();
      coef.push_back(b);
    }
    Eigen::VectorXd log_h(spec.m);
    for (auto& x : log_h) x = rng.normal();
    const TimeSlice s = make_time_slice(spec, coef, log_h);
    const Eigen::MatrixXd sigma = s.covariance();
    const Eigen::MatrixXd L = sigma.llt().matrixL();
    CHECK((L - s.impact()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((s.V() * s.Vinv - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("fitted draws give positive definite covariances") {
  VarSpec spec;
  spec.m = 3;
  const VarFit fit = fit_var(var_data(61, 3, 6), spec, quick());
  REQUIRE(fit.n_draws() == 40);
  for (std::size_t k = 0; k < fit.n_draws(); k += 7) {
    const VarDraw d = fit.draw(k);
    CHECK(d.time_points() == 60);
    for (Eigen::Index t = 1; t <= 60; t += 11) {
      const Eigen::MatrixXd s = assemble_covariance(d, t);
      CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s).eigenvalues().minCoeff() > 0.0);
      CHECK((s - s.transpose()).norm() == 0.0);
    }
  }
  CHECK_THROWS_AS(fit.draw(0).slice(0), InvalidArgument);
  CHECK_THROWS_AS(fit.draw(0).slice(61), InvalidArgument);
}

TEST_CASE("a single-variable system is one equation chain") {
  VarSpec spec;
  const Eigen::MatrixXd y = var_data(50, 1, 7);
  const SamplerConfig c = quick();
  const VarFit fit = fit_var(y, spec, c);
  Rng rng = Rng::stream(c.seed, 0, 0);
  const PosteriorDraws direct = run_chain(c, build_equation_regressors(y, spec, 0), rng);
  REQUIRE(direct.size() == fit.n_draws());
  for (std::size_t k = 0; k < direct.size(); ++k) {
    CHECK(direct.draws[k].states == fit.equations[0].draws[k].states);
    CHECK(direct.draws[k].h == fit.equations[0].draws[k].h);
  }
}

TEST_CASE("results do not depend on the thread count") {
  VarSpec spec;
  spec.m = 3;
  const Eigen::MatrixXd y = var_data(41, 3, 8);
  const VarFit one = fit_var(y, spec, quick(), 1);
  const VarFit three = fit_var(y, spec, quick(), 3);
  const VarFit many = fit_var(y, spec, quick(), 16);
  CHECK(same_fit(one, three));
  CHECK(same_fit(one, many));
}

TEST_CASE("ordering permutes the data before estimation") {
  const Eigen::MatrixXd y = var_data(41, 3, 9);
  VarSpec spec;
  spec.m = 3;
  spec.ordering = {2, 0, 1};
  Eigen::MatrixXd permuted(y.rows(), 3);
  permuted << y.col(2), y.col(0), y.col(1);
  CHECK(spec.ordered(y) == permuted);

  VarSpec plain;
  plain.m = 3;
  CHECK(same_fit(fit_var(y, spec, quick()), fit_var(permuted, plain, quick())));

  spec.ordering = {0, 0, 1};
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
  spec.ordering = {0, 1};
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
}

TEST_CASE("failures name the equation") {
  VarSpec spec;
  spec.m = 2;
  Eigen::MatrixXd y = var_data(30, 2, 10);
  y(5, 1) = std::nan("");
  CHECK_THROWS_AS(fit_var(y, spec, quick()), InvalidArgument);

  SamplerConfig c = quick();
  c.xi = 1e6;
  try {
    fit_var(var_data(30, 2, 10), spec, c);
    FAIL("expected a failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("equation") != std::string::npos);
  }
}
