#include "ttvp/statespace.hpp"

#include "ttvp/errors.hpp"

#include <cmath>
#include <numbers>

namespace ttvp {

namespace {

void symmetrize(Eigen::MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

} // namespace

void StateSpaceProblem::validate() const {
  const Eigen::Index T = observations.size();
  const Eigen::Index K = initial_mean.size();
  if (regressors.rows() != T || regressors.cols() != K) throw InvalidArgument("statespace: regressors must be T x K");
  if (obs_variance.size() != T) throw InvalidArgument("statespace: obs_variance must have length T");
  if (state_innovation_variance.rows() != T || state_innovation_variance.cols() != K) {
    throw InvalidArgument("statespace: state_innovation_variance must be T x K");
  }
  if (initial_variance.size() != K) throw InvalidArgument("statespace: initial_variance must have length K");
  if (!regressors.allFinite() || !observations.allFinite() || !initial_mean.allFinite()) {
    throw InvalidArgument("statespace: non-finite regressors, observations or initial mean");
  }
  if (!obs_variance.allFinite() || (obs_variance.array() <= 0.0).any()) {
    throw InvalidArgument("statespace: observation variances must be positive and finite");
  }
  if (!state_innovation_variance.allFinite() || (state_innovation_variance.array() < 0.0).any()) {
    throw InvalidArgument("statespace: state innovation variances must be non-negative and finite");
  }
  if (!initial_variance.allFinite() || (initial_variance.array() < 0.0).any()) {
    throw InvalidArgument("statespace: initial variances must be non-negative and finite");
  }
}

FilterResult kalman_filter(const StateSpaceProblem& problem) {
  problem.validate();
  const Eigen::Index T = problem.time_points();
  const Eigen::Index K = problem.state_dim();

  FilterResult out;
  out.mean.reserve(T + 1);
  out.cov.reserve(T + 1);
  out.predictive_mean.resize(T);
  out.predictive_variance.resize(T);
  out.log_likelihood_terms.resize(T);

  Eigen::VectorXd m = problem.initial_mean;
  Eigen::MatrixXd P = problem.initial_variance.asDiagonal();
  out.mean.push_back(m);
  out.cov.push_back(P);

  Eigen::MatrixXd R(K, K);
  Eigen::VectorXd Rx(K);
  for (Eigen::Index t = 0; t < T; ++t) {
    R = P;
    R.diagonal() += problem.state_innovation_variance.row(t).transpose();
    const auto x = problem.regressors.row(t).transpose();
    Rx.noalias() = R * x;
    const double f = x.dot(Rx) + problem.obs_variance[t];
    const double fc = x.dot(m);
    const double e = problem.observations[t] - fc;
    if (!(f > 0.0) || !std::isfinite(f) || !std::isfinite(e)) {
      throw NumericalError("kalman_filter: degenerate predictive variance", static_cast<long>(t + 1));
    }
    m += Rx * (e / f);
    P = R;
    P.noalias() -= Rx * Rx.transpose() / f;
    symmetrize(P);
    if (!m.allFinite() || !all_finite(P)) {
      throw NumericalError("kalman_filter: non-finite filtered moments", static_cast<long>(t + 1));
    }
    out.predictive_mean[t] = fc;
    out.predictive_variance[t] = f;
    out.log_likelihood_terms[t] = -0.5 * (std::log(2.0 * std::numbers::pi * f) + e * e / f);
    out.mean.push_back(m);
    out.cov.push_back(P);
  }
  return out;
}

Eigen::MatrixXd kalman_smoother(const StateSpaceProblem& problem) {
  return kalman_smoother(problem, kalman_filter(problem));
}

Eigen::MatrixXd kalman_smoother(const StateSpaceProblem& problem, const FilterResult& filtered) {
  const Eigen::Index T = problem.time_points();
  const Eigen::Index K = problem.state_dim();
  Eigen::MatrixXd smoothed(T + 1, K);
  smoothed.row(T) = filtered.mean[T].transpose();
  Eigen::MatrixXd R(K, K);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    const Eigen::MatrixXd& P = filtered.cov[t];
    R = P;
    R.diagonal() += problem.state_innovation_variance.row(t).transpose();
    const Eigen::VectorXd ahead = smoothed.row(t + 1).transpose() - filtered.mean[t];
    // J = P R^{-1};  R symmetric so J (ahead) = P (R^{-1} ahead).
    const Eigen::VectorXd w = R.ldlt().solve(ahead);
    const Eigen::VectorXd mt = filtered.mean[t] + P * w;
    if (!mt.allFinite()) throw NumericalError("kalman_smoother: non-finite smoothed mean", static_cast<long>(t));
    smoothed.row(t) = mt.transpose();
  }
  return smoothed;
}

Eigen::VectorXd sample_mvnormal(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, Rng& rng) {
  const Eigen::Index K = mean.size();
  Eigen::VectorXd z(K);
  for (Eigen::Index k = 0; k < K; ++k) z[k] = rng.normal();

  Eigen::MatrixXd S = 0.5 * (cov + cov.transpose());
  const double trace = S.trace();
  if (!(trace > 0.0)) return mean;
  S.diagonal().array() += 1e-10 * trace / static_cast<double>(K);

  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() == Eigen::Success) return mean + llt.matrixL() * z;

  // Indefinite beyond the jitter: pivoted LDL' with negative pivots clamped.
  Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
  if (ldlt.info() != Eigen::Success) throw NumericalError("sample_mvnormal: covariance factorization failed");
  Eigen::VectorXd d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  Eigen::VectorXd y = ldlt.matrixL() * (d.asDiagonal() * z);
  return mean + (ldlt.transpositionsP().transpose() * y);
}

StateTrajectory ffbs_draw(const StateSpaceProblem& problem, Rng& rng) {
  return ffbs_draw(problem, kalman_filter(problem), rng);
}

StateTrajectory ffbs_draw(const StateSpaceProblem& problem, const FilterResult& filtered, Rng& rng) {
  const Eigen::Index T = problem.time_points();
  const Eigen::Index K = problem.state_dim();
  StateTrajectory traj;
  traj.values.resize(T + 1, K);
  traj.values.row(T) = sample_mvnormal(filtered.mean[T], filtered.cov[T], rng).transpose();

  Eigen::MatrixXd R(K, K);
  Eigen::MatrixXd J(K, K);
  Eigen::MatrixXd C(K, K);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    const Eigen::MatrixXd& P = filtered.cov[t];
    const auto q = problem.state_innovation_variance.row(t).transpose();
    R = P;
    R.diagonal() += q;
    // J = P R^{-1}; conditional covariance P - J P = J diag(q).
    J = R.ldlt().solve(P).transpose();
    const Eigen::VectorXd ahead = traj.values.row(t + 1).transpose() - filtered.mean[t];
    const Eigen::VectorXd mean = filtered.mean[t] + J * ahead;
    C = J * q.asDiagonal();
    symmetrize(C);
    if (!mean.allFinite() || !C.allFinite()) {
      throw NumericalError("ffbs_draw: non-finite backward moments", static_cast<long>(t));
    }
    traj.values.row(t) = sample_mvnormal(mean, C, rng).transpose();
  }
  return traj;
}

} // namespace ttvp
