#ifndef TTVP_STATESPACE_HPP
#define TTVP_STATESPACE_HPP

#include "ttvp/distributions.hpp"

#include <Eigen/Dense>

#include <vector>

namespace ttvp {

/// Univariate-observation regression with random-walk coefficients:
///
///   y_t    = x_t' b_t + u_t,        u_t ~ N(0, obs_variance[t])
///   b_t    = b_{t-1} + e_t,         e_t ~ N(0, diag(state_innovation_variance.row(t)))
///   b_0    ~ N(initial_mean, diag(initial_variance))
///
/// for t = 1..T. Row t-1 of the T-row inputs belongs to time t.
struct StateSpaceProblem {
  Eigen::MatrixXd regressors;                // T x K
  Eigen::VectorXd observations;              // T
  Eigen::VectorXd obs_variance;              // T, > 0
  Eigen::MatrixXd state_innovation_variance; // T x K, >= 0
  Eigen::VectorXd initial_mean;              // K
  Eigen::VectorXd initial_variance;          // K, >= 0

  Eigen::Index time_points() const { return observations.size(); }
  Eigen::Index state_dim() const { return initial_mean.size(); }

  /// Throws InvalidArgument on shape mismatch, non-finite entries, or
  /// negative / zero variances where positivity is required.
  void validate() const;
};

/// Trajectory b_0..b_T, one row per time point (row 0 is the initial state).
struct StateTrajectory {
  Eigen::MatrixXd values; // (T+1) x K
};

struct FilterResult {
  std::vector<Eigen::VectorXd> mean; // T+1 filtered means, mean[0] is the prior
  std::vector<Eigen::MatrixXd> cov;  // T+1 filtered covariances
  Eigen::VectorXd predictive_mean;   // T one-step observation means
  Eigen::VectorXd predictive_variance;
  Eigen::VectorXd log_likelihood_terms; // log p(y_t | y_{1:t-1})

  double log_likelihood() const { return log_likelihood_terms.sum(); }
};

FilterResult kalman_filter(const StateSpaceProblem& problem);

/// Posterior means E[b_t | y_{1:T}], (T+1) x K.
Eigen::MatrixXd kalman_smoother(const StateSpaceProblem& problem);
Eigen::MatrixXd kalman_smoother(const StateSpaceProblem& problem, const FilterResult& filtered);

/// One draw from p(b_{0:T} | y_{1:T}) by forward filtering, backward sampling.
StateTrajectory ffbs_draw(const StateSpaceProblem& problem, Rng& rng);

/// Backward pass only, reusing a filter computed for the same problem.
StateTrajectory ffbs_draw(const StateSpaceProblem& problem, const FilterResult& filtered, Rng& rng);

/// Draw from N(mean, cov) with symmetrization and a relative jitter floor.
Eigen::VectorXd sample_mvnormal(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, Rng& rng);

} // namespace ttvp

#endif
