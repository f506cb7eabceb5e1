#ifndef TTVP_SHRINKAGE_HPP
#define TTVP_SHRINKAGE_HPP

#include "ttvp/distributions.hpp"

#include <Eigen/Dense>

namespace ttvp {

/// Normal-Gamma prior on the initial states of one equation:
///
///   b0_j | tau2_j ~ N(0, tau2_j),   tau2_j | lambda2 ~ G(a, a lambda2 / 2),   lambda2 ~ G(b0, b1).
///
/// Given lambda2 the prior variance of b0_j averages 2 / lambda2.
struct ShrinkageBlock {
  double a = 0.1;
  double b0 = 0.01;
  double b1 = 0.01;
  double lambda2 = 1.0;
  Eigen::VectorXd tau2;

  void validate() const;
};

struct GammaParams {
  double shape = 1.0;
  double rate = 1.0;
};

inline constexpr double kTau2Floor = 1e-12;

/// Prior variances of the initial states given the current scales.
Eigen::VectorXd initial_state_prior_variance(const ShrinkageBlock& block);

/// E[prior variance of b0_j | lambda2] = 2 / lambda2.
double expected_initial_state_variance(double lambda2);

GigParams tau2_conditional(const ShrinkageBlock& block, double beta0);
GammaParams lambda2_conditional(const ShrinkageBlock& block);

/// Independent GIG(a - 1/2, b0_j^2, a lambda2) draws, floored at kTau2Floor.
void update_tau2(ShrinkageBlock& block, const Eigen::VectorXd& beta0, Rng& rng);
void update_lambda2(ShrinkageBlock& block, Rng& rng);

/// Draws (lambda2, tau2) from the prior and returns b0 drawn given them.
Eigen::VectorXd draw_shrinkage_prior(ShrinkageBlock& block, Rng& rng);

} // namespace ttvp

#endif
