#include "ttvp/shrinkage.hpp"

#include "ttvp/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ttvp {

void ShrinkageBlock::validate() const {
  if (!(a > 0.0) || !(b0 > 0.0) || !(b1 > 0.0)) throw InvalidArgument("shrinkage: a, b0, b1 must be positive");
  if (!(lambda2 > 0.0) || !std::isfinite(lambda2)) throw InvalidArgument("shrinkage: lambda2 must be positive");
  if ((tau2.array() <= 0.0).any() || !tau2.allFinite()) throw InvalidArgument("shrinkage: tau2 must be positive");
}

Eigen::VectorXd initial_state_prior_variance(const ShrinkageBlock& block) {
  block.validate();
  return block.tau2;
}

double expected_initial_state_variance(double lambda2) {
  if (!(lambda2 > 0.0)) throw InvalidArgument("shrinkage: lambda2 must be positive");
  return 2.0 / lambda2;
}

GigParams tau2_conditional(const ShrinkageBlock& block, double beta0) {
  return {block.a - 0.5, beta0 * beta0, block.a * block.lambda2};
}

GammaParams lambda2_conditional(const ShrinkageBlock& block) {
  const double k = static_cast<double>(block.tau2.size());
  return {block.b0 + block.a * k, block.b1 + 0.5 * block.a * block.tau2.sum()};
}

void update_tau2(ShrinkageBlock& block, const Eigen::VectorXd& beta0, Rng& rng) {
  if (beta0.size() != block.tau2.size()) throw InvalidArgument("update_tau2: dimension mismatch");
  for (Eigen::Index j = 0; j < beta0.size(); ++j) {
    GigParams p = tau2_conditional(block, beta0[j]);
    // a = 1/2 with b0 exactly zero has no proper GIG limit; the Gamma limit of order 0+ is used.
    if (p.chi == 0.0 && p.kappa <= 0.0) p.chi = std::numeric_limits<double>::min();
    block.tau2[j] = std::max(sample_gig(p, rng), kTau2Floor);
  }
}

void update_lambda2(ShrinkageBlock& block, Rng& rng) {
  const GammaParams g = lambda2_conditional(block);
  block.lambda2 = sample_gamma(g.shape, g.rate, rng);
}

Eigen::VectorXd draw_shrinkage_prior(ShrinkageBlock& block, Rng& rng) {
  block.lambda2 = sample_gamma(block.b0, block.b1, rng);
  Eigen::VectorXd beta0(block.tau2.size());
  for (Eigen::Index j = 0; j < beta0.size(); ++j) {
    block.tau2[j] = std::max(sample_gamma(block.a, 0.5 * block.a * block.lambda2, rng), kTau2Floor);
    beta0[j] = std::sqrt(block.tau2[j]) * rng.normal();
  }
  return beta0;
}

} // namespace ttvp
