#ifndef TTVP_VALIDATION_HPP
#define TTVP_VALIDATION_HPP

#include "ttvp/equation_sampler.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace ttvp {

/// Draws every parameter and latent path of one equation from the prior of
/// the joint model (the state template supplies dimensions and constants).
void draw_equation_prior(EquationState& state, Eigen::Index T, Rng& rng);

/// y_t = x_t' b_t + exp(h_t / 2) eps_t for the state's current draw.
Eigen::VectorXd simulate_observations(const EquationState& state, const Eigen::MatrixXd& regressors, Rng& rng);

struct MomentCheck {
  std::string name;
  double marginal_mean = 0.0;
  double successive_mean = 0.0;
  double z = 0.0;
};

struct GewekeReport {
  std::vector<MomentCheck> moments;
  bool passed(double z_max = 4.0) const;
};

struct GewekeSetup {
  int T = 20;
  int K = 2;
  long n_marginal = 100000;
  long n_successive = 200000;
  long burn = 2000;
  double ols_var = 0.01;
  std::uint64_t seed = 2024;
  SamplerConfig config;
};

/// Hyperparameters with finite fourth moments under which the joint
/// distribution test has power; everything else follows the defaults.
SamplerConfig geweke_config();

/// Marginal-conditional versus successive-conditional simulation of the
/// full sweep. Tracks first and second moments of b0_1, lambda2, tau2_1,
/// slab_var_1, d_1 and, by volatility mode, (mu, rho, zeta) or sigma2.
GewekeReport geweke_equation(const GewekeSetup& setup);

struct GigMomentCheck {
  GigParams params;
  long draws = 0;
  double tolerance = 0.0;
  double mean_rel_err = 0.0;
  double second_rel_err = 0.0;
  bool passed() const { return std::abs(mean_rel_err) < tolerance && std::abs(second_rel_err) < tolerance; }
};

/// Twelve GIG parameter sets spanning the initial-state scale conditionals,
/// from nearly degenerate (b0^2 close to zero) to well conditioned.
std::vector<GigParams> gig_reference_grid();

/// Relative errors of the first two sample moments against quadrature.
/// Tolerance is 1%, or 2% when chi <= 0.01. The sample size is at least
/// min_draws and large enough that four Monte Carlo standard errors of either
/// moment fit inside the tolerance (capped at max_draws).
GigMomentCheck check_gig_moments(const GigParams& params, long min_draws, Rng& rng, long max_draws = 200000000);

} // namespace ttvp

#endif
