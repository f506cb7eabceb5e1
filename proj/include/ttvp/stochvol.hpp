#ifndef TTVP_STOCHVOL_HPP
#define TTVP_STOCHVOL_HPP

#include "ttvp/distributions.hpp"

#include <Eigen/Dense>

namespace ttvp {

enum class VolMode { Stochastic, Homoscedastic };

/// How the log-volatility path is updated.
enum class SvKernel {
  /// 10-component mixture approximation of log chi^2_1, joint Gaussian path
  /// draw, centered parameter update followed by a noncentered interweaving step.
  AuxiliaryMixture,
  /// Exact likelihood, single-site random-walk Metropolis on each h_t and the
  /// same centered parameter updates. Slow; used as a cross-check.
  RandomWalk,
};

/// Observation variance model of one equation.
///
///   h_t = mu + rho (h_{t-1} - mu) + nu_t,  nu_t ~ N(0, zeta),  h_0 ~ N(mu, zeta / (1 - rho^2))
///   mu ~ N(mu_mean, mu_var),  (rho + 1) / 2 ~ B(a_rho, b_rho),  zeta ~ G(1/2, 1 / (2 B_zeta))
///
/// or, homoscedastically, 1 / sigma2 ~ G(c0, c1).
struct VolatilityBlock {
  VolMode mode = VolMode::Stochastic;
  Eigen::VectorXd h; // h_1..h_T
  double h0 = 0.0;
  double mu = 0.0;
  double rho = 0.9;
  double zeta = 0.05;
  double mu_mean = 0.0;
  double mu_var = 100.0;
  double a_rho = 25.0;
  double b_rho = 5.0;
  double B_zeta = 1.0;
  double sigma2 = 1.0;
  double c0 = 0.01;
  double c1 = 0.01;

  void validate() const;
  /// Observation variances for T periods: exp(h_t), or sigma2 throughout.
  Eigen::VectorXd variances(Eigen::Index T) const;
};

inline constexpr double kLogSquareOffset = 1e-8;

/// Standard 10-component normal mixture for log chi^2_1.
struct LogChiSquareMixture {
  static constexpr int size = 10;
  static const double prob[size];
  static const double mean[size];
  static const double var[size];
};

/// Initial values: level at the log residual variance, flat path.
void initialize_volatility(VolatilityBlock& block, const Eigen::VectorXd& residuals);

/// One update of (h_0..h_T, mu, rho, zeta) given the current residuals.
void update_sv(const Eigen::VectorXd& residuals, VolatilityBlock& block, Rng& rng,
               SvKernel kernel = SvKernel::AuxiliaryMixture);

/// sigma2 = 1 / G(c0 + T/2, c1 + SSR/2).
void update_sigma2_homoscedastic(const Eigen::VectorXd& residuals, VolatilityBlock& block, Rng& rng);

/// Draws every parameter and a length-T path (or sigma2) from the prior.
void draw_volatility_prior(VolatilityBlock& block, Eigen::Index T, Rng& rng);

/// Log-variance one period past the end of the path.
double sample_next_log_variance(const VolatilityBlock& block, Rng& rng);

/// Log prior density of (mu, rho) up to a constant.
double log_mu_rho_prior(const VolatilityBlock& block, double mu, double rho);

} // namespace ttvp

#endif
