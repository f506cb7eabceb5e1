#ifndef TTVP_THRESHOLD_HPP
#define TTVP_THRESHOLD_HPP

#include "ttvp/distributions.hpp"
#include "ttvp/shrinkage.hpp"
#include "ttvp/statespace.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace ttvp {

/// Per-coefficient threshold mechanism of one equation. A coefficient change
/// larger than d in absolute value is a slab innovation with variance
/// slab_var, any other change is a spike innovation with variance spike_var.
///
/// With `thresholded == false` every period is a slab period (plain TVP).
struct ThresholdBlock {
  Eigen::VectorXd d;
  Eigen::VectorXd slab_var;
  Eigen::VectorXd spike_var;
  double xi = 1e-5;
  Eigen::VectorXd ols_var;
  double r0 = 3.0;
  double r1 = 0.03;
  double prior_lo_mult = 0.1;
  double prior_hi_mult = 1.5;
  int grid_size = 50;
  bool thresholded = true;

  Eigen::Index size() const { return slab_var.size(); }

  /// Support of the uniform threshold prior for coefficient j.
  double prior_lo(Eigen::Index j) const;
  double prior_hi(Eigen::Index j) const;

  /// Sets spike_var = xi * ols_var.
  void refresh_spike();
  void validate() const;
};

using IndicatorMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// s(t-1, j) = 1 iff |b_{t,j} - b_{t-1,j}| > d_j, for t = 1..T.
struct IndicatorPath {
  IndicatorMatrix s; // T x K
};

/// Row t-1 holds b_t - b_{t-1}.
Eigen::MatrixXd trajectory_increments(const StateTrajectory& traj);

IndicatorPath compute_indicators(const StateTrajectory& traj, const ThresholdBlock& block);
Eigen::MatrixXd build_state_variances(const IndicatorPath& s, const ThresholdBlock& block);

/// Gamma conditional of the slab precision 1 / slab_var_j.
GammaParams slab_precision_conditional(const StateTrajectory& traj, const IndicatorPath& s, const ThresholdBlock& block,
                                       Eigen::Index j);

/// Draws every slab_var_j from its conditional. With thresholds active the
/// precision is restricted to the set where d_j lies in its prior support.
void update_slab_precision(const StateTrajectory& traj, const IndicatorPath& s, ThresholdBlock& block, Rng& rng);

/// Log conditional density of d_j (up to a constant) on the block's grid.
struct ThresholdGrid {
  Eigen::VectorXd points;
  Eigen::VectorXd log_density;
};

ThresholdGrid threshold_grid(const StateTrajectory& traj, const ThresholdBlock& block, Eigen::Index j);

/// Inverse-CDF draw from a density tabulated on an increasing grid, with the
/// CDF built by the trapezoid rule and inverted by linear interpolation.
double sample_from_grid(const Eigen::VectorXd& points, const Eigen::VectorXd& log_density, Rng& rng);

/// Griddy Gibbs update of d_j given the trajectory and slab variance.
void update_threshold_griddy(const StateTrajectory& traj, ThresholdBlock& block, Eigen::Index j, Rng& rng);

/// Exact draw of d_j from the same conditional, which is piecewise constant
/// between the sorted |increment| values inside the prior support.
void update_threshold_exact(const StateTrajectory& traj, ThresholdBlock& block, Eigen::Index j, Rng& rng);

/// Elementwise frequency of s = 1 over a collection of indicator draws.
Eigen::MatrixXd posterior_moving_probability(const std::vector<IndicatorPath>& draws);

// ---------------------------------------------------------------------------
// Conditional law of one increment given (d, slab, spike), i.e. the density
// proportional to N(delta; 0, theta(delta)) with theta switching at |delta| = d.

/// log Z where Z = P(|e1| > d) + P(|e0| <= d), e1 ~ N(0, slab), e0 ~ N(0, spike).
double log_increment_normalizer(double d, double slab, double spike);

double log_increment_density(double delta, double d, double slab, double spike);

/// Forward simulation rule for one increment.
enum class ForwardLaw {
  /// Exact draw from the normalized law above.
  Exact,
  /// Draw e ~ N(0, slab); keep it if |e| > d, otherwise draw from N(0, spike) on [-d, d].
  ProposeSlab,
};

double sample_increment(double d, double slab, double spike, ForwardLaw law, Rng& rng);

/// Draws (slab_var_j, d_j) for every j from the prior of the joint model with
/// T increments per coefficient, whose marginal on (slab, d) is the Gamma /
/// uniform prior tilted by Z(d, slab, spike)^T. Uses rejection from the
/// untilted prior. Without thresholds only slab_var is drawn.
void draw_threshold_prior(ThresholdBlock& block, Eigen::Index T, Rng& rng);

} // namespace ttvp

#endif
