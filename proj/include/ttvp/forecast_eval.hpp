#ifndef TTVP_FORECAST_EVAL_HPP
#define TTVP_FORECAST_EVAL_HPP

#include "ttvp/threshold.hpp"
#include "ttvp/var_model.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace ttvp {

struct ForecastRecord {
  int origin = 0; // row of the forecast target in the full data set
  Eigen::MatrixXd predictive; // n x m draws of y_{t+1}
  Eigen::VectorXd predictive_mean;
  double lps = 0.0;           // joint log predictive score
  Eigen::VectorXd lps_marginal; // per variable
  double p_down = 0.0;
  double p_up = 0.0;
  bool down_defined = false;
  bool up_defined = false;
};

/// One-step predictive density from joint posterior draws. For every draw the
/// coefficients and log-variances are moved one period ahead, the reduced form
/// mean and covariance are built, one y is simulated, and the density at
/// `realized` (if given) enters the log-sum-exp average. `history` holds at
/// least p rows of data in recursive order, the last row being time t.
ForecastRecord simulate_one_step(const std::vector<VarDraw>& draws, const Eigen::MatrixXd& history,
                                 const std::optional<Eigen::VectorXd>& realized, Rng& rng,
                                 ForwardLaw law = ForwardLaw::Exact);

/// log predictive Bayes factor path: cumulative sums of (model - benchmark).
Eigen::VectorXd log_predictive_bayes_factor(const Eigen::VectorXd& lps_model, const Eigen::VectorXd& lps_benchmark);

enum class TurningPoint : int { None = 0, Downward = 1, Upward = 2 };

/// Index k (0-based) is a downward turning point when S[k-3] < S[k-1],
/// S[k-2] < S[k-1] and S[k-1] > S[k]; upward with the inequalities reversed.
/// Indices 0..2 are never labelled.
std::vector<TurningPoint> classify_turning_points(const Eigen::VectorXd& series);

struct TurningPointProbability {
  double p_down = 0.0;
  double p_up = 0.0;
  bool down_defined = false;
  bool up_defined = false;
};

/// history = (S_{t-2}, S_{t-1}, S_t); draws = predictive draws of S_{t+1}.
TurningPointProbability turning_point_probability(const Eigen::VectorXd& draws, const Eigen::Vector3d& history);

/// (1/N) sum 2 (p - o)^2.
double qps(const Eigen::VectorXd& probabilities, const Eigen::VectorXd& outcomes);

struct ForecastOptions {
  int holdout = 40;
  /// Full re-estimation every k-th origin; in between, chains are warm-started
  /// from the previous origin's final state.
  int refit_every = 1;
  int warm_burn = 200;
  ForwardLaw law = ForwardLaw::Exact;
  /// Variable (recursive position) used for turning points; -1 disables them.
  int turning_point_variable = -1;
  int threads = 1;
};

/// Expanding-window one-step evaluation over the last `holdout` rows of data
/// (data in original column order; spec.ordering is applied internally).
std::vector<ForecastRecord> expanding_window_evaluate(const Eigen::MatrixXd& data, const VarSpec& spec,
                                                      const SamplerConfig& config, const ForecastOptions& options);

/// Copy of a sampler state for a sample one period longer: the new period
/// repeats the last state and log-variance.
EquationState extend_state(const EquationState& state, Eigen::Index new_T);

} // namespace ttvp

#endif
