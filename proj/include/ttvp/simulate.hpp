#ifndef TTVP_SIMULATE_HPP
#define TTVP_SIMULATE_HPP

#include "ttvp/distributions.hpp"
#include "ttvp/threshold.hpp"
#include "ttvp/var_model.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace ttvp {

enum class DgpKind {
  /// Breaks occur where a N(0, state_sd^2) proposal exceeds the threshold
  /// that gives the requested break probability.
  UnivariateThreshold,
  /// Independent Bernoulli breaks, or breaks at explicit times.
  UnivariateRandomBreaks,
  VarTtvp,
};

/// Break regimes of the simulation study.
inline constexpr double kFewBreaks = 0.02;
inline constexpr double kModerateBreaks = 0.10;
inline constexpr double kManyBreaks = 0.50;

struct DgpSpec {
  DgpKind kind = DgpKind::UnivariateRandomBreaks;
  int T = 250;
  double break_probability = kModerateBreaks;
  /// Periods 1..T with a break; when non-empty it replaces break_probability.
  std::vector<int> break_times;
  double sigma_obs = 0.01;
  double state_sd = 0.15;

  // multivariate only
  int m = 3;
  int p = 1;
  bool intercept = true;
  /// Which coefficients may break: "lags", "all".
  std::string breaking = "lags";

  void validate() const;
};

/// y_t = x_t b_t + u_t,  b_t = b_{t-1} + s_t e_t,  x_t ~ U(-1, 1),  b_0 = 0.
struct UnivariateSample {
  Eigen::MatrixXd data;   // T x 2: (y, x)
  Eigen::VectorXd states; // b_0..b_T
  Eigen::VectorXi indicators; // s_1..s_T
};

UnivariateSample simulate_univariate(const DgpSpec& spec, Rng& rng);

/// Recursive VAR(p) with coefficient breaks. Equation i's coefficient vector
/// has the layout used by build_equation_regressors.
struct VarSample {
  VarSpec spec;
  /// (T + p) x m; the first p rows are presample values.
  Eigen::MatrixXd data;
  std::vector<Eigen::MatrixXd> states;  // per equation, (T+1) x K_i
  std::vector<Eigen::MatrixXi> indicators; // per equation, T x K_i
  Eigen::VectorXd log_h; // constant log-variance of each equation
};

/// Each period the breaking coefficients either stay put or, at a break,
/// move by N(0, state_sd^2) increments. Increments that make the companion
/// matrix explosive are redrawn; NumericalError after 1000 failures.
VarSample simulate_var(const DgpSpec& spec, Rng& rng);

DgpKind parse_dgp_kind(const std::string& name);
std::string to_string(DgpKind kind);

} // namespace ttvp

#endif
