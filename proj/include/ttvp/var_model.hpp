#ifndef TTVP_VAR_MODEL_HPP
#define TTVP_VAR_MODEL_HPP

#include "ttvp/equation_sampler.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace ttvp {

struct VarSpec {
  int m = 1;
  int p = 1;
  bool intercept = true;
  std::vector<std::string> names;
  /// Column order of the recursive system: ordering[k] is the data column
  /// placed in position k. Empty means the data order.
  std::vector<int> ordering;

  /// Regressor count of equation i (0-based): m p + i, plus one with intercept.
  int equation_dim(int i) const { return m * p + i + (intercept ? 1 : 0); }
  void validate() const;
  /// Data with columns permuted into the recursive order.
  Eigen::MatrixXd ordered(const Eigen::MatrixXd& data) const;
};

/// Equation i (0-based, recursive order) of the triangular system. Row r
/// belongs to time t = p + r of `data` and holds
/// (1, y_{t-1}', ..., y_{t-p}', y_{0,t}, ..., y_{i-1,t}). `data` must already
/// be in recursive order. The OLS variances are filled in.
EquationData build_equation_regressors(const Eigen::MatrixXd& data, const VarSpec& spec, int i);

/// Structural form at one time point:
///   Vinv y_t = intercept + sum_l lags[l] y_{t-l} + u_t,   u_t ~ N(0, diag(exp(log_h)))
/// with Vinv unit lower triangular, (Vinv)_{ij} = -(loading of y_j in equation i).
struct TimeSlice {
  Eigen::VectorXd intercept;
  std::vector<Eigen::MatrixXd> lags;
  Eigen::MatrixXd Vinv;
  Eigen::VectorXd log_h;

  Eigen::MatrixXd V() const;
  Eigen::MatrixXd covariance() const; // V H V'
  /// V H^{1/2}: column s is the impact of a one-standard-deviation shock s.
  Eigen::MatrixXd impact() const;
};

TimeSlice make_time_slice(const VarSpec& spec, const std::vector<Eigen::VectorXd>& coefficients,
                          const Eigen::VectorXd& log_h);

/// One joint posterior draw: the k-th retained draw of every equation.
struct VarDraw {
  VarSpec spec;
  std::vector<DrawRecord> equations;

  Eigen::Index time_points() const { return equations.front().h.size(); }
  /// Slice at time t = 1..T of the estimation sample.
  TimeSlice slice(Eigen::Index t) const;
};

/// Sigma_t = V_t H_t V_t'. Throws NumericalError on non-finite h.
Eigen::MatrixXd assemble_covariance(const VarDraw& draw, Eigen::Index t);

struct VarFit {
  VarSpec spec;
  SamplerConfig config;
  std::vector<EquationData> data;
  std::vector<PosteriorDraws> equations;

  std::size_t n_draws() const { return equations.empty() ? 0 : equations.front().size(); }
  VarDraw draw(std::size_t k) const;
  std::vector<EquationState> last_states() const;
};

/// Estimates the m equations independently, each on the RNG stream
/// (config.seed, i, 0), spread over `threads` worker threads. Results do not
/// depend on the thread count or scheduling.
VarFit fit_var(const Eigen::MatrixXd& data, const VarSpec& spec, const SamplerConfig& config, int threads = 1,
               const std::vector<EquationState>* initial = nullptr);

} // namespace ttvp

#endif
