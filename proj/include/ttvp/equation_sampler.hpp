#ifndef TTVP_EQUATION_SAMPLER_HPP
#define TTVP_EQUATION_SAMPLER_HPP

#include "ttvp/distributions.hpp"
#include "ttvp/shrinkage.hpp"
#include "ttvp/statespace.hpp"
#include "ttvp/stochvol.hpp"
#include "ttvp/threshold.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace ttvp {

enum class ModelKind {
  /// Threshold mixture innovations.
  Threshold,
  /// Every period is a slab period: the standard random-walk TVP model.
  Tvp,
};

enum class StateUpdate {
  /// FFBS proposal under the current regime path with a Metropolis-Hastings
  /// correction, followed by single-site Gibbs moves on every increment.
  Exact,
  /// FFBS under the current regime path, accepted unconditionally.
  Literal,
};

enum class ThresholdUpdate {
  /// Griddy Gibbs on a uniform grid over the prior support.
  Griddy,
  /// Exact draw from the piecewise-constant conditional.
  Exact,
};

struct SamplerConfig {
  int n_draws = 6000;
  int n_burn = 2000;
  int thin = 1;
  std::uint64_t seed = 1;

  ModelKind model = ModelKind::Threshold;
  StateUpdate state_update = StateUpdate::Exact;

  // initial-state shrinkage
  double a = 0.1;
  double b0 = 0.01;
  double b1 = 0.01;

  // thresholds and innovation variances
  double r0 = 3.0;
  double r1 = 0.03;
  double xi = 1e-5;
  double prior_lo_mult = 0.1;
  double prior_hi_mult = 1.5;
  int grid_size = 50;
  ThresholdUpdate threshold_update = ThresholdUpdate::Exact;

  // observation variance
  VolMode vol_mode = VolMode::Stochastic;
  SvKernel sv_kernel = SvKernel::AuxiliaryMixture;
  double mu_mean = 0.0;
  double mu_var = 100.0;
  double a_rho = 25.0;
  double b_rho = 5.0;
  double B_zeta = 1.0;
  double c0 = 0.01;
  double c1 = 0.01;

  /// Retained draws beyond this many bytes are streamed to a scratch file (0: never).
  std::size_t spill_bytes = 0;
  std::filesystem::path spill_dir;

  void validate() const;
  /// Number of retained draws: floor((n_draws - n_burn) / thin).
  int retained() const;
  /// Whether sweep i (0-based) is retained.
  bool keeps(int sweep) const;
};

struct EquationData {
  Eigen::MatrixXd regressors; // T x K
  Eigen::VectorXd observations;
  /// Variances of the full-sample OLS coefficient estimates; computed when empty.
  Eigen::VectorXd ols_var;

  Eigen::Index time_points() const { return observations.size(); }
  Eigen::Index dim() const { return regressors.cols(); }
  void validate() const;
};

struct EquationState {
  StateTrajectory traj;
  IndicatorPath indicators;
  ThresholdBlock threshold;
  ShrinkageBlock shrinkage;
  VolatilityBlock vol;

  Eigen::VectorXd residuals(const EquationData& data) const;
};

/// Diagonal of sigma^2 (X'X)^-1 from a full-sample OLS fit, ridge-regularized
/// with penalty 1e-6 trace(X'X) when X'X is singular.
Eigen::VectorXd ols_coefficient_variance(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Blocks set from the configuration, state path from the Kalman smoother under
/// slab variances, thresholds at their prior midpoints.
EquationState initialize_state(const SamplerConfig& config, const EquationData& data);

/// One pass of the six updates: states, slab variances, local scales, global
/// scale, thresholds, observation variances.
void gibbs_sweep(EquationState& state, const EquationData& data, const SamplerConfig& config, Rng& rng);

/// Compact copy of the sampled quantities of one sweep.
struct DrawRecord {
  Eigen::MatrixXd states; // (T+1) x K
  IndicatorMatrix indicators;
  Eigen::VectorXd d;
  Eigen::VectorXd slab_var;
  Eigen::VectorXd spike_var;
  double lambda2 = 0.0;
  Eigen::VectorXd tau2;
  Eigen::VectorXd h; // log observation variances (log sigma2 when homoscedastic)
  double h0 = 0.0;
  double mu = 0.0;
  double rho = 0.0;
  double zeta = 0.0;
  double sigma2 = 0.0;
  bool stochastic_vol = true;
  int sweep = 0;

  static DrawRecord from_state(const EquationState& state, int sweep);
  /// Rebuilds a sampler state (used for warm starts and forecasting).
  EquationState to_state(const SamplerConfig& config, const EquationData& data) const;
  Eigen::VectorXd obs_variances() const { return h.array().exp(); }
  Eigen::MatrixXd state_variances() const;
};

/// Flat binary layout of a record: states, indicators, d, slab, spike, tau2, h,
/// then the scalars. T and K are not stored.
std::size_t packed_record_size(Eigen::Index T, Eigen::Index K);
std::vector<double> pack_record(const DrawRecord& record);
DrawRecord unpack_record(const double* data, Eigen::Index T, Eigen::Index K);

/// In-memory store that switches to an append-only scratch file once the
/// configured size is exceeded.
class DrawStore {
public:
  DrawStore() = default;
  DrawStore(std::size_t spill_bytes, std::filesystem::path spill_dir);
  DrawStore(DrawStore&&) noexcept;
  DrawStore& operator=(DrawStore&&) noexcept;
  ~DrawStore();

  void push(DrawRecord record);
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  DrawRecord get(std::size_t i) const;
  DrawRecord operator[](std::size_t i) const { return get(i); }
  bool spilled() const { return !path_.empty(); }

private:
  std::vector<DrawRecord> memory_;
  std::size_t count_ = 0;
  std::size_t bytes_ = 0;
  std::size_t spill_bytes_ = 0;
  std::filesystem::path spill_dir_;
  std::filesystem::path path_;
  std::size_t record_doubles_ = 0;
  Eigen::Index T_ = 0;
  Eigen::Index K_ = 0;
  mutable std::unique_ptr<std::fstream> file_;

  void spill_memory();
  void write_record(const DrawRecord& r);
};

struct ChainDiagnostics {
  double seconds = 0.0;
  /// Effective sample sizes of lambda2, mean slab variance, mean threshold,
  /// and mu / rho / zeta (or sigma2).
  std::vector<std::pair<std::string, double>> ess;
};

struct PosteriorDraws {
  DrawStore draws;
  ChainDiagnostics diagnostics;
  EquationState last_state; // for warm starts

  std::size_t size() const { return draws.size(); }
};

/// Runs n_draws sweeps from `initial` (or from initialize_state) with the RNG stream rng.
PosteriorDraws run_chain(const SamplerConfig& config, const EquationData& data, Rng& rng,
                         const EquationState* initial = nullptr);
/// As above with the stream derived from (config.seed, 0, 0).
PosteriorDraws run_chain(const SamplerConfig& config, const EquationData& data);

/// Effective sample size by Geyer's initial monotone sequence estimator.
double effective_sample_size(const std::vector<double>& x);

} // namespace ttvp

#endif
