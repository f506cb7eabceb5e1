#ifndef TTVP_STRUCTURAL_ANALYSIS_HPP
#define TTVP_STRUCTURAL_ANALYSIS_HPP

#include "ttvp/var_model.hpp"

#include <Eigen/Dense>

#include <vector>

namespace ttvp {

struct IrfRequest {
  int shock = 0;          // recursive position of the shocked variable
  double shock_size = 1.0; // impact on the shocked variable, in its units
  int horizon = 20;        // responses for h = 0..horizon-1
  std::vector<Eigen::Index> times; // estimation-sample time points (1..T); empty = all
  std::vector<double> quantiles{0.05, 0.16, 0.5, 0.84, 0.95};

  void validate(int m) const;
};

struct ImpulseResponse {
  Eigen::MatrixXd response; // horizon x m
  bool explosive = false;
};

/// Frozen-coefficient responses at one time slice: the impact column of
/// V H^{1/2} scaled to shock_size, propagated through the reduced-form lags.
ImpulseResponse impulse_response(const TimeSlice& slice, const IrfRequest& request);
ImpulseResponse impulse_response(const VarDraw& draw, Eigen::Index t, const IrfRequest& request);

/// Largest modulus among the companion-matrix eigenvalues.
double companion_spectral_radius(const TimeSlice& slice);

struct IrfSummary {
  std::vector<Eigen::Index> times;
  std::vector<double> probs;
  int horizon = 0;
  /// quantiles[q] has one row per (time index ti, horizon h) at ti * horizon + h.
  std::vector<Eigen::MatrixXd> quantiles;
  int explosive_draws = 0;
};

/// Pointwise posterior quantiles (linear interpolation between order statistics).
IrfSummary irf_summary(const std::vector<VarDraw>& draws, const IrfRequest& request);

/// Quantiles of the per-draw average response over times [t_from, t_to]; one
/// horizon x m matrix per requested probability.
std::vector<Eigen::MatrixXd> irf_window_quantiles(const std::vector<VarDraw>& draws, const IrfRequest& request,
                                                  Eigen::Index t_from, Eigen::Index t_to);

double quantile(std::vector<double> values, double prob);

struct BreakDiagnostic {
  Eigen::MatrixXd per_equation; // T x m, exp of the demeaned log-determinant
  Eigen::VectorXd overall;      // T, exp of the summed demeaned log-determinants
};

/// Posterior mean of the demeaned log det of the state innovation covariance,
/// log det Omega_it = sum_j log theta_ijt, per equation, exponentiated.
BreakDiagnostic break_diagnostic(const std::vector<PosteriorDraws>& equations);

} // namespace ttvp

#endif
