#include "ttvp/structural_analysis.hpp"

#include "ttvp/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace ttvp {

void IrfRequest::validate(int m) const {
  if (horizon < 1) throw InvalidArgument("irf: horizon must be at least 1");
  if (shock < 0 || shock >= m) throw InvalidArgument("irf: shock variable outside the system");
  for (double q : quantiles) {
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("irf: quantiles must lie in [0, 1]");
  }
}

double companion_spectral_radius(const TimeSlice& s) {
  const Eigen::Index m = s.Vinv.rows();
  const int p = static_cast<int>(s.lags.size());
  const Eigen::MatrixXd V = s.V();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(m * p, m * p);
  for (int l = 0; l < p; ++l) C.block(0, l * m, m, m) = V * s.lags[l];
  if (p > 1) C.block(m, 0, m * (p - 1), m * (p - 1)).setIdentity();
  return C.eigenvalues().cwiseAbs().maxCoeff();
}

ImpulseResponse impulse_response(const TimeSlice& s, const IrfRequest& req) {
  const int m = static_cast<int>(s.Vinv.rows());
  req.validate(m);
  const int p = static_cast<int>(s.lags.size());
  const Eigen::MatrixXd V = s.V();
  std::vector<Eigen::MatrixXd> phi;
  for (const auto& a : s.lags) phi.push_back(V * a);

  const Eigen::VectorXd impact = s.impact().col(req.shock);
  ImpulseResponse out;
  out.response.resize(req.horizon, m);
  out.response.row(0) = (impact * (req.shock_size / impact[req.shock])).transpose();
  for (int h = 1; h < req.horizon; ++h) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(m);
    for (int l = 1; l <= std::min(h, p); ++l) r += phi[l - 1] * out.response.row(h - l).transpose();
    out.response.row(h) = r.transpose();
  }
  out.explosive = companion_spectral_radius(s) >= 1.0;
  return out;
}

ImpulseResponse impulse_response(const VarDraw& draw, Eigen::Index t, const IrfRequest& req) {
  return impulse_response(draw.slice(t), req);
}

double quantile(std::vector<double> v, double prob) {
  if (v.empty()) throw InvalidArgument("quantile: no values");
  std::sort(v.begin(), v.end());
  const double pos = prob * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

namespace {

std::vector<Eigen::Index> resolve_times(const std::vector<VarDraw>& draws, const IrfRequest& req) {
  if (!req.times.empty()) return req.times;
  std::vector<Eigen::Index> t(draws.front().time_points());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<Eigen::Index>(i + 1);
  return t;
}

} // namespace

IrfSummary irf_summary(const std::vector<VarDraw>& draws, const IrfRequest& req) {
  if (draws.empty()) throw InvalidArgument("irf_summary: no draws");
  const int m = draws.front().spec.m;
  req.validate(m);
  IrfSummary out;
  out.times = resolve_times(draws, req);
  out.probs = req.quantiles;
  out.horizon = req.horizon;
  const Eigen::Index rows = static_cast<Eigen::Index>(out.times.size()) * req.horizon;
  out.quantiles.assign(req.quantiles.size(), Eigen::MatrixXd(rows, m));

  const std::size_t n = draws.size();
  std::vector<std::vector<double>> cell(static_cast<std::size_t>(req.horizon * m), std::vector<double>(n));
  for (std::size_t ti = 0; ti < out.times.size(); ++ti) {
    for (std::size_t k = 0; k < n; ++k) {
      const ImpulseResponse r = impulse_response(draws[k], out.times[ti], req);
      if (r.explosive) ++out.explosive_draws;
      for (int h = 0; h < req.horizon; ++h) {
        for (int v = 0; v < m; ++v) cell[h * m + v][k] = r.response(h, v);
      }
    }
    for (int h = 0; h < req.horizon; ++h) {
      for (int v = 0; v < m; ++v) {
        std::vector<double>& c = cell[h * m + v];
        std::sort(c.begin(), c.end());
        for (std::size_t q = 0; q < req.quantiles.size(); ++q) {
          out.quantiles[q](static_cast<Eigen::Index>(ti) * req.horizon + h, v) = quantile(c, req.quantiles[q]);
        }
      }
    }
  }
  return out;
}

std::vector<Eigen::MatrixXd> irf_window_quantiles(const std::vector<VarDraw>& draws, const IrfRequest& req,
                                                  Eigen::Index t_from, Eigen::Index t_to) {
  if (draws.empty()) throw InvalidArgument("irf_window_quantiles: no draws");
  if (t_from > t_to) throw InvalidArgument("irf_window_quantiles: empty window");
  const int m = draws.front().spec.m;
  req.validate(m);
  std::vector<std::vector<double>> cell(static_cast<std::size_t>(req.horizon * m));
  for (const auto& d : draws) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(req.horizon, m);
    for (Eigen::Index t = t_from; t <= t_to; ++t) acc += impulse_response(d, t, req).response;
    acc /= static_cast<double>(t_to - t_from + 1);
    for (int h = 0; h < req.horizon; ++h) {
      for (int v = 0; v < m; ++v) cell[h * m + v].push_back(acc(h, v));
    }
  }
  std::vector<Eigen::MatrixXd> out(req.quantiles.size(), Eigen::MatrixXd(req.horizon, m));
  for (int h = 0; h < req.horizon; ++h) {
    for (int v = 0; v < m; ++v) {
      for (std::size_t q = 0; q < req.quantiles.size(); ++q) out[q](h, v) = quantile(cell[h * m + v], req.quantiles[q]);
    }
  }
  return out;
}

BreakDiagnostic break_diagnostic(const std::vector<PosteriorDraws>& equations) {
  if (equations.empty() || equations.front().size() == 0) throw InvalidArgument("break_diagnostic: no draws");
  const Eigen::Index m = static_cast<Eigen::Index>(equations.size());
  const Eigen::Index T = equations.front().draws.get(0).indicators.rows();
  Eigen::MatrixXd mean_log = Eigen::MatrixXd::Zero(T, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const DrawStore& store = equations[i].draws;
    if (store.empty()) throw InvalidArgument("break_diagnostic: equation without draws");
    for (std::size_t k = 0; k < store.size(); ++k) {
      const DrawRecord r = store.get(k);
      if (r.indicators.rows() != T) throw InvalidArgument("break_diagnostic: equations differ in sample length");
      const Eigen::VectorXd logdet = r.state_variances().array().log().rowwise().sum();
      mean_log.col(i) += (logdet.array() - logdet.mean()).matrix();
    }
    mean_log.col(i) /= static_cast<double>(store.size());
  }
  BreakDiagnostic out;
  out.per_equation = mean_log.array().exp();
  out.overall = mean_log.rowwise().sum().array().exp();
  return out;
}

} // namespace ttvp
