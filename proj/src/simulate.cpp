#include "ttvp/simulate.hpp"

#include "ttvp/errors.hpp"
#include "ttvp/structural_analysis.hpp"

#include <algorithm>
#include <cmath>

namespace ttvp {

void DgpSpec::validate() const {
  if (T < 10) throw InvalidArgument("dgp: T must be at least 10");
  if (!(break_probability >= 0.0 && break_probability <= 1.0)) {
    throw InvalidArgument("dgp: break probability must lie in [0, 1]");
  }
  for (int t : break_times) {
    if (t < 1 || t > T) throw InvalidArgument("dgp: break times must lie in 1..T");
  }
  if (!(sigma_obs > 0.0) || !std::isfinite(sigma_obs)) throw InvalidArgument("dgp: sigma_obs must be positive");
  if (!(state_sd >= 0.0) || !std::isfinite(state_sd)) throw InvalidArgument("dgp: state_sd must be non-negative");
  if (kind == DgpKind::VarTtvp) {
    if (m < 1 || p < 1) throw InvalidArgument("dgp: m and p must be positive");
    if (breaking != "lags" && breaking != "all") throw InvalidArgument("dgp: breaking must be 'lags' or 'all'");
  }
}

DgpKind parse_dgp_kind(const std::string& name) {
  if (name == "univariate-threshold") return DgpKind::UnivariateThreshold;
  if (name == "univariate-random-breaks") return DgpKind::UnivariateRandomBreaks;
  if (name == "var-ttvp") return DgpKind::VarTtvp;
  throw InvalidArgument("dgp: unknown kind '" + name + "'");
}

std::string to_string(DgpKind kind) {
  switch (kind) {
  case DgpKind::UnivariateThreshold: return "univariate-threshold";
  case DgpKind::UnivariateRandomBreaks: return "univariate-random-breaks";
  case DgpKind::VarTtvp: return "var-ttvp";
  }
  return "";
}

namespace {

std::vector<bool> break_schedule(const DgpSpec& spec, Rng& rng) {
  std::vector<bool> brk(spec.T + 1, false);
  if (!spec.break_times.empty()) {
    for (int t : spec.break_times) brk[t] = true;
  } else {
    for (int t = 1; t <= spec.T; ++t) brk[t] = rng.uniform() < spec.break_probability;
  }
  return brk;
}

} // namespace

UnivariateSample simulate_univariate(const DgpSpec& spec, Rng& rng) {
  spec.validate();
  const int T = spec.T;
  UnivariateSample out;
  out.data.resize(T, 2);
  out.states.resize(T + 1);
  out.indicators.resize(T);
  out.states[0] = 0.0;

  std::vector<bool> brk;
  double d = 0.0;
  if (spec.kind == DgpKind::UnivariateThreshold && spec.break_times.empty()) {
    // P(|e| > d) = break_probability for e ~ N(0, state_sd^2).
    const double p = spec.break_probability;
    d = p <= 0.0 ? kInfinity : p >= 1.0 ? 0.0 : spec.state_sd * normal_cquantile(0.5 * p);
  } else {
    brk = break_schedule(spec, rng);
  }

  for (int t = 1; t <= T; ++t) {
    double step = 0.0;
    int s = 0;
    if (brk.empty()) {
      const double e = spec.state_sd * rng.normal();
      if (std::abs(e) > d) {
        step = e;
        s = 1;
      }
    } else if (brk[t]) {
      step = spec.state_sd * rng.normal();
      s = 1;
    }
    out.states[t] = out.states[t - 1] + step;
    out.indicators[t - 1] = s;
    const double x = 2.0 * rng.uniform() - 1.0;
    out.data(t - 1, 1) = x;
    out.data(t - 1, 0) = x * out.states[t] + spec.sigma_obs * rng.normal();
  }
  return out;
}

namespace {

constexpr int kMaxRejections = 1000;

std::vector<Eigen::VectorXd> column(const std::vector<Eigen::MatrixXd>& states, Eigen::Index t) {
  std::vector<Eigen::VectorXd> c;
  for (const auto& s : states) c.push_back(s.row(t).transpose());
  return c;
}

bool stable(const VarSpec& spec, const std::vector<Eigen::VectorXd>& coef, const Eigen::VectorXd& log_h) {
  return companion_spectral_radius(make_time_slice(spec, coef, log_h)) < 1.0;
}

} // namespace

VarSample simulate_var(const DgpSpec& spec, Rng& rng) {
  spec.validate();
  if (spec.kind != DgpKind::VarTtvp) throw InvalidArgument("simulate_var: kind must be var-ttvp");
  const int m = spec.m;
  const int p = spec.p;
  const int T = spec.T;
  const int off = spec.intercept ? 1 : 0;

  VarSample out;
  out.spec.m = m;
  out.spec.p = p;
  out.spec.intercept = spec.intercept;
  for (int i = 0; i < m; ++i) out.spec.names.push_back("y" + std::to_string(i + 1));
  out.log_h = Eigen::VectorXd::Constant(m, 2.0 * std::log(spec.sigma_obs));

  // Starting coefficients: small lags shrinking with the lag order, modest
  // contemporaneous loadings, intercepts on the scale of the noise.
  std::vector<Eigen::VectorXd> coef(m);
  for (int attempt = 0;; ++attempt) {
    if (attempt == kMaxRejections) throw NumericalError("simulate_var: no stable starting coefficients");
    for (int i = 0; i < m; ++i) {
      Eigen::VectorXd b(out.spec.equation_dim(i));
      if (spec.intercept) b[0] = spec.sigma_obs * rng.normal();
      for (int l = 0; l < p; ++l) {
        for (int j = 0; j < m; ++j) {
          const double sd = (i == j ? 0.2 : 0.1) / (l + 1);
          b[off + l * m + j] = (i == j && l == 0 ? 0.4 : 0.0) + sd * rng.normal();
        }
      }
      for (int j = 0; j < i; ++j) b[off + m * p + j] = 0.3 * rng.normal();
      coef[i] = b;
    }
    if (stable(out.spec, coef, out.log_h)) break;
  }

  for (int i = 0; i < m; ++i) {
    out.states.emplace_back(T + 1, coef[i].size());
    out.states[i].row(0) = coef[i].transpose();
    out.indicators.push_back(Eigen::MatrixXi::Zero(T, coef[i].size()));
  }
  auto breakable = [&](Eigen::Index k) {
    if (spec.breaking == "all") return true;
    return k >= off && k < off + m * p;
  };

  const std::vector<bool> brk = spec.break_times.empty() ? std::vector<bool>{} : break_schedule(spec, rng);
  for (int t = 1; t <= T; ++t) {
    std::vector<Eigen::VectorXd> prev = column(out.states, t - 1);
    std::vector<Eigen::VectorXd> next;
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxRejections) throw NumericalError("simulate_var: persistent instability", t);
      next = prev;
      for (int i = 0; i < m; ++i) out.indicators[i].row(t - 1).setZero();
      for (int i = 0; i < m; ++i) {
        for (Eigen::Index k = 0; k < next[i].size(); ++k) {
          if (!breakable(k)) continue;
          const bool moves = brk.empty() ? rng.uniform() < spec.break_probability : static_cast<bool>(brk[t]);
          if (!moves) continue;
          next[i][k] += spec.state_sd * rng.normal();
          out.indicators[i](t - 1, k) = 1;
        }
      }
      if (stable(out.spec, next, out.log_h)) break;
    }
    for (int i = 0; i < m; ++i) out.states[i].row(t) = next[i].transpose();
  }

  // Observations: p presample rows from the starting coefficients after a burn-in.
  const int burn = 100;
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(burn + p + T, m);
  for (int r = p; r < burn + p + T; ++r) {
    const Eigen::Index t = std::max(0, r - burn - p + 1); // estimation period of row r (0 before the sample)
    const TimeSlice s = make_time_slice(out.spec, column(out.states, t), out.log_h);
    Eigen::VectorXd rhs = spec.intercept ? s.intercept : Eigen::VectorXd::Zero(m);
    for (int l = 0; l < p; ++l) rhs += s.lags[l] * y.row(r - 1 - l).transpose();
    for (int i = 0; i < m; ++i) rhs[i] += std::exp(0.5 * out.log_h[i]) * rng.normal();
    y.row(r) = s.Vinv.triangularView<Eigen::UnitLower>().solve(rhs).transpose();
  }
  out.data = y.bottomRows(p + T);
  return out;
}

} // namespace ttvp
