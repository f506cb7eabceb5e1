#include "ttvp/var_model.hpp"

#include "ttvp/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace ttvp {

void VarSpec::validate() const {
  if (m < 1 || p < 1) throw InvalidArgument("var: need m >= 1 and p >= 1");
  if (!names.empty() && static_cast<int>(names.size()) != m) throw InvalidArgument("var: one name per variable");
  if (!ordering.empty()) {
    if (static_cast<int>(ordering.size()) != m) throw InvalidArgument("var: ordering must list every variable");
    std::vector<int> sorted = ordering;
    std::sort(sorted.begin(), sorted.end());
    for (int k = 0; k < m; ++k) {
      if (sorted[k] != k) throw InvalidArgument("var: ordering must be a permutation of 0..m-1");
    }
  }
}

Eigen::MatrixXd VarSpec::ordered(const Eigen::MatrixXd& data) const {
  if (data.cols() != m) throw InvalidArgument("var: data has the wrong number of columns");
  if (ordering.empty()) return data;
  Eigen::MatrixXd out(data.rows(), m);
  for (int k = 0; k < m; ++k) out.col(k) = data.col(ordering[k]);
  return out;
}

EquationData build_equation_regressors(const Eigen::MatrixXd& data, const VarSpec& spec, int i) {
  spec.validate();
  if (i < 0 || i >= spec.m) throw InvalidArgument("var: equation index out of range");
  if (data.cols() != spec.m) throw InvalidArgument("var: data has the wrong number of columns");
  const Eigen::Index T = data.rows() - spec.p;
  if (T < 1) throw InvalidArgument("var: insufficient observations for the lag order");
  EquationData eq;
  const int K = spec.equation_dim(i);
  eq.regressors.resize(T, K);
  eq.observations.resize(T);
  for (Eigen::Index r = 0; r < T; ++r) {
    const Eigen::Index t = spec.p + r;
    int c = 0;
    if (spec.intercept) eq.regressors(r, c++) = 1.0;
    for (int l = 1; l <= spec.p; ++l) {
      for (int k = 0; k < spec.m; ++k) eq.regressors(r, c++) = data(t - l, k);
    }
    for (int k = 0; k < i; ++k) eq.regressors(r, c++) = data(t, k);
    eq.observations[r] = data(t, i);
  }
  eq.ols_var = ols_coefficient_variance(eq.regressors, eq.observations);
  return eq;
}

Eigen::MatrixXd TimeSlice::V() const {
  const Eigen::Index m = Vinv.rows();
  return Vinv.triangularView<Eigen::UnitLower>().solve(Eigen::MatrixXd::Identity(m, m));
}

Eigen::MatrixXd TimeSlice::covariance() const {
  const Eigen::MatrixXd v = V();
  Eigen::MatrixXd s = v * log_h.array().exp().matrix().asDiagonal() * v.transpose();
  return 0.5 * (s + s.transpose());
}

Eigen::MatrixXd TimeSlice::impact() const { return V() * (0.5 * log_h.array()).exp().matrix().asDiagonal(); }

TimeSlice make_time_slice(const VarSpec& spec, const std::vector<Eigen::VectorXd>& coefficients,
                          const Eigen::VectorXd& log_h) {
  const int m = spec.m;
  if (static_cast<int>(coefficients.size()) != m || log_h.size() != m) {
    throw InvalidArgument("var: one coefficient vector and log-variance per equation required");
  }
  if (!log_h.allFinite()) throw NumericalError("var: non-finite log-variance");
  TimeSlice s;
  s.intercept = Eigen::VectorXd::Zero(m);
  s.lags.assign(spec.p, Eigen::MatrixXd::Zero(m, m));
  s.Vinv = Eigen::MatrixXd::Identity(m, m);
  s.log_h = log_h;
  for (int i = 0; i < m; ++i) {
    const Eigen::VectorXd& b = coefficients[i];
    if (b.size() != spec.equation_dim(i)) throw InvalidArgument("var: coefficient vector has the wrong length");
    int c = 0;
    if (spec.intercept) s.intercept[i] = b[c++];
    for (int l = 0; l < spec.p; ++l) {
      for (int k = 0; k < m; ++k) s.lags[l](i, k) = b[c++];
    }
    for (int k = 0; k < i; ++k) s.Vinv(i, k) = -b[c++];
  }
  return s;
}

TimeSlice VarDraw::slice(Eigen::Index t) const {
  const Eigen::Index T = time_points();
  if (t < 1 || t > T) throw InvalidArgument("var: time index out of range");
  std::vector<Eigen::VectorXd> coef;
  Eigen::VectorXd log_h(spec.m);
  for (int i = 0; i < spec.m; ++i) {
    coef.push_back(equations[i].states.row(t).transpose());
    log_h[i] = equations[i].h[t - 1];
  }
  return make_time_slice(spec, coef, log_h);
}

Eigen::MatrixXd assemble_covariance(const VarDraw& draw, Eigen::Index t) { return draw.slice(t).covariance(); }

VarDraw VarFit::draw(std::size_t k) const {
  VarDraw d;
  d.spec = spec;
  for (const auto& eq : equations) d.equations.push_back(eq.draws.get(k));
  return d;
}

std::vector<EquationState> VarFit::last_states() const {
  std::vector<EquationState> out;
  for (const auto& eq : equations) out.push_back(eq.last_state);
  return out;
}

VarFit fit_var(const Eigen::MatrixXd& data, const VarSpec& spec, const SamplerConfig& config, int threads,
               const std::vector<EquationState>* initial) {
  spec.validate();
  config.validate();
  if (!data.allFinite()) throw InvalidArgument("var: data contain non-finite values");
  if (initial && static_cast<int>(initial->size()) != spec.m) throw InvalidArgument("var: one initial state per equation");
  const Eigen::MatrixXd ordered = spec.ordered(data);

  VarFit fit;
  fit.spec = spec;
  fit.config = config;
  for (int i = 0; i < spec.m; ++i) fit.data.push_back(build_equation_regressors(ordered, spec, i));
  fit.equations.resize(spec.m);

  std::atomic<int> next{0};
  std::exception_ptr failure;
  int failed_equation = -1;
  std::mutex mtx;
  auto worker = [&] {
    for (int i = next++; i < spec.m; i = next++) {
      try {
        Rng rng = Rng::stream(config.seed, static_cast<std::uint64_t>(i), 0);
        fit.equations[i] = run_chain(config, fit.data[i], rng, initial ? &(*initial)[i] : nullptr);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mtx);
        if (!failure || i < failed_equation) {
          failure = std::current_exception();
          failed_equation = i;
        }
      }
    }
  };
  const int n = std::clamp(threads, 1, spec.m);
  std::vector<std::thread> pool;
  for (int w = 1; w < n; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) {
    try {
      std::rethrow_exception(failure);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(std::string(e.what()) + " in equation " + std::to_string(failed_equation));
    } catch (const Error& e) {
      throw NumericalError(std::string(e.what()) + " in equation " + std::to_string(failed_equation), failed_equation);
    }
  }
  return fit;
}

} // namespace ttvp
