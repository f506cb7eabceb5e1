#include "ttvp/cli.hpp"

#include "ttvp/config.hpp"
#include "ttvp/errors.hpp"
#include "ttvp/io.hpp"
#include "ttvp/simulate.hpp"
#include "ttvp/structural_analysis.hpp"
#include "ttvp/validation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>

namespace ttvp {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out_dir = ".";
  std::string data_path;
  bool record_timing = false;
};

class Stopwatch {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

const std::vector<double> kSummaryProbs{0.05, 0.16, 0.5, 0.84, 0.95};

std::string quantile_name(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "q%.10g", 100.0 * p);
  return buf;
}

std::vector<std::string> summary_header(std::vector<std::string> lead, const std::vector<double>& probs) {
  lead.push_back("mean");
  for (double p : probs) lead.push_back(quantile_name(p));
  return lead;
}

void summary_cells(CsvWriter& w, std::vector<double> v, const std::vector<double>& probs) {
  double mean = 0.0;
  for (double x : v) mean += x;
  w.cell(mean / static_cast<double>(v.size()));
  std::sort(v.begin(), v.end());
  for (double p : probs) w.cell(quantile(v, p));
}

RunConfig load_run_config(const Globals& g) {
  RunConfig c = g.config_path.empty() ? parse_config("") : load_config(g.config_path);
  if (g.seed) c.sampler.seed = *g.seed;
  if (g.threads < 1) throw InvalidArgument("--threads must be at least 1");
  c.forecast.threads = g.threads;
  return c;
}

struct LoadedData {
  Eigen::MatrixXd values;
  std::vector<std::string> names;
  std::vector<std::string> dates;

  std::string date(Eigen::Index row) const {
    return dates.empty() || row < 0 || row >= static_cast<Eigen::Index>(dates.size()) ? std::string()
                                                                                      : dates[static_cast<std::size_t>(row)];
  }
};

LoadedData load_data(const RunConfig& c, const Globals& g) {
  fs::path path = g.data_path.empty() ? c.input : fs::path(g.data_path);
  if (path.empty()) throw InvalidArgument("no input data: set data.input or pass --data");
  if (g.data_path.empty() && path.is_relative()) path = c.base_dir / path;
  const DataTable t = read_csv(path);
  LoadedData d;
  d.dates = t.dates;
  if (c.variables.empty()) {
    d.values = t.values;
    d.names = t.names;
  } else {
    d.values.resize(t.values.rows(), static_cast<Eigen::Index>(c.variables.size()));
    for (std::size_t i = 0; i < c.variables.size(); ++i) d.values.col(static_cast<Eigen::Index>(i)) = t.values.col(t.column(c.variables[i]));
    d.names = c.variables;
  }
  return d;
}

std::vector<std::string> regressor_names(const VarSpec& spec, int i) {
  std::vector<std::string> n;
  if (spec.intercept) n.push_back("const");
  for (int l = 1; l <= spec.p; ++l) {
    for (int j = 0; j < spec.m; ++j) n.push_back(spec.names[j] + "_L" + std::to_string(l));
  }
  for (int j = 0; j < i; ++j) n.push_back(spec.names[j]);
  return n;
}

Json metadata(const std::string& command, const RunConfig& c, const Globals& g) {
  Json j;
  j["command"] = command;
  j["seed"] = c.sampler.seed;
  j["threads"] = g.threads;
  j["config"] = Json::parse(to_json(c));
  return j;
}

void write_metadata(const fs::path& dir, Json j, const Globals& g, const Stopwatch& clock) {
  if (g.record_timing) j["runtime_seconds"] = clock.seconds();
  atomic_write(dir / "metadata.json", j.dump(2) + "\n");
}

Json chain_diagnostics(const std::vector<PosteriorDraws>& eqs, const VarSpec& spec, bool timing) {
  Json arr = Json::array();
  for (std::size_t i = 0; i < eqs.size(); ++i) {
    Json e;
    e["equation"] = spec.names[i];
    Json ess = Json::object();
    for (const auto& [name, v] : eqs[i].diagnostics.ess) ess[name] = v;
    e["ess"] = ess;
    if (timing) e["seconds"] = eqs[i].diagnostics.seconds;
    arr.push_back(e);
  }
  return arr;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const Globals& g, std::ostream& out) {
  Stopwatch clock;
  const RunConfig c = load_run_config(g);
  const fs::path dir = g.out_dir;
  Rng rng = Rng::stream(c.sampler.seed, 0x51a, 0);
  const DgpSpec& d = c.simulate;
  Json meta = metadata("simulate", c, g);

  if (d.kind == DgpKind::VarTtvp) {
    const VarSample s = simulate_var(d, rng);
    DataTable table{s.spec.names, {}, s.data};
    atomic_write(dir / "data.csv", to_csv(table));
    CsvWriter w({"equation", "regressor", "t", "value", "break"});
    for (int i = 0; i < s.spec.m; ++i) {
      const auto names = regressor_names(s.spec, i);
      for (Eigen::Index k = 0; k < s.states[i].cols(); ++k) {
        for (Eigen::Index t = 0; t < s.states[i].rows(); ++t) {
          w.cell(s.spec.names[i]).cell(names[k]).cell(static_cast<long>(t)).cell(s.states[i](t, k));
          w.cell(static_cast<long>(t == 0 ? 0 : s.indicators[i](t - 1, k)));
          w.end_row();
        }
      }
    }
    atomic_write(dir / "truth.csv", w.str());
    meta["log_variance"] = std::vector<double>(s.log_h.data(), s.log_h.data() + s.log_h.size());
  } else {
    const UnivariateSample s = simulate_univariate(d, rng);
    DataTable table{{"y", "x"}, {}, s.data};
    atomic_write(dir / "data.csv", to_csv(table));
    CsvWriter w({"t", "beta", "break"});
    for (Eigen::Index t = 0; t < s.states.size(); ++t) {
      w.cell(static_cast<long>(t)).cell(s.states[t]).cell(static_cast<long>(t == 0 ? 0 : s.indicators[t - 1]));
      w.end_row();
    }
    atomic_write(dir / "truth.csv", w.str());
  }
  meta["outputs"] = {"data.csv", "truth.csv"};
  write_metadata(dir, meta, g, clock);
  out << (dir / "data.csv").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// fit

void write_fit_tables(const fs::path& dir, const VarSpec& spec, const std::vector<PosteriorDraws>& eqs,
                      const LoadedData& data, bool threshold) {
  CsvWriter states(summary_header({"equation", "regressor", "t", "date"}, kSummaryProbs));
  CsvWriter pmp({"equation", "regressor", "t", "date", "pmp"});
  CsvWriter vol(summary_header({"equation", "t", "date"}, kSummaryProbs));
  CsvWriter par(summary_header({"equation", "parameter", "regressor"}, kSummaryProbs));

  for (int i = 0; i < spec.m; ++i) {
    const DrawStore& store = eqs[i].draws;
    const std::size_t n = store.size();
    std::vector<DrawRecord> recs;
    recs.reserve(n);
    for (std::size_t k = 0; k < n; ++k) recs.push_back(store.get(k));
    const Eigen::Index T = recs.front().h.size();
    const Eigen::Index K = recs.front().states.cols();
    const auto names = regressor_names(spec, i);
    std::vector<double> v(n);
    auto collect = [&](auto&& f) {
      for (std::size_t k = 0; k < n; ++k) v[k] = f(recs[k]);
      return v;
    };

    for (Eigen::Index j = 0; j < K; ++j) {
      for (Eigen::Index t = 0; t <= T; ++t) {
        states.cell(spec.names[i]).cell(names[j]).cell(static_cast<long>(t)).cell(data.date(spec.p + t - 1));
        summary_cells(states, collect([&](const DrawRecord& r) { return r.states(t, j); }), kSummaryProbs);
        states.end_row();
      }
      for (Eigen::Index t = 1; t <= T; ++t) {
        double s = 0.0;
        for (const auto& r : recs) s += r.indicators(t - 1, j);
        pmp.cell(spec.names[i]).cell(names[j]).cell(static_cast<long>(t)).cell(data.date(spec.p + t - 1));
        pmp.cell(s / static_cast<double>(n));
        pmp.end_row();
      }
      auto param = [&](const char* what, auto&& f) {
        par.cell(spec.names[i]).cell(what).cell(names[j]);
        summary_cells(par, collect(f), kSummaryProbs);
        par.end_row();
      };
      param("beta0", [&](const DrawRecord& r) { return r.states(0, j); });
      param("tau2", [&](const DrawRecord& r) { return r.tau2[j]; });
      param("slab_var", [&](const DrawRecord& r) { return r.slab_var[j]; });
      if (threshold) {
        param("spike_var", [&](const DrawRecord& r) { return r.spike_var[j]; });
        param("threshold", [&](const DrawRecord& r) { return r.d[j]; });
      }
    }
    auto scalar = [&](const char* what, auto&& f) {
      par.cell(spec.names[i]).cell(what).cell(std::string());
      summary_cells(par, collect(f), kSummaryProbs);
      par.end_row();
    };
    scalar("lambda2", [](const DrawRecord& r) { return r.lambda2; });
    if (recs.front().stochastic_vol) {
      scalar("mu", [](const DrawRecord& r) { return r.mu; });
      scalar("rho", [](const DrawRecord& r) { return r.rho; });
      scalar("zeta", [](const DrawRecord& r) { return r.zeta; });
    } else {
      scalar("sigma2", [](const DrawRecord& r) { return r.sigma2; });
    }
    for (Eigen::Index t = 1; t <= T; ++t) {
      vol.cell(spec.names[i]).cell(static_cast<long>(t)).cell(data.date(spec.p + t - 1));
      summary_cells(vol, collect([&](const DrawRecord& r) { return r.h[t - 1]; }), kSummaryProbs);
      vol.end_row();
    }
  }
  atomic_write(dir / "states.csv", states.str());
  atomic_write(dir / "pmp.csv", pmp.str());
  atomic_write(dir / "log_variance.csv", vol.str());
  atomic_write(dir / "parameters.csv", par.str());
}

int cmd_fit(const Globals& g, std::ostream& out) {
  Stopwatch clock;
  const RunConfig c = load_run_config(g);
  const LoadedData data = load_data(c, g);
  const VarSpec spec = c.var_spec(data.names);
  const VarFit fit = fit_var(data.values, spec, c.sampler, g.threads);
  const fs::path dir = g.out_dir;
  write_fit_tables(dir, spec, fit.equations, data, c.sampler.model == ModelKind::Threshold);
  save_draws(dir / "draws.bin", fit);
  Json meta = metadata("fit", c, g);
  meta["variables"] = spec.names;
  meta["T"] = fit.data.front().time_points();
  meta["n_draws"] = fit.n_draws();
  meta["diagnostics"] = chain_diagnostics(fit.equations, spec, g.record_timing);
  meta["outputs"] = {"states.csv", "pmp.csv", "log_variance.csv", "parameters.csv", "draws.bin"};
  write_metadata(dir, meta, g, clock);
  out << (dir / "draws.bin").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// forecast

int cmd_forecast(const Globals& g, std::ostream& out) {
  Stopwatch clock;
  RunConfig c = load_run_config(g);
  const LoadedData data = load_data(c, g);
  const VarSpec spec = c.var_spec(data.names);
  ForecastOptions opt = c.forecast;
  if (!c.turning_point_variable.empty()) {
    const auto it = std::find(spec.names.begin(), spec.names.end(), c.turning_point_variable);
    if (it == spec.names.end()) throw InvalidArgument("forecast.turning_point_variable names no variable");
    opt.turning_point_variable = static_cast<int>(it - spec.names.begin());
  }
  const auto recs = expanding_window_evaluate(data.values, spec, c.sampler, opt);
  std::vector<ForecastRecord> bench;
  if (c.benchmark == "tvp") bench = expanding_window_evaluate(data.values, spec, tvp_benchmark(c.sampler), opt);
  const Eigen::MatrixXd ordered = spec.ordered(data.values);

  std::vector<std::string> header{"origin", "date", "lps"};
  for (const auto& n : spec.names) header.push_back("lps_" + n);
  for (const auto& n : spec.names) header.push_back("mean_" + n);
  for (const auto& n : spec.names) header.push_back("realized_" + n);
  if (!bench.empty()) {
    header.push_back("lps_benchmark");
    header.push_back("log_bf");
  }
  if (opt.turning_point_variable >= 0) {
    for (const char* h : {"p_down", "p_up", "down_defined", "up_defined"}) header.push_back(h);
  }
  CsvWriter w(header);
  double bf = 0.0;
  std::vector<double> pd, od, pu, ou;
  const std::vector<TurningPoint> tps = opt.turning_point_variable >= 0
                                            ? classify_turning_points(ordered.col(opt.turning_point_variable))
                                            : std::vector<TurningPoint>{};
  for (std::size_t h = 0; h < recs.size(); ++h) {
    const ForecastRecord& r = recs[h];
    w.cell(r.origin).cell(data.date(r.origin)).cell(r.lps);
    for (Eigen::Index v = 0; v < spec.m; ++v) w.cell(r.lps_marginal[v]);
    for (Eigen::Index v = 0; v < spec.m; ++v) w.cell(r.predictive_mean[v]);
    for (Eigen::Index v = 0; v < spec.m; ++v) w.cell(ordered(r.origin, v));
    if (!bench.empty()) {
      bf += r.lps - bench[h].lps;
      w.cell(bench[h].lps).cell(bf);
    }
    if (opt.turning_point_variable >= 0) {
      w.cell(r.p_down).cell(r.p_up).cell(static_cast<long>(r.down_defined)).cell(static_cast<long>(r.up_defined));
      const TurningPoint o = tps[static_cast<std::size_t>(r.origin)];
      if (r.down_defined) {
        pd.push_back(r.p_down);
        od.push_back(o == TurningPoint::Downward ? 1.0 : 0.0);
      }
      if (r.up_defined) {
        pu.push_back(r.p_up);
        ou.push_back(o == TurningPoint::Upward ? 1.0 : 0.0);
      }
    }
    w.end_row();
  }
  const fs::path dir = g.out_dir;
  atomic_write(dir / "lps.csv", w.str());
  Json meta = metadata("forecast", c, g);
  meta["variables"] = spec.names;
  double total = 0.0;
  for (const auto& r : recs) total += r.lps;
  meta["cumulative_lps"] = total;
  std::vector<std::string> outputs{"lps.csv"};
  if (!bench.empty()) meta["log_predictive_bayes_factor"] = bf;
  if (opt.turning_point_variable >= 0) {
    CsvWriter q({"event", "origins", "qps"});
    auto row = [&](const char* ev, const std::vector<double>& p, const std::vector<double>& o) {
      q.cell(ev).cell(static_cast<long>(p.size()));
      if (p.empty()) q.cell(std::string("nan"));
      else q.cell(qps(Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size())),
                     Eigen::Map<const Eigen::VectorXd>(o.data(), static_cast<Eigen::Index>(o.size()))));
      q.end_row();
    };
    row("downward", pd, od);
    row("upward", pu, ou);
    atomic_write(dir / "qps.csv", q.str());
    outputs.push_back("qps.csv");
  }
  meta["outputs"] = outputs;
  write_metadata(dir, meta, g, clock);
  out << (dir / "lps.csv").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// irf and diag: from a draws file or a fresh fit

struct Posterior {
  VarSpec spec;
  std::vector<PosteriorDraws> equations;
  std::vector<std::string> dates; // of the data rows, when known
};

Posterior obtain_posterior(const RunConfig& c, const Globals& g, const std::string& draws_path) {
  Posterior post;
  if (!draws_path.empty()) {
    StoredDraws s = load_draws(draws_path);
    post.spec = s.spec;
    post.equations = std::move(s.equations);
    if (post.equations.empty() || post.equations.front().size() == 0) throw InvalidArgument("draws file holds no draws");
    return post;
  }
  const LoadedData data = load_data(c, g);
  post.spec = c.var_spec(data.names);
  VarFit fit = fit_var(data.values, post.spec, c.sampler, g.threads);
  post.equations = std::move(fit.equations);
  post.dates = data.dates;
  return post;
}

std::string date_of(const Posterior& post, Eigen::Index t) {
  const Eigen::Index row = post.spec.p + t - 1;
  return row >= 0 && row < static_cast<Eigen::Index>(post.dates.size()) ? post.dates[static_cast<std::size_t>(row)]
                                                                          : std::string();
}

int cmd_irf(const Globals& g, const std::string& draws_path, std::ostream& out) {
  Stopwatch clock;
  const RunConfig c = load_run_config(g);
  const Posterior post = obtain_posterior(c, g, draws_path);
  const VarSpec& spec = post.spec;

  IrfRequest req;
  if (!c.irf.shock.empty()) {
    const auto it = std::find(spec.names.begin(), spec.names.end(), c.irf.shock);
    if (it == spec.names.end()) throw InvalidArgument("irf.shock names no variable");
    req.shock = static_cast<int>(it - spec.names.begin());
  }
  req.shock_size = c.irf.shock_size;
  req.horizon = c.irf.horizon;
  req.quantiles = c.irf.quantiles;
  const Eigen::Index T = post.equations.front().draws.get(0).h.size();
  for (int t : c.irf.times) {
    if (t < 1 || t > T) throw InvalidArgument("irf.times must lie in 1.." + std::to_string(T));
    req.times.push_back(t);
  }
  std::vector<VarDraw> draws;
  for (std::size_t k = 0; k < post.equations.front().size(); ++k) {
    VarDraw d;
    d.spec = spec;
    for (const auto& eq : post.equations) d.equations.push_back(eq.draws.get(k));
    draws.push_back(std::move(d));
  }

  const IrfSummary s = irf_summary(draws, req);
  std::vector<std::string> header{"t", "date", "horizon", "response"};
  for (double q : s.probs) header.push_back(quantile_name(q));
  CsvWriter w(header);
  for (std::size_t ti = 0; ti < s.times.size(); ++ti) {
    for (int h = 0; h < s.horizon; ++h) {
      for (int v = 0; v < spec.m; ++v) {
        w.cell(static_cast<long>(s.times[ti])).cell(date_of(post, s.times[ti])).cell(h).cell(spec.names[v]);
        for (const auto& qm : s.quantiles) w.cell(qm(static_cast<Eigen::Index>(ti) * s.horizon + h, v));
        w.end_row();
      }
    }
  }
  const fs::path dir = g.out_dir;
  atomic_write(dir / "irf.csv", w.str());
  std::vector<std::string> outputs{"irf.csv"};
  if (!c.irf.window.empty()) {
    if (c.irf.window[0] < 1 || c.irf.window[1] > T) throw InvalidArgument("irf.window must lie in 1.." + std::to_string(T));
    const auto wq = irf_window_quantiles(draws, req, c.irf.window[0], c.irf.window[1]);
    std::vector<std::string> wh{"from", "to", "horizon", "response"};
    for (double q : req.quantiles) wh.push_back(quantile_name(q));
    CsvWriter ww(wh);
    for (int h = 0; h < req.horizon; ++h) {
      for (int v = 0; v < spec.m; ++v) {
        ww.cell(c.irf.window[0]).cell(c.irf.window[1]).cell(h).cell(spec.names[v]);
        for (const auto& qm : wq) ww.cell(qm(h, v));
        ww.end_row();
      }
    }
    atomic_write(dir / "irf_window.csv", ww.str());
    outputs.push_back("irf_window.csv");
  }
  Json meta = metadata("irf", c, g);
  meta["variables"] = spec.names;
  meta["shock"] = spec.names[req.shock];
  meta["n_draws"] = draws.size();
  meta["explosive_fraction"] =
      static_cast<double>(s.explosive_draws) / static_cast<double>(draws.size() * s.times.size());
  meta["outputs"] = outputs;
  write_metadata(dir, meta, g, clock);
  out << (dir / "irf.csv").string() << "\n";
  return kExitOk;
}

int cmd_diag(const Globals& g, const std::string& draws_path, std::ostream& out) {
  Stopwatch clock;
  const RunConfig c = load_run_config(g);
  const Posterior post = obtain_posterior(c, g, draws_path);
  const BreakDiagnostic d = break_diagnostic(post.equations);
  std::vector<std::string> header{"t", "date"};
  for (const auto& n : post.spec.names) header.push_back(n);
  header.push_back("overall");
  CsvWriter w(header);
  for (Eigen::Index t = 0; t < d.overall.size(); ++t) {
    w.cell(static_cast<long>(t + 1)).cell(date_of(post, t + 1));
    for (Eigen::Index i = 0; i < d.per_equation.cols(); ++i) w.cell(d.per_equation(t, i));
    w.cell(d.overall[t]);
    w.end_row();
  }
  const fs::path dir = g.out_dir;
  atomic_write(dir / "diagnostic.csv", w.str());
  Json meta = metadata("diag", c, g);
  meta["variables"] = post.spec.names;
  meta["outputs"] = {"diagnostic.csv"};
  write_metadata(dir, meta, g, clock);
  out << (dir / "diagnostic.csv").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// validate

struct Check {
  std::string suite;
  std::string name;
  double statistic;
  double bound;
  bool passed() const { return std::abs(statistic) < bound; }
};

void geweke_suite(std::uint64_t seed, long successive, std::vector<Check>& checks) {
  struct Variant {
    const char* name;
    ModelKind model;
    VolMode vol;
  };
  for (const Variant& v : {Variant{"threshold-sv", ModelKind::Threshold, VolMode::Stochastic},
                           Variant{"threshold-homoscedastic", ModelKind::Threshold, VolMode::Homoscedastic},
                           Variant{"tvp-sv", ModelKind::Tvp, VolMode::Stochastic}}) {
    GewekeSetup setup;
    setup.seed = seed;
    setup.n_successive = successive;
    setup.n_marginal = std::max(1000L, successive / 2);
    setup.config = geweke_config();
    setup.config.model = v.model;
    setup.config.vol_mode = v.vol;
    const GewekeReport r = geweke_equation(setup);
    for (const auto& m : r.moments) checks.push_back({"geweke", std::string(v.name) + ":" + m.name, m.z, 4.0});
  }
}

void ffbs_suite(std::uint64_t seed, long n_draws, std::vector<Check>& checks) {
  Rng rng = Rng::stream(seed, 0xffb5, 0);
  for (int prob = 0; prob < 5; ++prob) {
    const Eigen::Index T = 10 + 10 * prob;
    const Eigen::Index K = 1 + prob % 3;
    StateSpaceProblem p;
    p.regressors.resize(T, K);
    p.observations.resize(T);
    p.obs_variance.resize(T);
    p.state_innovation_variance.resize(T, K);
    for (Eigen::Index t = 0; t < T; ++t) {
      for (Eigen::Index k = 0; k < K; ++k) {
        p.regressors(t, k) = rng.normal();
        p.state_innovation_variance(t, k) = 0.01 + 0.1 * rng.uniform();
      }
      p.observations[t] = rng.normal();
      p.obs_variance[t] = 0.2 + rng.uniform();
    }
    p.initial_mean = Eigen::VectorXd::Zero(K);
    p.initial_variance = Eigen::VectorXd::Ones(K);
    const FilterResult f = kalman_filter(p);
    const Eigen::MatrixXd smooth = kalman_smoother(p, f);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(T + 1, K);
    Eigen::MatrixXd sum2 = Eigen::MatrixXd::Zero(T + 1, K);
    for (long n = 0; n < n_draws; ++n) {
      const Eigen::MatrixXd d = ffbs_draw(p, f, rng).values;
      sum += d;
      sum2 += d.cwiseProduct(d);
    }
    const double nd = static_cast<double>(n_draws);
    const Eigen::MatrixXd mean = sum / nd;
    const Eigen::MatrixXd se = ((sum2 / nd - mean.cwiseProduct(mean)) / nd).cwiseSqrt();
    const double z = ((mean - smooth).cwiseQuotient(se)).cwiseAbs().maxCoeff();
    // Maximum over (T+1)K cells: Bonferroni-style bound.
    const double bound = normal_cquantile(0.0005 / static_cast<double>((T + 1) * K));
    checks.push_back({"ffbs", "problem" + std::to_string(prob + 1) + ":max|z|", z, bound});
  }
}

void gig_suite(std::uint64_t seed, long n_draws, std::vector<Check>& checks) {
  Rng rng = Rng::stream(seed, 0x616, 0);
  const std::vector<GigParams> grid = gig_reference_grid();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const GigMomentCheck c = check_gig_moments(grid[i], n_draws, rng);
    const std::string tag = "grid" + std::to_string(i + 1);
    checks.push_back({"gig", tag + ":mean_rel_err", c.mean_rel_err, c.tolerance});
    checks.push_back({"gig", tag + ":second_moment_rel_err", c.second_rel_err, c.tolerance});
  }
}

int cmd_validate(const Globals& g, const std::string& suite, long draws, std::ostream& out) {
  Stopwatch clock;
  const RunConfig c = load_run_config(g);
  const std::uint64_t seed = c.sampler.seed;
  std::vector<Check> checks;
  const bool all = suite == "all";
  if (!all && suite != "geweke" && suite != "ffbs" && suite != "gig") {
    throw InvalidArgument("--suite must be geweke, ffbs, gig or all");
  }
  if (all || suite == "geweke") geweke_suite(seed, draws > 0 ? draws : 200000, checks);
  if (all || suite == "ffbs") ffbs_suite(seed, draws > 0 ? draws : 50000, checks);
  if (all || suite == "gig") gig_suite(seed, draws > 0 ? draws : 200000, checks);

  CsvWriter w({"suite", "check", "statistic", "bound", "passed"});
  bool ok = true;
  for (const auto& ch : checks) {
    w.cell(ch.suite).cell(ch.name).cell(ch.statistic).cell(ch.bound).cell(static_cast<long>(ch.passed()));
    w.end_row();
    ok = ok && ch.passed();
  }
  const fs::path dir = g.out_dir;
  atomic_write(dir / "validate.csv", w.str());
  Json meta = metadata("validate", c, g);
  meta["suite"] = suite;
  meta["checks"] = checks.size();
  meta["passed"] = ok;
  meta["outputs"] = {"validate.csv"};
  write_metadata(dir, meta, g, clock);
  out << (ok ? "PASS" : "FAIL") << " " << suite << " (" << checks.size() << " checks)\n";
  if (!ok) throw ValidationFailed("validation suite '" + suite + "' failed; see validate.csv");
  return kExitOk;
}

void report(std::ostream& err, const std::string& kind, const std::string& message) {
  Json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  err << j.dump() << "\n";
}

} // namespace

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Threshold time-varying parameter VAR estimation, forecasting and structural analysis", "ttvp"};
  Globals g;
  app.add_option("--config", g.config_path, "TOML run configuration");
  app.add_option("--seed", g.seed, "overrides sampler.seed");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", g.out_dir, "directory for output files");
  app.add_option("--data", g.data_path, "input CSV (overrides data.input)");
  app.add_flag("--record-timing", g.record_timing, "write runtimes into metadata.json");
  app.require_subcommand(1);

  auto* simulate = app.add_subcommand("simulate", "simulate data from the [simulate] section");
  auto* fit = app.add_subcommand("fit", "estimate the model and write posterior summaries");
  auto* forecast = app.add_subcommand("forecast", "expanding-window one-step forecast evaluation");
  auto* irf = app.add_subcommand("irf", "time-varying impulse response quantiles");
  auto* diag = app.add_subcommand("diag", "structural break diagnostic");
  auto* validate = app.add_subcommand("validate", "sampler correctness suites");
  std::string irf_draws, diag_draws, suite = "all";
  long draws = 0;
  irf->add_option("--draws", irf_draws, "draws.bin written by fit (otherwise fit afresh)");
  diag->add_option("--draws", diag_draws, "draws.bin written by fit (otherwise fit afresh)");
  validate->add_option("--suite", suite, "geweke, ffbs, gig or all");
  validate->add_option("--draws", draws, "simulation size per check (0: default)");
  for (auto* sub : {simulate, fit, forecast, irf, diag, validate}) sub->fallthrough();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report(err, "usage", e.what());
    return kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(g, out);
    if (*fit) return cmd_fit(g, out);
    if (*forecast) return cmd_forecast(g, out);
    if (*irf) return cmd_irf(g, irf_draws, out);
    if (*diag) return cmd_diag(g, diag_draws, out);
    return cmd_validate(g, suite, draws, out);
  } catch (const ValidationFailed& e) {
    report(err, "validation_failed", e.what());
    return kExitValidationFailed;
  } catch (const InvalidArgument& e) {
    report(err, e.kind(), e.what());
    return kExitUsage;
  } catch (const IoError& e) {
    report(err, e.kind(), e.what());
    return kExitIo;
  } catch (const NumericalError& e) {
    report(err, e.kind(), e.what());
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    report(err, "io_error", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    report(err, "error", e.what());
    return kExitFailure;
  }
}

} // namespace ttvp
