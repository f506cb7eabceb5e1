#include "ttvp/config.hpp"

#include "ttvp/errors.hpp"
#include "ttvp/io.hpp"

#include <toml.hpp>

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace ttvp {

namespace {

std::string model_name(ModelKind k) { return k == ModelKind::Tvp ? "tvp" : "threshold"; }
std::string state_update_name(StateUpdate u) { return u == StateUpdate::Literal ? "literal" : "exact"; }
std::string threshold_update_name(ThresholdUpdate u) { return u == ThresholdUpdate::Griddy ? "griddy" : "exact"; }
std::string vol_name(VolMode v) { return v == VolMode::Homoscedastic ? "homoscedastic" : "stochastic"; }
std::string kernel_name(SvKernel k) { return k == SvKernel::RandomWalk ? "random-walk" : "mixture"; }
std::string law_name(ForwardLaw l) { return l == ForwardLaw::ProposeSlab ? "propose-slab" : "exact"; }

template <class E>
E pick(const std::string& key, const std::string& value, std::initializer_list<std::pair<const char*, E>> options) {
  std::string allowed;
  for (const auto& [name, e] : options) {
    if (value == name) return e;
    allowed += (allowed.empty() ? "" : ", ") + std::string(name);
  }
  throw InvalidArgument("config: " + key + " must be one of " + allowed + " (got '" + value + "')");
}

/// Typed reader for one section that remembers which keys were consumed.
class Section {
public:
  Section(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

  void get(const char* key, int& out) {
    if (const auto* n = find(key)) {
      const auto v = n->value<std::int64_t>();
      if (!n->is_integer() || !v) fail(key, "an integer");
      out = static_cast<int>(*v);
    }
  }
  void get(const char* key, std::uint64_t& out) {
    if (const auto* n = find(key)) {
      const auto v = n->as_integer();
      if (!v || v->get() < 0) fail(key, "a non-negative integer");
      out = static_cast<std::uint64_t>(v->get());
    }
  }
  void get(const char* key, std::size_t& out, bool) {
    std::uint64_t v = out;
    get(key, v);
    out = static_cast<std::size_t>(v);
  }
  void get(const char* key, double& out) {
    if (const auto* n = find(key)) {
      if (n->is_floating_point()) out = n->as_floating_point()->get();
      else if (n->is_integer()) out = static_cast<double>(n->as_integer()->get());
      else fail(key, "a number");
    }
  }
  void get(const char* key, bool& out) {
    if (const auto* n = find(key)) {
      if (!n->is_boolean()) fail(key, "a boolean");
      out = n->as_boolean()->get();
    }
  }
  void get(const char* key, std::string& out) {
    if (const auto* n = find(key)) {
      if (!n->is_string()) fail(key, "a string");
      out = n->as_string()->get();
    }
  }
  template <class T>
  void get(const char* key, std::vector<T>& out) {
    if (const auto* n = find(key)) {
      const auto* arr = n->as_array();
      if (!arr) fail(key, "an array");
      out.clear();
      for (const auto& el : *arr) {
        if constexpr (std::is_same_v<T, std::string>) {
          if (!el.is_string()) fail(key, "an array of strings");
          out.push_back(el.as_string()->get());
        } else if constexpr (std::is_same_v<T, int>) {
          if (!el.is_integer()) fail(key, "an array of integers");
          out.push_back(static_cast<int>(el.as_integer()->get()));
        } else {
          if (el.is_floating_point()) out.push_back(el.as_floating_point()->get());
          else if (el.is_integer()) out.push_back(static_cast<double>(el.as_integer()->get()));
          else fail(key, "an array of numbers");
        }
      }
    }
  }
  template <class E>
  void get_enum(const char* key, E& out, std::initializer_list<std::pair<const char*, E>> options) {
    std::string s;
    get(key, s);
    if (!s.empty()) out = pick(name_ + "." + key, s, options);
  }

  void reject_unknown() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_) {
      if (!used_.count(std::string(k.str()))) {
        throw InvalidArgument("config: unknown key '" + std::string(k.str()) + "' in [" + name_ + "]");
      }
    }
  }

private:
  const toml::table* table_;
  std::string name_;
  std::set<std::string> used_;

  const toml::node* find(const char* key) {
    used_.insert(key);
    return table_ ? table_->get(key) : nullptr;
  }
  [[noreturn]] void fail(const char* key, const char* what) const {
    throw InvalidArgument("config: " + name_ + "." + key + " must be " + what);
  }
};

} // namespace

void RunConfig::validate() const {
  if (p < 1) throw InvalidArgument("config: model.p must be at least 1");
  sampler.validate();
  if (forecast.holdout < 1) throw InvalidArgument("config: forecast.holdout must be at least 1");
  if (forecast.refit_every < 1) throw InvalidArgument("config: forecast.refit_every must be at least 1");
  if (forecast.warm_burn < 0) throw InvalidArgument("config: forecast.warm_burn must be non-negative");
  if (benchmark != "none" && benchmark != "tvp") throw InvalidArgument("config: forecast.benchmark must be none or tvp");
  if (irf.horizon < 1) throw InvalidArgument("config: irf.horizon must be at least 1");
  if (!(std::isfinite(irf.shock_size) && irf.shock_size != 0.0)) throw InvalidArgument("config: irf.shock_size must be non-zero");
  if (!irf.window.empty() && (irf.window.size() != 2 || irf.window[0] > irf.window[1])) {
    throw InvalidArgument("config: irf.window must be [from, to] with from <= to");
  }
  for (double q : irf.quantiles) {
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("config: irf.quantiles must lie in [0, 1]");
  }
  simulate.validate();
}

VarSpec RunConfig::var_spec(const std::vector<std::string>& names) const {
  VarSpec s;
  s.m = static_cast<int>(names.size());
  s.p = p;
  s.intercept = intercept;
  if (!ordering.empty()) {
    if (ordering.size() != names.size()) throw InvalidArgument("config: model.ordering must list every variable once");
    for (const auto& o : ordering) {
      const auto it = std::find(names.begin(), names.end(), o);
      if (it == names.end()) throw InvalidArgument("config: model.ordering names unknown variable '" + o + "'");
      s.ordering.push_back(static_cast<int>(it - names.begin()));
    }
    s.names = ordering;
  } else {
    s.names = names;
  }
  s.validate();
  return s;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config: " << e.description() << " at line " << e.source().begin.line << ", column "
        << e.source().begin.column;
    throw InvalidArgument(msg.str());
  }
  static const std::set<std::string> sections{"data", "model", "sampler", "forecast", "irf", "simulate"};
  for (const auto& [k, v] : root) {
    if (!sections.count(std::string(k.str()))) throw InvalidArgument("config: unknown section [" + std::string(k.str()) + "]");
    if (!v.is_table()) throw InvalidArgument("config: '" + std::string(k.str()) + "' must be a section");
  }
  auto table = [&](const char* name) { return root.get_as<toml::table>(name); };

  RunConfig c;
  c.base_dir = base_dir;

  Section data(table("data"), "data");
  std::string input;
  data.get("input", input);
  if (!input.empty()) c.input = input;
  data.get("variables", c.variables);
  data.reject_unknown();

  SamplerConfig& s = c.sampler;
  Section model(table("model"), "model");
  model.get("p", c.p);
  model.get("intercept", c.intercept);
  model.get("ordering", c.ordering);
  model.get_enum("kind", s.model, {{"threshold", ModelKind::Threshold}, {"tvp", ModelKind::Tvp}});
  model.get_enum("volatility", s.vol_mode, {{"stochastic", VolMode::Stochastic}, {"homoscedastic", VolMode::Homoscedastic}});
  model.reject_unknown();

  Section sm(table("sampler"), "sampler");
  sm.get("n_draws", s.n_draws);
  sm.get("n_burn", s.n_burn);
  sm.get("thin", s.thin);
  sm.get("seed", s.seed);
  sm.get_enum("state_update", s.state_update, {{"exact", StateUpdate::Exact}, {"literal", StateUpdate::Literal}});
  sm.get("a", s.a);
  sm.get("b0", s.b0);
  sm.get("b1", s.b1);
  sm.get("r0", s.r0);
  sm.get("r1", s.r1);
  sm.get("xi", s.xi);
  sm.get("prior_lo_mult", s.prior_lo_mult);
  sm.get("prior_hi_mult", s.prior_hi_mult);
  sm.get("grid_size", s.grid_size);
  sm.get_enum("threshold_update", s.threshold_update,
              {{"exact", ThresholdUpdate::Exact}, {"griddy", ThresholdUpdate::Griddy}});
  sm.get_enum("sv_kernel", s.sv_kernel, {{"mixture", SvKernel::AuxiliaryMixture}, {"random-walk", SvKernel::RandomWalk}});
  sm.get("mu_mean", s.mu_mean);
  sm.get("mu_var", s.mu_var);
  sm.get("a_rho", s.a_rho);
  sm.get("b_rho", s.b_rho);
  sm.get("B_zeta", s.B_zeta);
  sm.get("c0", s.c0);
  sm.get("c1", s.c1);
  sm.get("spill_bytes", s.spill_bytes, true);
  std::string spill_dir;
  sm.get("spill_dir", spill_dir);
  if (!spill_dir.empty()) s.spill_dir = spill_dir;
  sm.reject_unknown();

  Section fc(table("forecast"), "forecast");
  fc.get("holdout", c.forecast.holdout);
  fc.get("refit_every", c.forecast.refit_every);
  fc.get("warm_burn", c.forecast.warm_burn);
  fc.get_enum("law", c.forecast.law, {{"exact", ForwardLaw::Exact}, {"propose-slab", ForwardLaw::ProposeSlab}});
  fc.get("turning_point_variable", c.turning_point_variable);
  fc.get("benchmark", c.benchmark);
  fc.reject_unknown();

  Section irf(table("irf"), "irf");
  irf.get("shock", c.irf.shock);
  irf.get("shock_size", c.irf.shock_size);
  irf.get("horizon", c.irf.horizon);
  irf.get("times", c.irf.times);
  irf.get("window", c.irf.window);
  irf.get("quantiles", c.irf.quantiles);
  irf.reject_unknown();

  Section sim(table("simulate"), "simulate");
  DgpSpec& d = c.simulate;
  std::string kind;
  sim.get("kind", kind);
  if (!kind.empty()) d.kind = parse_dgp_kind(kind);
  sim.get("T", d.T);
  sim.get("break_probability", d.break_probability);
  sim.get("break_times", d.break_times);
  sim.get("sigma_obs", d.sigma_obs);
  sim.get("state_sd", d.state_sd);
  sim.get("m", d.m);
  sim.get("p", d.p);
  sim.get("intercept", d.intercept);
  sim.get("breaking", d.breaking);
  sim.reject_unknown();

  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  RunConfig c = parse_config(read_file(path), path.parent_path());
  return c;
}

namespace {

template <class T>
toml::array to_array(const std::vector<T>& v) {
  toml::array a;
  for (const auto& x : v) {
    if constexpr (std::is_same_v<T, int>) a.push_back(static_cast<std::int64_t>(x));
    else a.push_back(x);
  }
  return a;
}

toml::table to_table(const RunConfig& c) {
  const SamplerConfig& s = c.sampler;
  toml::table data{{"input", c.input.string()}, {"variables", to_array(c.variables)}};
  toml::table model{{"p", c.p},
                    {"intercept", c.intercept},
                    {"ordering", to_array(c.ordering)},
                    {"kind", model_name(s.model)},
                    {"volatility", vol_name(s.vol_mode)}};
  toml::table sampler{{"n_draws", s.n_draws},
                      {"n_burn", s.n_burn},
                      {"thin", s.thin},
                      {"seed", static_cast<std::int64_t>(s.seed)},
                      {"state_update", state_update_name(s.state_update)},
                      {"a", s.a},
                      {"b0", s.b0},
                      {"b1", s.b1},
                      {"r0", s.r0},
                      {"r1", s.r1},
                      {"xi", s.xi},
                      {"prior_lo_mult", s.prior_lo_mult},
                      {"prior_hi_mult", s.prior_hi_mult},
                      {"grid_size", s.grid_size},
                      {"threshold_update", threshold_update_name(s.threshold_update)},
                      {"sv_kernel", kernel_name(s.sv_kernel)},
                      {"mu_mean", s.mu_mean},
                      {"mu_var", s.mu_var},
                      {"a_rho", s.a_rho},
                      {"b_rho", s.b_rho},
                      {"B_zeta", s.B_zeta},
                      {"c0", s.c0},
                      {"c1", s.c1},
                      {"spill_bytes", static_cast<std::int64_t>(s.spill_bytes)},
                      {"spill_dir", s.spill_dir.string()}};
  toml::table forecast{{"holdout", c.forecast.holdout},
                       {"refit_every", c.forecast.refit_every},
                       {"warm_burn", c.forecast.warm_burn},
                       {"law", law_name(c.forecast.law)},
                       {"turning_point_variable", c.turning_point_variable},
                       {"benchmark", c.benchmark}};
  toml::table irf{{"shock", c.irf.shock},
                  {"shock_size", c.irf.shock_size},
                  {"horizon", c.irf.horizon},
                  {"times", to_array(c.irf.times)},
                  {"window", to_array(c.irf.window)},
                  {"quantiles", to_array(c.irf.quantiles)}};
  const DgpSpec& d = c.simulate;
  toml::table simulate{{"kind", to_string(d.kind)},
                       {"T", d.T},
                       {"break_probability", d.break_probability},
                       {"break_times", to_array(d.break_times)},
                       {"sigma_obs", d.sigma_obs},
                       {"state_sd", d.state_sd},
                       {"m", d.m},
                       {"p", d.p},
                       {"intercept", d.intercept},
                       {"breaking", d.breaking}};
  return toml::table{{"data", data},       {"model", model}, {"sampler", sampler},
                     {"forecast", forecast}, {"irf", irf},     {"simulate", simulate}};
}

} // namespace

std::string to_toml(const RunConfig& c) {
  std::ostringstream out;
  out << to_table(c) << '\n';
  return out.str();
}

std::string to_json(const RunConfig& c) {
  std::ostringstream out;
  out << toml::json_formatter{to_table(c)};
  return out.str();
}

SamplerConfig tvp_benchmark(const SamplerConfig& config) {
  SamplerConfig b = config;
  b.model = ModelKind::Tvp;
  return b;
}

} // namespace ttvp
