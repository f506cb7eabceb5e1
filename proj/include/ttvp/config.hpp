#ifndef TTVP_CONFIG_HPP
#define TTVP_CONFIG_HPP

#include "ttvp/equation_sampler.hpp"
#include "ttvp/forecast_eval.hpp"
#include "ttvp/simulate.hpp"
#include "ttvp/var_model.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ttvp {

struct IrfConfig {
  std::string shock; // variable name; empty = first in the recursive order
  double shock_size = 1.0;
  int horizon = 20;
  std::vector<int> times; // empty = every period
  std::vector<int> window; // empty or {from, to}
  std::vector<double> quantiles{0.05, 0.16, 0.5, 0.84, 0.95};
};

/// Contents of a run configuration file. Relative paths are resolved against
/// the directory of the file.
struct RunConfig {
  // [data]
  std::filesystem::path input;
  std::vector<std::string> variables; // empty = every column

  // [model] and [sampler]
  int p = 1;
  bool intercept = true;
  std::vector<std::string> ordering; // empty = data order
  SamplerConfig sampler;

  // [forecast]
  ForecastOptions forecast;
  std::string turning_point_variable;
  std::string benchmark = "none"; // "none" or "tvp"

  IrfConfig irf;
  DgpSpec simulate;

  std::filesystem::path base_dir;

  void validate() const;
  /// VarSpec for data whose columns are `names` (already restricted to `variables`).
  VarSpec var_spec(const std::vector<std::string>& names) const;
};

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Canonical TOML: every key, sections and keys in a fixed order.
std::string to_toml(const RunConfig& config);
/// Same content as a JSON object.
std::string to_json(const RunConfig& config);

/// Copy of the sampler configuration with the threshold switched off and the
/// rest unchanged: the random-walk TVP benchmark.
SamplerConfig tvp_benchmark(const SamplerConfig& config);

} // namespace ttvp

#endif
