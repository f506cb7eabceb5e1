#include "ttvp/cli.hpp"
#include "ttvp/config.hpp"
#include "ttvp/errors.hpp"
#include "ttvp/io.hpp"
#include "ttvp/simulate.hpp"
#include "ttvp/structural_analysis.hpp"

#include "stats_util.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace ttvp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ttvp-test-" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli_run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

} // namespace

TEST_CASE("univariate processes without breaks or with one break") {
  Rng rng(1);
  DgpSpec s;
  s.T = 100;
  s.break_probability = 0.0;
  for (DgpKind kind : {DgpKind::UnivariateRandomBreaks, DgpKind::UnivariateThreshold}) {
    s.kind = kind;
    const UnivariateSample u = simulate_univariate(s, rng);
    CHECK(u.states.isZero());
    CHECK(u.indicators.sum() == 0);
    CHECK(testutil::moments(std::vector<double>(u.data.col(0).begin(), u.data.col(0).end())).var ==
          doctest::Approx(1e-4).epsilon(0.35));
    CHECK(u.data.col(1).cwiseAbs().maxCoeff() <= 1.0);
  }
  s.kind = DgpKind::UnivariateRandomBreaks;
  s.break_times = {50};
  const UnivariateSample u = simulate_univariate(s, rng);
  CHECK(u.indicators.sum() == 1);
  CHECK(u.indicators[49] == 1);
  CHECK(u.states[49] == 0.0);
  CHECK(u.states[50] != 0.0);
  CHECK(u.states[100] == u.states[50]);
}

TEST_CASE("break frequency matches the requested probability") {
  for (DgpKind kind : {DgpKind::UnivariateRandomBreaks, DgpKind::UnivariateThreshold}) {
    for (double p : {kFewBreaks, kModerateBreaks, kManyBreaks}) {
      DgpSpec s;
      s.kind = kind;
      s.T = 10;
      s.break_probability = p;
      Rng rng(2);
      long breaks = 0;
      const long reps = 10000;
      for (long r = 0; r < reps; ++r) breaks += simulate_univariate(s, rng).indicators.sum();
      const double n = static_cast<double>(reps * s.T);
      CAPTURE(p);
      CHECK(std::abs(breaks / n - p) < 3.0 * std::sqrt(p * (1 - p) / n));
    }
  }
}

TEST_CASE("constant-parameter VAR has the Yule-Walker autocovariances") {
  DgpSpec s;
  s.kind = DgpKind::VarTtvp;
  s.m = 2;
  s.T = 100000;
  s.break_probability = 0.0;
  s.sigma_obs = 1.0;
  Rng rng(3);
  const VarSample v = simulate_var(s, rng);
  CHECK(v.indicators[0].sum() + v.indicators[1].sum() == 0);
  std::vector<Eigen::VectorXd> coef{v.states[0].row(0).transpose(), v.states[1].row(0).transpose()};
  const TimeSlice slice = make_time_slice(v.spec, coef, v.log_h);
  const Eigen::Matrix2d A = slice.V() * slice.lags[0];
  const Eigen::Matrix2d Sigma = slice.covariance();
  Eigen::Matrix2d G0 = Sigma;
  for (int i = 0; i < 2000; ++i) G0 = A * G0 * A.transpose() + Sigma;
  const Eigen::Matrix2d G1 = A * G0;

  const Eigen::MatrixXd y = v.data;
  const Eigen::RowVector2d mean = y.colwise().mean();
  const Eigen::MatrixXd c = y.rowwise() - mean;
  const Eigen::Index n = c.rows();
  const Eigen::Matrix2d S0 = c.transpose() * c / static_cast<double>(n);
  const Eigen::Matrix2d S1 = c.bottomRows(n - 1).transpose() * c.topRows(n - 1) / static_cast<double>(n - 1);
  CHECK((S0 - G0).cwiseAbs().maxCoeff() < 0.05 * G0.cwiseAbs().maxCoeff());
  CHECK((S1 - G1).cwiseAbs().maxCoeff() < 0.05 * G0.cwiseAbs().maxCoeff());
}

TEST_CASE("multivariate breaks and determinism") {
  DgpSpec s;
  s.kind = DgpKind::VarTtvp;
  s.T = 60;
  s.break_times = {30};
  Rng a(4), b(4);
  const VarSample x = simulate_var(s, a), y = simulate_var(s, b);
  CHECK(x.data == y.data);
  CHECK(x.data.rows() == 61);
  for (int i = 0; i < 3; ++i) {
    CHECK(x.states[i] == y.states[i]);
    CHECK(x.indicators[i].sum() == 3); // the three lag coefficients break once
    CHECK(x.indicators[i].row(29).sum() == 3);
    CHECK(x.states[i].row(29) == x.states[i].row(0));
    CHECK(x.states[i](30, 0) == x.states[i](29, 0)); // intercepts stay put
  }
  for (Eigen::Index t = 0; t <= 60; t += 10) {
    std::vector<Eigen::VectorXd> coef;
    for (int i = 0; i < 3; ++i) coef.push_back(x.states[i].row(t).transpose());
    CHECK(companion_spectral_radius(make_time_slice(x.spec, coef, x.log_h)) < 1.0);
  }
  s.breaking = "some";
  CHECK_THROWS_AS(simulate_var(s, a), InvalidArgument);
  CHECK(parse_dgp_kind(to_string(DgpKind::UnivariateThreshold)) == DgpKind::UnivariateThreshold);
  CHECK_THROWS_AS(parse_dgp_kind("walk"), InvalidArgument);
}

TEST_CASE("CSV round trip") {
  Rng rng(5);
  DataTable t;
  t.names = {"gdp", "infl"};
  t.dates = {"2001-01-01", "2001-04-01", "2001-07-01"};
  t.values.resize(3, 2);
  for (Eigen::Index i = 0; i < t.values.size(); ++i) t.values(i) = std::ldexp(rng.normal(), static_cast<int>(i) * 40 - 100);
  t.values(0, 0) = 0.1;
  const DataTable back = parse_csv(to_csv(t));
  CHECK(back.names == t.names);
  CHECK(back.dates == t.dates);
  CHECK(back.values == t.values);
  CHECK(back.column("infl") == 1);
  CHECK_THROWS_AS(back.column("rate"), InvalidArgument);
  CHECK(format_double(0.1) == "0.1");

  DataTable plain = t;
  plain.dates.clear();
  CHECK(parse_csv(to_csv(plain)).dates.empty());
  CHECK(parse_csv("y,x\n1,2\n3,4\n").values == Eigen::Matrix2d{{1, 2}, {3, 4}});
  CHECK(parse_csv("date,y\n2020-01-01,1.5\n").dates.size() == 1);

  CHECK_THROWS_AS(parse_csv("y,x\n1,\n"), IoError);
  CHECK_THROWS_AS(parse_csv("y,x\n1,NA\n"), IoError);
  CHECK_THROWS_AS(parse_csv("y,x\n1,2,3\n"), IoError);
  CHECK_THROWS_AS(parse_csv("date,y\n01/02/2020,1\n"), IoError);
  CHECK_THROWS_AS(parse_csv(""), IoError);
}

TEST_CASE("configuration round trip and validation") {
  const std::string text = R"(
[data]
input = "data.csv"
variables = ["a", "b"]

[model]
p = 2
ordering = ["b", "a"]
volatility = "homoscedastic"

[sampler]
n_draws = 300
n_burn = 100
xi = 1e-4
threshold_update = "griddy"
grid_size = 80

[forecast]
holdout = 12
refit_every = 3
benchmark = "tvp"

[irf]
shock = "b"
horizon = 6
window = [2, 9]
)";
  const RunConfig c = parse_config(text, "/base");
  CHECK(c.input == fs::path("data.csv"));
  CHECK(c.base_dir == fs::path("/base"));
  CHECK(c.p == 2);
  CHECK(c.sampler.n_draws == 300);
  CHECK(c.sampler.xi == 1e-4);
  CHECK(c.sampler.threshold_update == ThresholdUpdate::Griddy);
  CHECK(c.sampler.vol_mode == VolMode::Homoscedastic);
  CHECK(c.forecast.refit_every == 3);
  CHECK(c.irf.window == std::vector<int>{2, 9});
  const VarSpec spec = c.var_spec({"a", "b"});
  CHECK(spec.ordering == std::vector<int>{1, 0});

  const std::string canon = to_toml(c);
  CHECK(to_toml(parse_config(canon, "/base")) == canon);
  CHECK(nlohmann::json::parse(to_json(c))["sampler"]["grid_size"] == 80);

  CHECK_THROWS_AS(parse_config("[sampler]\nn_drawz = 5\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_config("[plots]\nx = 1\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_config("[sampler]\nthin = 0\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_config("[sampler]\nstate_update = \"fast\"\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_config("[sampler]\nn_draws = \"many\"\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_config("[model\n"), InvalidArgument);

  const SamplerConfig tvp = tvp_benchmark(c.sampler);
  CHECK(tvp.model == ModelKind::Tvp);
  CHECK(tvp.a == c.sampler.a);
}

TEST_CASE("stored draws round trip") {
  DgpSpec s;
  s.kind = DgpKind::VarTtvp;
  s.m = 2;
  s.T = 40;
  Rng rng(6);
  const VarSample v = simulate_var(s, rng);
  VarSpec spec = v.spec;
  spec.ordering = {1, 0};
  SamplerConfig c;
  c.n_draws = 30;
  c.n_burn = 10;
  const VarFit fit = fit_var(v.data, spec, c);
  const fs::path dir = scratch("draws");
  save_draws(dir / "draws.bin", fit);
  const StoredDraws back = load_draws(dir / "draws.bin");
  CHECK(back.spec.m == 2);
  CHECK(back.spec.ordering == spec.ordering);
  CHECK(back.spec.names == spec.names);
  CHECK(back.T == 40);
  REQUIRE(back.n_draws() == fit.n_draws());
  for (std::size_t k = 0; k < fit.n_draws(); ++k) {
    const VarDraw a = fit.draw(k), b = back.draw(k);
    for (int i = 0; i < 2; ++i) {
      CHECK(a.equations[i].states == b.equations[i].states);
      CHECK(a.equations[i].indicators == b.equations[i].indicators);
      CHECK(a.equations[i].h == b.equations[i].h);
      CHECK(a.equations[i].zeta == b.equations[i].zeta);
    }
  }
  atomic_write(dir / "junk.bin", "not a draws file");
  CHECK_THROWS_AS(load_draws(dir / "junk.bin"), IoError);
  std::string bytes = slurp(dir / "draws.bin");
  bytes.resize(bytes.size() - 8);
  atomic_write(dir / "short.bin", bytes);
  CHECK_THROWS_AS(load_draws(dir / "short.bin"), IoError);
}

TEST_CASE("command line pipeline") {
  const fs::path dir = scratch("cli");
  {
    std::ofstream cfg(dir / "run.toml");
    cfg << "[simulate]\nkind = \"var-ttvp\"\nT = 80\nm = 2\nsigma_obs = 0.5\nbreak_times = [40]\nstate_sd = 0.3\n\n"
           "[data]\ninput = \"a/data.csv\"\n\n[sampler]\nn_draws = 120\nn_burn = 40\n\n"
           "[forecast]\nholdout = 2\nrefit_every = 2\nwarm_burn = 20\nturning_point_variable = \"y1\"\nbenchmark = \"tvp\"\n\n"
           "[irf]\nhorizon = 5\ntimes = [10, 60]\nwindow = [1, 40]\n";
  }
  const std::string config = (dir / "run.toml").string();
  auto run_all = [&](const std::string& out) {
    std::vector<Run> runs;
    runs.push_back(cli({"--config", config, "--seed", "42", "--out-dir", (dir / out).string(), "simulate"}));
    const std::string data = (dir / out / "data.csv").string();
    for (const char* cmd : {"fit", "forecast"}) {
      runs.push_back(cli({"--config", config, "--seed", "42", "--data", data, "--out-dir", (dir / out).string(), cmd}));
    }
    const std::string draws = (dir / out / "draws.bin").string();
    runs.push_back(cli({"--config", config, "--seed", "42", "--data", data, "--out-dir", (dir / out).string(), "irf",
                        "--draws", draws}));
    runs.push_back(cli({"--config", config, "--seed", "42", "--data", data, "--out-dir", (dir / out).string(), "diag",
                        "--draws", draws}));
    return runs;
  };
  const auto first = run_all("a");
  for (const auto& r : first) {
    CAPTURE(r.err);
    CHECK(r.code == kExitOk);
  }
  for (const char* f : {"data.csv", "truth.csv", "states.csv", "pmp.csv", "log_variance.csv", "parameters.csv",
                        "draws.bin", "lps.csv", "qps.csv", "irf.csv", "irf_window.csv", "diagnostic.csv",
                        "metadata.json"}) {
    CAPTURE(f);
    CHECK(fs::exists(dir / "a" / f));
  }
  CHECK(read_csv(dir / "a" / "data.csv").values.rows() == 81);
  CHECK(first_line(dir / "a" / "irf.csv") == "t,date,horizon,response,q5,q16,q50,q84,q95");
  const auto meta = nlohmann::json::parse(slurp(dir / "a" / "metadata.json"));
  CHECK(meta["command"] == "diag");
  CHECK(meta["seed"] == 42);
  CHECK_FALSE(meta.contains("runtime_seconds"));

  run_all("b");
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    CAPTURE(entry.path().filename().string());
    CHECK(slurp(entry.path()) == slurp(dir / "b" / entry.path().filename()));
  }
}

TEST_CASE("command line errors are machine readable") {
  const fs::path dir = scratch("errors");
  auto kind = [](const Run& r) { return nlohmann::json::parse(r.err)["error"]["kind"].get<std::string>(); };

  Run r = cli({"explode"});
  CHECK(r.code == kExitUsage);
  CHECK(nlohmann::json::parse(r.err).contains("error"));

  r = cli({"--out-dir", dir.string(), "--data", (dir / "missing.csv").string(), "fit"});
  CHECK(r.code == kExitIo);
  CHECK(kind(r) == "io_error");

  {
    std::ofstream bad(dir / "bad.toml");
    bad << "[sampler]\nburn = 3\n";
  }
  r = cli({"--config", (dir / "bad.toml").string(), "--out-dir", dir.string(), "simulate"});
  CHECK(r.code == kExitUsage);
  CHECK(kind(r) == "invalid_argument");

  r = cli({"--out-dir", dir.string(), "validate", "--suite", "everything"});
  CHECK(r.code == kExitUsage);
}

TEST_CASE("validation suite from the command line") {
  const fs::path dir = scratch("validate");
  const Run r = cli({"--out-dir", dir.string(), "validate", "--suite", "gig"});
  CAPTURE(r.err);
  CHECK(r.code == kExitOk);
  CHECK(r.out.rfind("PASS", 0) == 0);
  const std::string csv = slurp(dir / "validate.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 25);
  CHECK(first_line(dir / "validate.csv") == "suite,check,statistic,bound,passed");
}
