#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "trustdecay/error.hpp"
#include "trustdecay/harness/config.hpp"
#include "trustdecay/harness/csv.hpp"
#include "trustdecay/harness/experiment.hpp"
#include "trustdecay/harness/parallel.hpp"

using namespace trustdecay;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("td_unit_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TRUSTDECAY_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kStationary = R"(# stationary Bernoulli experts
seed=7
env.kind=stationary
env.T=300
env.means=0.3,0.5,0.6
learners=eg,tdmd
learner.tdmd.tilt=constant
learner.tdmd.lambda=0.2
env.stress=0.1,0,-0.1
metrics.outlier_ks=0,3
)";

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = Config::parse(kStationary);
  CHECK(cfg.get_size("env.T") == 300);
  CHECK(cfg.get_doubles("env.means") == std::vector<double>{0.3, 0.5, 0.6});
  CHECK(cfg.get_string("missing", "x") == "x");
  CHECK_THROWS_AS(cfg.get_size("missing"), ConfigError);
  CHECK_THROWS_AS(Config::parse("a=1\na=2"), ConfigError);
  CHECK_THROWS_AS(Config::parse("no equals sign"), ConfigError);
  CHECK_THROWS_AS(Config::parse("x=abc").get_double("x"), ConfigError);
  try {
    Config::parse("env.T=-4").get_size("env.T");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "env.T");
  }
  CHECK(Config::parse("m=1,2;3,4").get_matrix("m") == std::vector<std::vector<double>>{{1, 2}, {3, 4}});
}

TEST_CASE("config round-trip") {
  const auto a = Config::parse(kStationary);
  const auto b = Config::parse(a.serialize());
  CHECK(a.entries() == b.entries());
  CHECK(b.serialize() == a.serialize());
}

TEST_CASE("experiment config round-trips through key=value text") {
  const auto demo = demo_two_expert(50, 3);
  const auto text = experiment_to_config(demo).serialize();
  const auto back = experiment_from_config(Config::parse(text));
  CHECK(experiment_to_config(back).serialize() == text);
}

TEST_CASE("unused keys are reported") {
  auto cfg = Config::parse(std::string(kStationary) + "env.typo=1\n");
  experiment_from_config(cfg);
  CHECK(cfg.unused_keys() == std::vector<std::string>{"env.typo"});
}

TEST_CASE("config errors carry the field path") {
  auto bad = [](const std::string& extra) {
    try {
      experiment_from_config(Config::parse(std::string(kStationary) + extra));
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  CHECK(bad("learner.eg.eta=-1\n") == "learner.eg");
  auto empty = Config::parse(kStationary);
  empty.set("learners", "");
  CHECK_THROWS_AS(experiment_from_config(empty), ConfigError);
  auto dup = Config::parse(kStationary);
  dup.set("learners", "eg,eg");
  CHECK_THROWS_AS(experiment_from_config(dup), ConfigError);
  auto kind = Config::parse(kStationary);
  kind.set("env.kind", "martian");
  CHECK_THROWS_AS(experiment_from_config(kind), ConfigError);
}

TEST_CASE("trace CSV round-trip") {
  auto exp = experiment_from_config(Config::parse(kStationary));
  const auto trace = generate(exp.seeded_environment());
  std::stringstream buf;
  write_trace_csv(buf, trace);
  const std::string header = buf.str().substr(0, buf.str().find('\n'));
  CHECK(header == "t,loss_0,loss_1,loss_2,stress_0,stress_1,stress_2,epsilon,switch_flag,regime_id");
  CHECK(read_trace_csv(buf) == trace_rows(trace));
  std::stringstream broken("t,loss_0\n1,0\n");
  CHECK_THROWS(read_trace_csv(broken));
}

TEST_CASE("run_experiment writes every file and is deterministic") {
  auto exp = demo_two_expert(30, 1);
  const auto a = scratch("a"), b = scratch("b");
  exp.output_dir = a;
  const auto r = run_experiment(exp);
  exp.output_dir = b;
  run_experiment(exp);
  for (const char* f : {"trace.csv", "run_eg.csv", "run_fixed_share.csv", "run_tdmd.csv", "report_eg.json",
                        "report_fixed_share.json", "report_tdmd.json"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(slurp(a / "run_tdmd.csv").rfind("t,instant_regret,cumulative_regret,lambda_t,epsilon_hat\n", 0) == 0);
  int flags = 0;
  for (const auto& round : r.trace.rounds) flags += round.switch_flag;
  CHECK(flags == 10);
  for (const auto& rep : r.reports) CHECK(rep.per_switch_tails.size() == 10);
}

TEST_CASE("results do not depend on the thread count") {
  auto exp = experiment_from_config(Config::parse(kStationary));
  ::setenv("TRUST_DECAY_THREADS", "1", 1);
  CHECK(thread_budget() == 1);
  const auto one = run_experiment(exp);
  ::setenv("TRUST_DECAY_THREADS", "4", 1);
  const auto four = run_experiment(exp);
  ::unsetenv("TRUST_DECAY_THREADS");
  for (std::size_t i = 0; i < one.runs.size(); ++i) {
    CHECK(one.runs[i].cumulative_regret() == four.runs[i].cumulative_regret());
  }
}

TEST_CASE("sweep") {
  const auto cfg = Config::parse(kStationary);
  const auto exp = experiment_from_config(cfg);
  SUBCASE("singleton grid matches run_experiment") {
    const auto rows = sweep(exp, SweepSpec{"T", {300}, 1});
    const auto direct = run_experiment(exp);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].mean_regret == direct.runs[0].cumulative_regret());
    CHECK(rows[1].mean_regret == direct.runs[1].cumulative_regret());
  }
  SUBCASE("unknown parameter") {
    auto bad = cfg;
    bad.set("sweep.parameter", "colour");
    bad.set("sweep.grid", "1");
    CHECK_THROWS_AS(sweep_from_config(bad), ConfigError);
  }
  SUBCASE("empty grid") { CHECK_THROWS_AS(sweep(exp, SweepSpec{"T", {}, 1}), ConfigError); }
}

TEST_CASE("csv writers") {
  std::ostringstream f, b;
  write_fragility_csv(f, {{0.1, 0.25}});
  CHECK(f.str() == "epsilon,fragility\n0.10000000000000001,0.25\n");
  write_bandwidth_csv(b, {{0.1, Bandwidth{0, true}}, {0.2, Bandwidth{0.5, false}}});
  CHECK(b.str() == "delta,bandwidth\n0.10000000000000001,inf\n0.20000000000000001,0.5\n");
}

TEST_CASE("cli exit codes") {
  const auto dir = scratch("cli");
  std::ofstream(dir / "good.cfg") << kStationary;
  std::ofstream(dir / "bad.cfg") << "env.kind=stationary\nenv.T=ten\nlearners=eg\n";
  std::ofstream(dir / "frag.cfg") << "fragility.probabilities=0.5,0.5\nfragility.loss_table=0,1;1,0\n";
  const std::string out = " --out " + (dir / "out").string();
  CHECK(run_cli("simulate --config " + (dir / "good.cfg").string() + out) == 0);
  CHECK(fs::exists(dir / "out" / "report_tdmd.json"));
  CHECK(run_cli("simulate --config " + (dir / "bad.cfg").string() + out) == 2);
  CHECK(run_cli("simulate --config " + (dir / "missing.cfg").string() + out) == 2);
  CHECK(run_cli("demo --seed 4" + out) == 0);
  CHECK(run_cli("fragility --config " + (dir / "frag.cfg").string() + out) == 0);
  CHECK(fs::exists(dir / "out" / "bandwidth.csv"));
  CHECK(run_cli("teleport") == 2);
}

TEST_CASE("parallel_for rethrows the first failure") {
  CHECK_THROWS_AS(parallel_for(50, [](std::size_t i) {
                    if (i == 17) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
}
