#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "simbeam/experiments.hpp"

using namespace simbeam;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({
  "system": {"K": 2, "M": 2, "N": 4, "N_r": 2, "L": 2, "b": 1},
  "power": {"P_max_dBm": 30, "sigma2_dBm": -80},
  "users": {"r_in": 60, "r_out": 80}
})";

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n') + 1); }

std::string golden(const char* name) { return read_file(fs::path(SIMBEAM_GOLDEN_DIR) / name); }

fs::path scratch_dir(const char* name) {
  const fs::path d = fs::temp_directory_path() / ("simbeam_test_" + std::string(name));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Tiny study configuration that runs in well under a second per job.
ExperimentConfig small_config() {
  ExperimentConfig c = parse_config(kMinimal);
  c.system.b = {PhaseResolution::discrete(1), PhaseResolution::continuous()};
  c.optimizer.max_iters = 4;
  c.run.seeds = {0, 1, 2};
  c.run.n_mc = 20;
  c.run.timing_reps = 2;
  c.finalize();
  return c;
}

std::string config_error_path(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("defaults round-trip through the emitted document") {
  ExperimentConfig c;
  c.finalize();
  const ExperimentConfig back = parse_config(emit_config(c));
  CHECK(back == c);
  CHECK(back.hash() == c.hash());
  CHECK(emit_config(back) == emit_config(c));
}

TEST_CASE("minimal document fills in the defaults") {
  const ExperimentConfig c = parse_config(kMinimal);
  CHECK(c.system.K == 2);
  CHECK(c.system.b.size() == 1);
  CHECK(c.system.b[0] == PhaseResolution::discrete(1));
  CHECK(c.power.P_max_W == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(c.power.sigma2_W == doctest::Approx(1e-11).epsilon(1e-12));
  CHECK(c.run.seeds.size() == 20);
  CHECK(c.optimizer.max_iters == 50);
  CHECK(c.system.lattice == LatticeStep::half);
}

TEST_CASE("resolution lists accept bits and continuous markers") {
  std::string text = kMinimal;
  text.replace(text.find("\"b\": 1"), 6, R"("b": [1, 3, "continuous", "inf"])");
  const ExperimentConfig c = parse_config(text);
  REQUIRE(c.system.b.size() == 4);
  CHECK(c.system.b[1] == PhaseResolution::discrete(3));
  CHECK(c.system.b[2].is_continuous());
  CHECK(c.system.b[3].is_continuous());
}

TEST_CASE("schema errors name the offending path") {
  std::string missing = kMinimal;
  missing.replace(missing.find("\"N\": 4, "), 8, "");
  CHECK(config_error_path(missing) == "system.N");

  std::string unknown = kMinimal;
  unknown.replace(unknown.find("\"L\": 2"), 6, "\"L\": 2, \"Q\": 1");
  CHECK(config_error_path(unknown) == "system.Q");

  std::string mismatch = kMinimal;
  mismatch.replace(mismatch.find("\"M\": 2"), 6, "\"M\": 3");
  CHECK(config_error_path(mismatch) == "system.M");

  std::string badb = kMinimal;
  badb.replace(badb.find("\"b\": 1"), 6, "\"b\": [1, 0]");
  CHECK(config_error_path(badb) == "system.b[1]");

  std::string divides = kMinimal;
  divides.replace(divides.find("\"N_r\": 2"), 8, "\"N_r\": 3");
  CHECK(config_error_path(divides) == "system.N_r");

  CHECK(config_error_path(R"({"system": {}, "power": {}, "users": {}, "extra": {}})") == "extra");
  CHECK(config_error_path("{not json") == "<document>");
  CHECK(config_error_path(std::string(kMinimal).replace(1, 0, R"("run": {"L_list": [3, 2]},)")) == "run.L_list");
}

TEST_CASE("missing file is a config error") {
  CHECK_THROWS_AS(load_config("/nonexistent/simbeam.json"), ConfigError);
}

TEST_CASE("numbers are emitted in shortest round-trip form") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1e-11) == "1e-11");
  CHECK(format_number(3.0) == "3");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("CSV quoting and atomic writes") {
  CsvTable t{{"a", "b"}, {{"1", "x,y"}, {"2", "say \"hi\""}}};
  CHECK(to_csv(t) == "a,b\n1,\"x,y\"\n2,\"say \"\"hi\"\"\"\n");
  const fs::path dir = scratch_dir("csv");
  emit_csv(t, dir / "sub" / "t.csv");
  CHECK(read_file(dir / "sub" / "t.csv") == to_csv(t));
  CHECK_FALSE(fs::exists(dir / "sub" / "t.csv.tmp"));
  t.rows.push_back({"only one"});
  CHECK_THROWS_AS(to_csv(t), std::logic_error);
  fs::remove_all(dir);
}

TEST_CASE("convergence study shape, headers and reproducibility") {
  const ExperimentConfig c = small_config();
  const StudyOutput a = run_convergence_study(c);
  CHECK(a.summary.rows.size() == 4 * 2);
  CHECK(a.runs.rows.size() == 3 * 2);
  const fs::path dir = scratch_dir("convergence");
  emit_csv(a.summary, dir / "convergence.csv");
  emit_csv(a.runs, dir / "convergence_runs.csv");
  CHECK(first_line(read_file(dir / "convergence.csv")) == golden("convergence_header.csv"));
  CHECK(first_line(read_file(dir / "convergence_runs.csv")) == golden("runs_header.csv"));
  for (const auto& row : a.runs.rows) CHECK(row[9] == "0");

  ExperimentConfig threaded = c;
  threaded.run.threads = 3;
  const StudyOutput b = run_convergence_study(threaded);
  CHECK(to_csv(b.summary) == to_csv(a.summary));
  fs::remove_all(dir);
}

TEST_CASE("convergence rows are non-decreasing per resolution") {
  const StudyOutput out = run_convergence_study(small_config());
  for (std::size_t i = 1; i < out.summary.rows.size(); ++i) {
    if (out.summary.rows[i][0] != out.summary.rows[i - 1][0]) continue;
    CHECK(std::stod(out.summary.rows[i][2]) >= std::stod(out.summary.rows[i - 1][2]) - 1e-9);
  }
}

TEST_CASE("layer sweep shape and headers") {
  const ExperimentConfig c = small_config();
  const StudyOutput out = run_layer_sweep(c, {1, 3});
  CHECK(out.summary.rows.size() == 2 * 2);
  CHECK(out.runs.rows.size() == 3 * 2 * 2);
  CHECK(out.summary.rows[0][0] == "1");
  CHECK(out.summary.rows[3][0] == "3");
  CHECK(out.summary.rows[3][1] == "inf");
  for (const auto& row : out.runs.rows) CHECK(row[9] == "20");
  const fs::path dir = scratch_dir("layers");
  emit_csv(out.summary, dir / "layers.csv");
  CHECK(first_line(read_file(dir / "layers.csv")) == golden("layers_header.csv"));
  fs::remove_all(dir);

  const StudyOutput one = run_layer_sweep(c, {1});
  CHECK(one.summary.rows.size() == 2);
  CHECK_THROWS_AS(run_layer_sweep(c, {2, 2}), std::invalid_argument);
  CHECK_THROWS_AS(run_layer_sweep(c, {}), std::invalid_argument);
}

TEST_CASE("timing study shape") {
  const ExperimentConfig c = small_config();
  const TimingOutput out = run_timing_study(c, {1, 2});
  REQUIRE(out.points.size() == 2);
  CHECK(out.table.rows.size() == 2);
  for (const auto& p : out.points) {
    CHECK(p.reps == 2);
    CHECK(p.mean_runtime_s > 0.0);
    CHECK(p.mean_iter_s >= 0.0);
    CHECK(p.rate_stable);
  }
  const fs::path dir = scratch_dir("timing");
  emit_csv(out.table, dir / "timing.csv");
  CHECK(first_line(read_file(dir / "timing.csv")) == golden("timing_header.csv"));
  fs::remove_all(dir);
}

TEST_CASE("oracle check at toy scale") {
  ExperimentConfig c = small_config();
  c.system.N = 2;
  c.system.N_r = 1;
  c.system.L = 1;
  c.optimizer.max_iters = 50;
  c.finalize();
  const OracleCheckOutput out = run_oracle_check(c);
  REQUIRE(out.rows.size() == 3);
  for (const auto& r : out.rows) {
    CHECK(r.proposed <= r.oracle);
    CHECK(r.evaluated == 4 * 9);
  }
  CHECK(out.fraction_within(0.0) == 1.0);
  const fs::path dir = scratch_dir("oracle");
  emit_csv(out.table, dir / "oracle.csv");
  CHECK(first_line(read_file(dir / "oracle.csv")) == golden("oracle_header.csv"));
  fs::remove_all(dir);

  c.system.N = 16;
  c.system.N_r = 4;
  c.finalize();
  CHECK_THROWS_AS(run_oracle_check(c), ConfigError);
  c = small_config();
  c.system.b = {PhaseResolution::continuous()};
  CHECK_THROWS_AS(run_oracle_check(c), ConfigError);
}

TEST_CASE("single runs are reproducible and tagged") {
  const ExperimentConfig c = small_config();
  const RunRecord a = run_single(c, 1, 2, PhaseResolution::discrete(1), 50);
  const RunRecord b = run_single(c, 1, 2, PhaseResolution::discrete(1), 50);
  CHECK(a.report.surrogate_sum_rate == b.report.surrogate_sum_rate);
  CHECK(a.report.mc_rate == b.report.mc_rate);
  CHECK(a.config_hash == c.hash());
  CHECK(a.report.n_mc == 50);
  CHECK(a.outer_iterations() <= 4);
}
