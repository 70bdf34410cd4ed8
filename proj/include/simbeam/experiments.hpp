#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "simbeam/cascade.hpp"
#include "simbeam/geometry.hpp"
#include "simbeam/optimizer.hpp"
#include "simbeam/rate.hpp"

namespace simbeam {

// Schema violation; `path()` names the offending key, e.g. "system.N".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct SystemSection {
  int K = 5;
  int M = 5;
  int N = 49;
  int N_r = 7;
  int L = 3;
  std::vector<PhaseResolution> b = {PhaseResolution::discrete(1), PhaseResolution::discrete(2),
                                    PhaseResolution::discrete(3), PhaseResolution::continuous()};
  double f_carrier = 2e9;        // Hz
  double thickness_lambda = 5.0;  // stack thickness in wavelengths
  LatticeStep lattice = LatticeStep::half;
};

struct PowerSection {
  double P_max_dBm = 30.0;
  double sigma2_dBm = -80.0;
  // Filled from the dBm fields by load_config / finalize().
  double P_max_W = 1.0;
  double sigma2_W = 1e-11;
};

struct UsersSection {
  double r_in = 60.0;  // m
  double r_out = 80.0;
};

struct OptimizerSection {
  double power_tol = 1e-5;
  int power_max_iters = 20;
  double admm_tol = 1e-5;
  int admm_max_iters = 100;
  double beta_penalty = 0.0;  // <= 0: scaled trace rule
  double penalty_scale = 1.0;
  double outer_rel_tol = 1e-4;
  int max_iters = 50;
  bool early_stop = true;
  bool acceptance_guard = true;
  double max_filter_shrink = 256.0;
  int polish_passes = 10;
};

struct RunSection {
  std::vector<std::uint64_t> seeds;  // default 0..19
  int n_mc = 2000;
  std::string output_dir = "results";
  std::vector<int> L_list = {1, 2, 3, 4, 5, 6, 7};
  int timing_reps = 30;
  int threads = 1;

  RunSection();
};

struct ExperimentConfig {
  SystemSection system;
  PowerSection power;
  UsersSection users;
  OptimizerSection optimizer;
  RunSection run;

  // Recomputes the watt fields and checks cross-field invariants.
  void finalize();
  std::uint64_t hash() const;
  bool operator==(const ExperimentConfig&) const;
};

// JSON documents. Unknown keys are rejected; optimizer and run may be omitted.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string emit_config(const ExperimentConfig& config);

GeometryParams geometry_params(const ExperimentConfig& config, int L);
OptimizerConfig optimizer_config(const ExperimentConfig& config, PhaseResolution res);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string format_number(double v);
std::string to_csv(const CsvTable& table);
// Writes a sibling temp file then renames it over `path`.
void emit_csv(const CsvTable& table, const std::filesystem::path& path);

struct PhaseTimes {
  std::int64_t channel_ns = 0;
  std::int64_t optimize_ns = 0;
  std::int64_t evaluate_ns = 0;
};

struct RunRecord {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  int L = 0;
  PhaseResolution resolution;
  std::vector<HistoryRow> history;
  RateReport report;
  PhaseTimes times;

  int outer_iterations() const { return history.empty() ? 0 : history.back().iter; }
};

// One optimizer run on the channel drawn for `seed`. n_mc = 0 skips the
// Monte Carlo evaluation.
RunRecord run_single(const ExperimentConfig& config, std::uint64_t seed, int L, PhaseResolution res, int n_mc);

struct StudyOutput {
  CsvTable summary;
  CsvTable runs;
  std::vector<RunRecord> records;
};

// Mean/median rate per (b, iteration) for iterations 1..max_iters; runs that
// stopped early are padded with their final rate.
StudyOutput run_convergence_study(const ExperimentConfig& config);
StudyOutput run_layer_sweep(const ExperimentConfig& config, const std::vector<int>& L_list);

struct TimingPoint {
  int L = 0;
  int reps = 0;
  double mean_runtime_s = 0.0;
  double stddev_runtime_s = 0.0;
  double mean_iter_s = 0.0;
  double stddev_iter_s = 0.0;
  double mean_outer_iters = 0.0;
  double rate = 0.0;
  bool rate_stable = true;  // identical rate across repetitions
};

struct TimingOutput {
  CsvTable table;
  std::vector<TimingPoint> points;
};

// Repeats the first seed `run.timing_reps` times per L at the first listed
// resolution, serially so the timings do not compete for cores.
TimingOutput run_timing_study(const ExperimentConfig& config, const std::vector<int>& L_list);

struct OracleCheckRow {
  std::uint64_t seed = 0;
  double proposed = 0.0;       // proposed stack, best power on the oracle's grid
  double proposed_free = 0.0;  // proposed stack and power as optimized
  double oracle = 0.0;
  std::uint64_t evaluated = 0;
};

struct OracleCheckOutput {
  CsvTable table;
  std::vector<OracleCheckRow> rows;
  double fraction_within(double ratio) const;
};

// Proposed stack against the brute-force optimum over stacks and the default
// power grid, both scored on that grid, per seed, at the config's first
// listed resolution.
OracleCheckOutput run_oracle_check(const ExperimentConfig& config);

}  // namespace simbeam
