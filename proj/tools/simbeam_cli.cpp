// simbeam: experiment front-end.
//
//   simbeam convergence  --config cfg.json [--seeds 0:20] [--out results/convergence.csv]
//   simbeam layers       --config cfg.json [--layers 1,2,3]
//   simbeam timing       --config cfg.json [--layers 2,6]
//   simbeam oracle-check --config toy.json
//   simbeam config       (prints the default configuration)
//
// Exit codes: 0 ok, 2 bad config or arguments, 3 numeric failure, 1 anything else.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "simbeam/experiments.hpp"

namespace fs = std::filesystem;
using namespace simbeam;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size() || s.front() == '-') throw ConfigError(what, "not a non-negative integer: " + s);
  return v;
}

// "7", "1,4,9" or "a:b" (half-open range).
std::vector<std::uint64_t> parse_seeds(const std::string& text, const std::string& what) {
  std::vector<std::uint64_t> out;
  if (auto colon = text.find(':'); colon != std::string::npos) {
    const auto lo = parse_u64(text.substr(0, colon), what);
    const auto hi = parse_u64(text.substr(colon + 1), what);
    if (hi <= lo) throw ConfigError(what, "empty seed range " + text);
    for (auto s = lo; s < hi; ++s) out.push_back(s);
    return out;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string::npos ? text.size() : comma;
    out.push_back(parse_u64(text.substr(start, end - start), what));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

struct Common {
  std::string config_path;
  std::string seeds;
  std::string out;
  int threads = 0;
};

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg;
  if (!c.config_path.empty()) {
    cfg = load_config(c.config_path);
  } else {
    cfg.finalize();
  }
  // Precedence: --seeds, then SIMBEAM_SEED, then the file.
  if (!c.seeds.empty()) {
    cfg.run.seeds = parse_seeds(c.seeds, "--seeds");
  } else if (const char* env = std::getenv("SIMBEAM_SEED"); env != nullptr && *env != '\0') {
    cfg.run.seeds = parse_seeds(env, "SIMBEAM_SEED");
  }
  if (c.threads > 0) cfg.run.threads = c.threads;
  cfg.finalize();
  return cfg;
}

fs::path output_path(const Common& c, const ExperimentConfig& cfg, const char* verb) {
  if (!c.out.empty()) return c.out;
  return fs::path(cfg.run.output_dir) / (std::string(verb) + ".csv");
}

fs::path runs_path(const fs::path& main) {
  fs::path p = main;
  p.replace_filename(main.stem().string() + "_runs" + main.extension().string());
  return p;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "JSON experiment config (defaults if omitted)");
  sub->add_option("--seeds,--seed", c.seeds, "seed list: 7, 1,4,9 or lo:hi");
  sub->add_option("--out", c.out, "output CSV path");
  sub->add_option("--threads", c.threads, "worker threads (overrides run.threads)")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SIM-aided multiuser MISO beamforming experiments"};
  app.require_subcommand(1);

  Common common;
  std::string layers;
  auto* conv = app.add_subcommand("convergence", "rate per outer iteration, one series per resolution");
  auto* lay = app.add_subcommand("layers", "final rate against the number of layers");
  auto* tim = app.add_subcommand("timing", "wall-clock time per optimization and per outer iteration");
  auto* orc = app.add_subcommand("oracle-check", "proposed rate against exhaustive search on a toy system");
  auto* cfg_cmd = app.add_subcommand("config", "print the default configuration");
  for (auto* sub : {conv, lay, tim, orc}) add_common(sub, common);
  for (auto* sub : {lay, tim}) sub->add_option("--layers", layers, "layer counts, e.g. 1,2,3 (overrides run.L_list)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (cfg_cmd->parsed()) {
      ExperimentConfig d;
      d.finalize();
      std::cout << emit_config(d);
      return 0;
    }

    const ExperimentConfig cfg = resolve(common);
    std::vector<int> L_list = cfg.run.L_list;
    if (!layers.empty()) {
      L_list.clear();
      for (auto v : parse_seeds(layers, "--layers")) L_list.push_back(static_cast<int>(v));
    }

    if (conv->parsed()) {
      const auto out = run_convergence_study(cfg);
      const auto path = output_path(common, cfg, "convergence");
      emit_csv(out.summary, path);
      emit_csv(out.runs, runs_path(path));
      std::cerr << "wrote " << path.string() << " (" << out.summary.rows.size() << " rows)\n";
    } else if (lay->parsed()) {
      const auto out = run_layer_sweep(cfg, L_list);
      const auto path = output_path(common, cfg, "layers");
      emit_csv(out.summary, path);
      emit_csv(out.runs, runs_path(path));
      std::cerr << "wrote " << path.string() << " (" << out.summary.rows.size() << " rows)\n";
    } else if (tim->parsed()) {
      const auto out = run_timing_study(cfg, L_list);
      const auto path = output_path(common, cfg, "timing");
      emit_csv(out.table, path);
      std::cerr << "wrote " << path.string() << "\n";
    } else if (orc->parsed()) {
      const auto out = run_oracle_check(cfg);
      const auto path = output_path(common, cfg, "oracle_check");
      emit_csv(out.table, path);
      std::cerr << "wrote " << path.string() << "; proposed >= 0.9 x oracle on " << out.fraction_within(0.9) * 100.0
                << "% of seeds\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
