#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simbeam/cascade.hpp"
#include "simbeam/channel.hpp"
#include "simbeam/rate.hpp"

namespace simbeam {

struct BaselineConfig {
  double P_max = 1.0;
  PhaseResolution resolution = PhaseResolution::discrete(1);
  std::uint64_t config_hash = 0;
};

struct BaselineResult {
  std::string name;
  double surrogate_rate = 0.0;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

// Uniformly random phases (on the grid, or on [0, 2pi) when continuous)
// with the power split evenly.
BaselineResult random_phase_baseline(const ChannelModel& model, const BaselineConfig& config, std::uint64_t seed);

// The even split followed by 8 fixed Dirichlet(1) splits of P_max.
std::vector<rvec> default_power_grid(int K, double P_max);

struct OracleResult {
  double rate = 0.0;
  PhaseStack stack;
  PowerAlloc power;
  std::uint64_t evaluated = 0;
};

inline constexpr int kOracleMaxBits = 12;

// Brute force over every discrete stack and every amplitude vector in
// `power_grid`. Stacks are enumerated in lexicographic index order and the
// first maximizer wins. Rejects searches above 2^12 stacks.
OracleResult exhaustive_oracle(const ChannelModel& model, const BaselineConfig& config,
                               const std::vector<rvec>& power_grid);

// Best rate of a fixed stack over a power grid.
double best_rate_on_grid(const PhaseStack& stack, const ChannelModel& model, const std::vector<rvec>& power_grid,
                         double P_max);

}  // namespace simbeam
