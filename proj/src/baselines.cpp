#include "simbeam/baselines.hpp"

#include <cmath>

#include "simbeam/rng.hpp"

namespace simbeam {

BaselineResult random_phase_baseline(const ChannelModel& model, const BaselineConfig& config, std::uint64_t seed) {
  const PhaseStack stack = PhaseStack::random(model.L(), model.N(), config.resolution, mix64(seed ^ streams::kBaseline));
  const auto g = effective_vectors(stack, model);
  const PowerAlloc power = PowerAlloc::uniform(model.K(), config.P_max);
  return {"random_phase", surrogate_rate(g, model, power).surrogate_sum_rate, config.config_hash, seed};
}

std::vector<rvec> default_power_grid(int K, double P_max) {
  if (K < 1 || !(P_max > 0.0)) throw std::invalid_argument("default_power_grid: need K >= 1 and P_max > 0");
  std::vector<rvec> grid;
  grid.push_back(rvec::Constant(K, std::sqrt(P_max / K)));
  CounterRng rng(0, streams::kPowerGrid + static_cast<std::uint64_t>(K));
  for (int s = 0; s < 8; ++s) {
    rvec share(K);
    for (int k = 0; k < K; ++k) share[k] = -std::log(rng.uniform_open0());
    share /= share.sum();
    grid.push_back((share * P_max).cwiseSqrt());
  }
  return grid;
}

double best_rate_on_grid(const PhaseStack& stack, const ChannelModel& model, const std::vector<rvec>& power_grid,
                         double P_max) {
  const auto g = effective_vectors(stack, model);
  double best = -1.0;
  for (const auto& p : power_grid) best = std::max(best, surrogate_rate(g, model, {p, P_max}).surrogate_sum_rate);
  return best;
}

OracleResult exhaustive_oracle(const ChannelModel& model, const BaselineConfig& config,
                               const std::vector<rvec>& power_grid) {
  const PhaseResolution res = config.resolution;
  if (res.is_continuous()) throw std::invalid_argument("exhaustive_oracle: needs a discrete phase grid");
  const int L = model.L();
  const int N = model.N();
  const long long total_bits = static_cast<long long>(res.bits) * N * L;
  if (total_bits > kOracleMaxBits) throw std::invalid_argument("exhaustive_oracle: search space exceeds 2^12 stacks");
  if (power_grid.empty()) throw std::invalid_argument("exhaustive_oracle: empty power grid");
  for (const auto& p : power_grid)
    if (p.size() != model.K()) throw std::invalid_argument("exhaustive_oracle: power grid entry has wrong size");

  const std::uint64_t count = std::uint64_t{1} << total_bits;
  const int levels = res.levels();
  OracleResult best;
  best.rate = -1.0;
  PhaseStack stack(L, N, res);
  std::vector<int> idx(static_cast<std::size_t>(L) * N);
  for (std::uint64_t code = 0; code < count; ++code) {
    // Digit 0 (most significant) is atom 0 of layer 0, so increasing codes
    // are lexicographic in the flattened index vector.
    std::uint64_t rest = code;
    for (std::size_t pos = idx.size(); pos-- > 0;) {
      idx[pos] = static_cast<int>(rest % levels);
      rest /= levels;
    }
    for (int l = 0; l < L; ++l)
      stack.set_layer(l, std::span<const int>(idx.data() + static_cast<std::size_t>(l) * N, N));
    const auto g = effective_vectors(stack, model);
    for (const auto& p : power_grid) {
      const PowerAlloc power{p, config.P_max};
      const double r = surrogate_rate(g, model, power).surrogate_sum_rate;
      ++best.evaluated;
      if (r > best.rate) {
        best.rate = r;
        best.stack = stack;
        best.power = power;
      }
    }
  }
  return best;
}

}  // namespace simbeam
