#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "simbeam/baselines.hpp"
#include "simbeam/optimizer.hpp"
#include "support.hpp"

using namespace simbeam;

TEST_CASE("random baseline is deterministic and uses the even split") {
  const ChannelModel m = testing::make_model(9, 3, 2, 3, 4);
  const BaselineConfig c{1.0, PhaseResolution::discrete(2), 0xabc};
  const BaselineResult a = random_phase_baseline(m, c, 5);
  const BaselineResult b = random_phase_baseline(m, c, 5);
  CHECK(a.surrogate_rate == b.surrogate_rate);
  CHECK(a.config_hash == 0xabc);
  CHECK(a.seed == 5);
  CHECK(a.surrogate_rate > 0.0);
  CHECK(random_phase_baseline(m, c, 6).surrogate_rate != a.surrogate_rate);
  const BaselineResult cont = random_phase_baseline(m, {1.0, PhaseResolution::continuous(), 0}, 5);
  CHECK(std::isfinite(cont.surrogate_rate));
  CHECK(cont.surrogate_rate > 0.0);
}

TEST_CASE("power grid entries spend the whole budget") {
  for (int K = 1; K <= 5; ++K) {
    const auto grid = default_power_grid(K, 2.5);
    REQUIRE(grid.size() == 9);
    for (const auto& p : grid) {
      CHECK(p.size() == K);
      CHECK(p.squaredNorm() == doctest::Approx(2.5).epsilon(1e-12));
      CHECK(p.minCoeff() >= 0.0);
    }
    for (int k = 0; k < K; ++k) CHECK(grid[0][k] == doctest::Approx(std::sqrt(2.5 / K)));
    CHECK(default_power_grid(K, 2.5) == grid);
  }
  CHECK_THROWS_AS(default_power_grid(0, 1.0), std::invalid_argument);
}

TEST_CASE("single atom, single user: every phase gives the same rate") {
  const ChannelModel m = testing::make_model(1, 1, 1, 1, 2);
  const auto grid = default_power_grid(1, 1.0);
  const OracleResult o = exhaustive_oracle(m, {1.0, PhaseResolution::discrete(1), 0}, grid);
  PhaseStack s(1, 1, PhaseResolution::discrete(1));
  for (int t : {0, 1}) {
    s.set_layer(0, std::vector<int>{t});
    CHECK(best_rate_on_grid(s, m, grid, 1.0) == doctest::Approx(o.rate).epsilon(1e-14));
  }
  CHECK(o.evaluated == 2 * grid.size());
}

TEST_CASE("oracle is the exact maximum over its enumeration") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ChannelModel m = testing::make_model(2, 1, 2, 2, seed);
    const auto grid = default_power_grid(2, 1.0);
    const OracleResult o = exhaustive_oracle(m, {1.0, PhaseResolution::discrete(1), 0}, grid);
    CHECK(o.evaluated == 16 * grid.size());
    double best = -1;
    PhaseStack s(2, 2, PhaseResolution::discrete(1));
    for (int code = 0; code < 16; ++code) {
      s.set_layer(0, std::vector<int>{(code >> 3) & 1, (code >> 2) & 1});
      s.set_layer(1, std::vector<int>{(code >> 1) & 1, code & 1});
      best = std::max(best, best_rate_on_grid(s, m, grid, 1.0));
    }
    CHECK(o.rate == best);
    CHECK(best_rate_on_grid(o.stack, m, grid, 1.0) == o.rate);
    CHECK(surrogate_rate(effective_vectors(o.stack, m), m, o.power).surrogate_sum_rate == o.rate);
  }
}

TEST_CASE("oracle dominates the optimizer on the same power grid") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ChannelModel m = testing::make_model(2, 1, 1, 2, seed);
    const auto grid = default_power_grid(2, 1.0);
    const OracleResult o = exhaustive_oracle(m, {1.0, PhaseResolution::discrete(1), 0}, grid);
    OptimizerConfig c;
    const AlgorithmResult r = run_algorithm1(m, c, seed);
    CHECK(best_rate_on_grid(r.state.stack, m, grid, 1.0) <= o.rate);
  }
}

TEST_CASE("oversized or continuous searches are rejected") {
  const auto grid = default_power_grid(2, 1.0);
  const ChannelModel big = testing::make_model(9, 3, 2, 2, 1);
  CHECK_THROWS_AS(exhaustive_oracle(big, {1.0, PhaseResolution::discrete(1), 0}, grid), std::invalid_argument);
  const ChannelModel m = testing::make_model(2, 1, 1, 2, 1);
  CHECK_THROWS_AS(exhaustive_oracle(m, {1.0, PhaseResolution::continuous(), 0}, grid), std::invalid_argument);
  CHECK_THROWS_AS(exhaustive_oracle(m, {1.0, PhaseResolution::discrete(1), 0}, {}), std::invalid_argument);
  CHECK_THROWS_AS(exhaustive_oracle(m, {1.0, PhaseResolution::discrete(1), 0}, default_power_grid(3, 1.0)),
                  std::invalid_argument);
  // 12 bits is the largest allowed search.
  const ChannelModel edge = testing::make_model(6, 2, 1, 2, 1);
  CHECK_NOTHROW(exhaustive_oracle(edge, {1.0, PhaseResolution::discrete(2), 0}, {grid[0]}));
}
