#pragma once

#include <cstdint>

#include "simbeam/channel.hpp"
#include "simbeam/geometry.hpp"
#include "simbeam/rng.hpp"

namespace testing {

inline simbeam::ChannelModel make_model(int N, int N_r, int L, int K, std::uint64_t seed,
                                        double sigma2 = 1e-11) {
  simbeam::GeometryParams gp;
  gp.M = K;
  gp.N = N;
  gp.N_r = N_r;
  gp.L = L;
  return simbeam::build_channel_model(simbeam::build_geometry(gp),
                                      simbeam::assign_users(seed, K, {60.0, 80.0}, sigma2));
}

// Small random instance: N in {1..8} with a divisor N_r, L in 1..4, K in 1..4.
inline simbeam::ChannelModel random_small_model(std::uint64_t seed, int max_N = 8, int max_L = 4, int max_K = 4) {
  simbeam::CounterRng rng(seed, 0x7e57);
  const int N = 1 + static_cast<int>(rng.next_u64() % max_N);
  int N_r = 1 + static_cast<int>(rng.next_u64() % N);
  while (N % N_r != 0) --N_r;
  const int L = 1 + static_cast<int>(rng.next_u64() % max_L);
  const int K = 1 + static_cast<int>(rng.next_u64() % max_K);
  return make_model(N, N_r, L, K, seed);
}

}  // namespace testing
