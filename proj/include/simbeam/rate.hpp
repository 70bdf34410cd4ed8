#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "simbeam/cascade.hpp"
#include "simbeam/channel.hpp"
#include "simbeam/types.hpp"

namespace simbeam {

// Amplitudes p_k (sqrt W) under the budget sum p_k^2 <= P_max.
struct PowerAlloc {
  rvec p;
  double P_max = 1.0;

  static PowerAlloc uniform(int K, double P_max);
  double total() const { return p.squaredNorm(); }
  bool feasible(double rel_tol = 1e-9) const;
};

struct UserTerms {
  double signal = 0.0;        // S_k, W
  double interference = 0.0;  // I_k, W (noise excluded)
  double sinr = 0.0;
};

struct RateReport {
  double surrogate_sum_rate = 0.0;  // bits/s/Hz
  std::vector<UserTerms> per_user;
  double mc_rate = 0.0;
  double mc_stderr = 0.0;
  int n_mc = 0;
};

// gains(i, k) = g_i^H R_k g_i with R_k = beta_k R; real up to rounding.
Eigen::MatrixXd cross_gains(std::span<const cvec> g, const ChannelModel& model);

RateReport surrogate_rate(std::span<const cvec> g, const ChannelModel& model, const PowerAlloc& power);
RateReport surrogate_rate(const CascadeOperator& op, const ChannelModel& model, const PowerAlloc& power);

struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  int n = 0;
  // Per-user means, for per-term comparisons against the surrogate.
  std::vector<double> per_user;
  std::vector<double> per_user_stderr;
};

// Sample mean of the instantaneous sum rate over n_draws channel draws.
// Draw i is seeded by (seed, i), so any `threads` value gives the same answer.
McEstimate mc_ergodic_rate(std::span<const cvec> g, const ChannelModel& model, const PowerAlloc& power,
                           std::uint64_t seed, int n_draws, int threads = 1);

// Receive filters u_k (N-vectors applied to R_k^{1/2} G w_k p_k) and MSE
// weights rho_k > 0.
struct WmmseWeights {
  std::vector<cvec> u;
  rvec rho;
};

// MSE of user k: e_k = |u_k|^2 (sum_i p_i^2 g_i^H R_k g_i + sigma_k^2)
//                     - 2 Re{u_k^H R_k^{1/2} g_k p_k} + 1.
rvec mse_terms(std::span<const cvec> g, const ChannelModel& model, const PowerAlloc& power,
               const WmmseWeights& weights);

// WMMSE objective in bits:
//   g = K + sum_k (rho_k e_k - 1 - ln rho_k) / ln 2.
// Minimizing over rho gives rho_k = 1/e_k, and with u_k, rho_k at their
// optima g = K - (surrogate sum rate).
double wmmse_objective(std::span<const cvec> g, const ChannelModel& model, const PowerAlloc& power,
                       const WmmseWeights& weights);

}  // namespace simbeam
