#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "simbeam/cascade.hpp"
#include "simbeam/channel.hpp"
#include "simbeam/rate.hpp"
#include "simbeam/types.hpp"

namespace simbeam {

struct OptimizerConfig {
  double P_max = 1.0;  // W
  PhaseResolution resolution = PhaseResolution::discrete(1);
  double power_tol = 1e-5;  // rate change and relative amplitude step ending the power loop
  int power_max_iters = 20;
  double admm_tol = 1e-5;  // rate change ending a layer's ADMM loop
  int admm_max_iters = 100;  // per layer and outer iteration
  double beta_penalty = 0.0;  // <= 0 selects penalty_scale * tr(B)/N per layer
  double penalty_scale = 1.0;
  double outer_rel_tol = 1e-4;
  int max_outer_iters = 50;
  bool early_stop = true;
  bool acceptance_guard = true;
  // Re-anchor u, rho at every improving ADMM iterate instead of once per layer.
  bool refresh_in_admm = true;
  // The layer step also solves the quadratic with u scaled by 1/t for
  // t = 1, step, step^2, ... <= max_filter_shrink; 1 disables the search.
  double max_filter_shrink = 256.0;
  double filter_shrink_step = 4.0;
  // Sweeps of single-atom moves on the exact rate after each layer's ADMM
  // (needs the acceptance guard); 0 disables.
  int polish_passes = 10;
};

struct AdmmVars {
  cvec x;
  cvec omega;
  double beta_penalty = 0.0;
  int iterations = 0;
};

struct HistoryRow {
  int iter = 0;
  double rate = 0.0;
  double objective = 0.0;
  std::int64_t wall_ns = 0;  // elapsed since the start of the run
};

struct WmmseState {
  PowerAlloc power;
  PhaseStack stack;
  WmmseWeights weights;
  AdmmVars admm;
  int iter = 0;
  std::vector<HistoryRow> history;
};

// Random on-grid phases (seeded), uniform power, then one u/rho pass.
WmmseState initialize_state(const ChannelModel& model, const OptimizerConfig& config, std::uint64_t seed);

// Closed-form receive filters u_k = R_k^{1/2} g_k p_k / (sum_i p_i^2 g_i^H R_k g_i + sigma_k^2).
std::vector<cvec> update_u(WmmseState& state, const ChannelModel& model);
// rho_k = 1 / e_k at the current u.
rvec update_rho(WmmseState& state, const ChannelModel& model);
// Exact minimizer of the objective over the feasible amplitudes, the power
// budget enforced through a bisected multiplier.
PowerAlloc update_power(WmmseState& state, const ChannelModel& model);

// Same updates on precomputed effective vectors g_k.
std::vector<cvec> optimal_u(std::span<const cvec> g, const ChannelModel& model, const PowerAlloc& power);
rvec optimal_rho(std::span<const cvec> g, const ChannelModel& model, const PowerAlloc& power,
                 std::span<const cvec> u);

struct PowerSolution {
  rvec p;
  double multiplier = 0.0;  // dual variable of the sum-power constraint
};

// Minimizes sum_i a_i p_i^2 - 2 c_i p_i over p >= 0, p_i <= sqrt(P_max),
// sum p_i^2 <= P_max.
PowerSolution solve_power_kkt(const rvec& a, const rvec& c, double P_max);

// Per-layer restriction of the objective: phi^H B phi - 2 Re{d^H phi}.
struct LayerQuadratic {
  cmat B;
  cvec d;

  double value(const cvec& phi) const;
  cvec gradient(const cvec& phi) const { return 2.0 * (B * phi - d); }
};

LayerQuadratic build_quadratic(const WmmseState& state, const ChannelModel& model, int layer);
LayerQuadratic build_quadratic(const LayerSweep& sweep, const ChannelModel& model, const PowerAlloc& power,
                               const WmmseWeights& weights);

// Everything in the objective that does not depend on the phases, so that
// objective = K + (quadratic value + constant_terms) / ln 2.
double quadratic_offset(const ChannelModel& model, const WmmseWeights& weights);

double default_penalty(const cmat& B);

// Nearest point of the grid (or the unit circle in continuous mode) in
// chordal distance; z = 0 maps to angle 0, exact ties go to the smaller index.
int nearest_grid_index(cplx z, int bits);
cplx project_phase(cplx z, PhaseResolution res);
cvec project_discrete(const cvec& z, PhaseResolution res);

// Caches the factorization of B + beta I for one layer's ADMM loop.
class AdmmLayerSolver {
 public:
  AdmmLayerSolver(const LayerQuadratic& q, double beta);
  // argmin_phi G(phi) + beta |phi - x - omega|^2
  cvec solve(const cvec& x, const cvec& omega) const;
  double beta() const { return beta_; }

 private:
  const LayerQuadratic* q_;
  double beta_;
  Eigen::LLT<cmat> llt_;
};

// One ADMM pass: least-squares phi update, projection of phi - omega onto
// the phase set into x, then omega += x - phi. Returns phi.
cvec admm_phase_step(const LayerQuadratic& q, AdmmVars& vars, PhaseResolution res);

struct AlgorithmResult {
  WmmseState state;
  RateReport report;
};

AlgorithmResult run_algorithm1(const ChannelModel& model, const OptimizerConfig& config, std::uint64_t seed);
AlgorithmResult run_algorithm1(const ChannelModel& model, const OptimizerConfig& config, WmmseState state);

// Gradient of the surrogate rate (bits/rad) with respect to every phase
// angle, one vector per layer, at the state's stack and power.
std::vector<rvec> rate_phase_gradient(const WmmseState& state, const ChannelModel& model);

// |d rate / d theta| over all layers, relative to max(rate, 1). Zero at a
// stationary point of the unit-modulus problem.
double stationarity_residual(const WmmseState& state, const ChannelModel& model);

}  // namespace simbeam
