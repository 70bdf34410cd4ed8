#include "simbeam/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace simbeam {
namespace {

using Clock = std::chrono::steady_clock;

double rate_of(std::span<const cvec> g, const ChannelModel& model, const PowerAlloc& power) {
  return surrogate_rate(g, model, power).surrogate_sum_rate;
}

void refresh_weights(std::span<const cvec> g, const ChannelModel& model, const PowerAlloc& power,
                     WmmseWeights& weights) {
  weights.u = optimal_u(g, model, power);
  weights.rho = optimal_rho(g, model, power, weights.u);
}

PowerSolution power_step(std::span<const cvec> g, const ChannelModel& model, const PowerAlloc& power,
                         const WmmseWeights& w) {
  const int K = model.K();
  const Eigen::MatrixXd gains = cross_gains(g, model);
  rvec a = rvec::Zero(K);
  rvec c(K);
  for (int i = 0; i < K; ++i) {
    for (int k = 0; k < K; ++k) a[i] += w.rho[k] * w.u[k].squaredNorm() * gains(i, k);
    const cvec target = std::sqrt(model.beta[i]) * (model.R_sqrt * g[i]);
    c[i] = w.rho[i] * w.u[i].dot(target).real();
  }
  return solve_power_kkt(a, c, power.P_max);
}

void check_finite(const WmmseState& state, double value, const char* what) {
  if (std::isfinite(value)) return;
  std::string msg = std::string("run_algorithm1: non-finite ") + what + " at outer iteration " +
                    std::to_string(state.iter) + "; p = [";
  for (Eigen::Index i = 0; i < state.power.p.size(); ++i) msg += (i ? ", " : "") + std::to_string(state.power.p[i]);
  msg += "]; phases:\n" + to_text(state.stack);
  throw NumericError(msg);
}

}  // namespace

WmmseState initialize_state(const ChannelModel& model, const OptimizerConfig& config, std::uint64_t seed) {
  WmmseState state;
  state.stack = PhaseStack::random(model.L(), model.N(), config.resolution, seed);
  state.power = PowerAlloc::uniform(model.K(), config.P_max);
  const auto g = effective_vectors(state.stack, model);
  refresh_weights(g, model, state.power, state.weights);
  return state;
}

std::vector<cvec> optimal_u(std::span<const cvec> g, const ChannelModel& model, const PowerAlloc& power) {
  const int K = model.K();
  const Eigen::MatrixXd gains = cross_gains(g, model);
  std::vector<cvec> u(K);
  for (int k = 0; k < K; ++k) {
    double received = model.sigma2[k];
    for (int i = 0; i < K; ++i) received += power.p[i] * power.p[i] * gains(i, k);
    u[k] = std::sqrt(model.beta[k]) * (model.R_sqrt * g[k]) * (power.p[k] / received);
  }
  return u;
}

rvec optimal_rho(std::span<const cvec> g, const ChannelModel& model, const PowerAlloc& power,
                 std::span<const cvec> u) {
  WmmseWeights w{{u.begin(), u.end()}, rvec::Ones(model.K())};
  const rvec e = mse_terms(g, model, power, w);
  for (Eigen::Index k = 0; k < e.size(); ++k)
    if (!(e[k] > 0.0)) throw NumericError("update_rho: mean-square error is not positive");
  return e.cwiseInverse();
}

std::vector<cvec> update_u(WmmseState& state, const ChannelModel& model) {
  const auto g = effective_vectors(state.stack, model);
  state.weights.u = optimal_u(g, model, state.power);
  if (state.weights.rho.size() != model.K()) state.weights.rho = rvec::Ones(model.K());
  return state.weights.u;
}

rvec update_rho(WmmseState& state, const ChannelModel& model) {
  const auto g = effective_vectors(state.stack, model);
  state.weights.rho = optimal_rho(g, model, state.power, state.weights.u);
  return state.weights.rho;
}

PowerAlloc update_power(WmmseState& state, const ChannelModel& model) {
  const auto g = effective_vectors(state.stack, model);
  state.power.p = power_step(g, model, state.power, state.weights).p;
  return state.power;
}

PowerSolution solve_power_kkt(const rvec& a, const rvec& c, double P_max) {
  const double cap = std::sqrt(P_max);
  auto amplitudes = [&](double lambda) {
    rvec p(a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (c[i] <= 0.0) {
        p[i] = 0.0;
        continue;
      }
      const double denom = a[i] + lambda;
      p[i] = denom > 0.0 ? std::min(cap, c[i] / denom) : cap;
    }
    return p;
  };

  PowerSolution sol{amplitudes(0.0), 0.0};
  if (sol.p.squaredNorm() <= P_max) return sol;

  double lo = 0.0;
  double hi = std::max(a.maxCoeff(), 1e-300);
  while (amplitudes(hi).squaredNorm() > P_max) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (amplitudes(mid).squaredNorm() > P_max)
      lo = mid;
    else
      hi = mid;
  }
  sol.multiplier = hi;
  sol.p = amplitudes(hi);
  return sol;
}

double LayerQuadratic::value(const cvec& phi) const {
  return phi.dot(B * phi).real() - 2.0 * d.dot(phi).real();
}

namespace {

// B = scale * shape, where shape = (P^H R P) .* sum_i conj(v_i) v_i^T depends
// only on the sweep position and the power, and scale = sum_k rho_k |u_k|^2 beta_k.
cmat layer_gram(const LayerSweep& sweep, const ChannelModel& model) {
  const cmat& P = sweep.suffix();
  cmat gram = P.adjoint() * (model.R * P);
  return 0.5 * (gram + gram.adjoint());
}

cmat quadratic_shape(const cmat& gram, const LayerSweep& sweep, const ChannelModel& model, const PowerAlloc& power) {
  const int N = model.N();
  cmat outer = cmat::Zero(N, N);
  for (int i = 0; i < model.K(); ++i) {
    const cvec v = sweep.layer_input(i) * power.p[i];
    outer.noalias() += v.conjugate() * v.transpose();
  }
  cmat shape = gram.cwiseProduct(outer);
  return 0.5 * (shape + shape.adjoint());
}

cmat quadratic_shape(const LayerSweep& sweep, const ChannelModel& model, const PowerAlloc& power) {
  return quadratic_shape(layer_gram(sweep, model), sweep, model, power);
}

double quadratic_scale(const ChannelModel& model, const WmmseWeights& weights) {
  double scale = 0.0;
  for (int k = 0; k < model.K(); ++k) scale += weights.rho[k] * weights.u[k].squaredNorm() * model.beta[k];
  return scale;
}

cvec quadratic_linear(const LayerSweep& sweep, const ChannelModel& model, const PowerAlloc& power,
                      const WmmseWeights& weights) {
  const cmat& P = sweep.suffix();
  cvec d = cvec::Zero(model.N());
  for (int i = 0; i < model.K(); ++i) {
    const cvec v = sweep.layer_input(i) * power.p[i];
    const cvec back = P.adjoint() * (std::sqrt(model.beta[i]) * (model.R_sqrt * weights.u[i]));
    d += weights.rho[i] * v.conjugate().cwiseProduct(back);
  }
  return d;
}

}  // namespace

// C_i = P diag(v_i), so sum_i C_i^H Q C_i = (P^H Q P) .* sum_i conj(v_i) v_i^T
// with Q = sum_k rho_k |u_k|^2 R_k a multiple of R.
LayerQuadratic build_quadratic(const LayerSweep& sweep, const ChannelModel& model, const PowerAlloc& power,
                               const WmmseWeights& weights) {
  LayerQuadratic q;
  q.B = quadratic_scale(model, weights) * quadratic_shape(sweep, model, power);
  q.d = quadratic_linear(sweep, model, power, weights);
  return q;
}

LayerQuadratic build_quadratic(const WmmseState& state, const ChannelModel& model, int layer) {
  if (layer < 0 || layer >= model.L()) throw std::out_of_range("build_quadratic: layer out of range");
  LayerSweep sweep(state.stack, model);
  while (sweep.layer() < layer) sweep.advance(state.stack);
  return build_quadratic(sweep, model, state.power, state.weights);
}

double quadratic_offset(const ChannelModel& model, const WmmseWeights& weights) {
  double total = 0.0;
  for (int k = 0; k < model.K(); ++k) {
    total += weights.rho[k] * (model.sigma2[k] * weights.u[k].squaredNorm() + 1.0);
    total -= 1.0 + std::log(weights.rho[k]);
  }
  return total;
}

double default_penalty(const cmat& B) {
  const double tr = B.trace().real();
  return std::max(tr / static_cast<double>(B.rows()), 1e-12 * tr + 1e-12);
}

int nearest_grid_index(cplx z, int bits) {
  if (bits < 1) throw std::invalid_argument("nearest_grid_index: need at least one bit");
  const int levels = 1 << bits;
  if (z == cplx(0.0, 0.0)) return 0;
  const cplx unit = z / std::abs(z);
  const double step = 2.0 * kPi / levels;
  const int guess = static_cast<int>(std::floor(std::arg(z) / step));
  int best = -1;
  double best_dist = 0.0;
  // The nearest grid angle is one of the two bracketing the argument; the
  // neighbours on either side absorb rounding in the division.
  for (int off = -1; off <= 2; ++off) {
    const int t = ((guess + off) % levels + levels) % levels;
    const double dist = std::abs(std::polar(1.0, t * step) - unit);
    if (best < 0 || dist < best_dist || (dist == best_dist && t < best)) {
      best = t;
      best_dist = dist;
    }
  }
  return best;
}

cplx project_phase(cplx z, PhaseResolution res) {
  if (res.is_continuous()) return z == cplx(0.0, 0.0) ? cplx(1.0, 0.0) : z / std::abs(z);
  return std::polar(1.0, nearest_grid_index(z, res.bits) * res.step());
}

cvec project_discrete(const cvec& z, PhaseResolution res) {
  cvec out(z.size());
  for (Eigen::Index n = 0; n < z.size(); ++n) out[n] = project_phase(z[n], res);
  return out;
}

AdmmLayerSolver::AdmmLayerSolver(const LayerQuadratic& q, double beta) : q_(&q), beta_(beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("AdmmLayerSolver: penalty must be positive");
  cmat A = q.B;
  A.diagonal().array() += beta;
  llt_.compute(A);
  if (llt_.info() != Eigen::Success) throw NumericError("AdmmLayerSolver: B + beta I is not positive definite");
}

cvec AdmmLayerSolver::solve(const cvec& x, const cvec& omega) const {
  return llt_.solve(q_->d + beta_ * (x + omega));
}

cvec admm_phase_step(const LayerQuadratic& q, AdmmVars& vars, PhaseResolution res) {
  if (!(vars.beta_penalty > 0.0)) throw std::invalid_argument("admm_phase_step: penalty must be positive");
  AdmmLayerSolver solver(q, vars.beta_penalty);
  cvec phi = solver.solve(vars.x, vars.omega);
  if (!phi.allFinite()) throw NumericError("admm_phase_step: linear solve produced non-finite values");
  vars.x = project_discrete(phi - vars.omega, res);
  vars.omega += vars.x - phi;
  ++vars.iterations;
  return phi;
}

namespace {

// Greedy single-atom moves on the surrogate rate itself. Every user sees the
// same R up to beta_k, so the rate depends on the layer only through
// q_i = g_i^H R g_i, and moving atom n changes each q_i by a term built from
// column n of gram = P^H R P and h_i = P^H R g_i.
bool polish_layer(cvec& phi, const cmat& gram, const LayerSweep& sweep, const ChannelModel& model,
                  const PowerAlloc& power, PhaseResolution res, int passes, double& rate) {
  const int K = model.K();
  const int N = model.N();
  cmat V(N, K);
  for (int i = 0; i < K; ++i) V.col(i) = sweep.layer_input(i);
  cmat H = gram * V.cwiseProduct(phi.replicate(1, K));  // P^H R g_i, since g_i = P (v_i .* phi)
  rvec q(K);
  for (int i = 0; i < K; ++i) q[i] = (V.col(i).cwiseProduct(phi)).dot(H.col(i)).real();

  rvec power2 = power.p.cwiseAbs2();
  auto rate_of_q = [&](const rvec& qq) {
    double total = 0.0;
    double all = 0.0;
    for (int i = 0; i < K; ++i) all += power2[i] * qq[i];
    for (int k = 0; k < K; ++k) {
      const double signal = power2[k] * qq[k];
      const double interference = all - signal;
      total += std::log2(1.0 + model.beta[k] * signal / (model.beta[k] * interference + model.sigma2[k]));
    }
    return total;
  };

  const int n_candidates = res.is_continuous() ? 63 : res.levels() - 1;
  const double step = res.is_continuous() ? 2.0 * kPi / 64.0 : res.step();
  bool any = false;
  rvec trial_q(K);
  for (int pass = 0; pass < passes; ++pass) {
    bool improved = false;
    for (int n = 0; n < N; ++n) {
      const double here = res.is_continuous() ? std::arg(phi[n]) : step * nearest_grid_index(phi[n], res.bits);
      cplx best_phasor = phi[n];
      double best_rate = rate;
      for (int c = 1; c <= n_candidates; ++c) {
        const cplx cand = std::polar(1.0, here + c * step);
        const cplx delta = cand - phi[n];
        for (int i = 0; i < K; ++i) {
          const cplx a = V(n, i) * delta;
          trial_q[i] = q[i] + 2.0 * (std::conj(a) * H(n, i)).real() + std::norm(a) * gram(n, n).real();
        }
        const double r = rate_of_q(trial_q);
        if (r > best_rate * (1.0 + 1e-12)) {
          best_rate = r;
          best_phasor = cand;
        }
      }
      if (best_phasor == phi[n]) continue;
      const cplx delta = best_phasor - phi[n];
      for (int i = 0; i < K; ++i) {
        const cplx a = V(n, i) * delta;
        q[i] += 2.0 * (std::conj(a) * H(n, i)).real() + std::norm(a) * gram(n, n).real();
        H.col(i) += gram.col(n) * a;
      }
      phi[n] = best_phasor;
      rate = best_rate;
      improved = any = true;
    }
    if (!improved) break;
  }
  return any;
}

// Phase update of one layer. ADMM runs on the layer quadratic; an on-grid
// iterate that raises the rate becomes the new anchor, and u, rho (hence B
// and d) are refreshed there. The quadratic is also solved with the receive
// filters shrunk by 1/t for t = 1, step, step^2, ... (t = 1 is the plain
// update): a smaller filter asks for a proportionally stronger received
// signal, which lets the phases move further than the anchored quadratic
// allows at high SNR. B only changes by a scalar factor, so one
// factorization of shape + beta' I serves the whole layer.
//
// Returns true if the layer's phases changed; `rate` tracks the current rate.
bool optimize_layer(WmmseState& state, const LayerSweep& sweep, const ChannelModel& model,
                    const OptimizerConfig& config, int layer, double& rate) {
  const int K = model.K();
  const int N = model.N();
  const PhaseResolution res = state.stack.resolution();

  const cmat gram = layer_gram(sweep, model);
  const cmat shape = quadratic_shape(gram, sweep, model, state.power);
  const double shape_penalty =
      config.beta_penalty > 0.0 ? config.beta_penalty : config.penalty_scale * default_penalty(shape);
  cmat A = shape;
  A.diagonal().array() += shape_penalty;
  const Eigen::LLT<cmat> llt(A);
  if (llt.info() != Eigen::Success) throw NumericError("optimize_layer: B + beta I is not positive definite");

  double scale = quadratic_scale(model, state.weights);
  cvec d = quadratic_linear(sweep, model, state.power, state.weights);

  std::vector<cvec> trial(K);
  auto rate_with = [&](const cvec& phi) {
    for (int k = 0; k < K; ++k) trial[k] = sweep.suffix() * sweep.layer_input(k).cwiseProduct(phi);
    const double r = rate_of(trial, model, state.power);
    check_finite(state, r, "surrogate rate");
    return r;
  };

  AdmmVars vars;
  cvec anchor = state.stack.phi(layer);
  bool moved = false;
  const double max_shrink = config.acceptance_guard ? config.max_filter_shrink : 1.0;
  int n_scales = 1;
  for (double t = config.filter_shrink_step; t <= max_shrink; t *= config.filter_shrink_step) ++n_scales;
  // The per-layer iteration cap is shared evenly between filter scales.
  const int per_scale = std::max(1, config.admm_max_iters / n_scales);

  for (double t = 1.0; t <= max_shrink && scale > 0.0; t *= config.filter_shrink_step) {
    int budget = per_scale;
    vars.x = anchor;
    vars.omega = cvec::Zero(N);
    vars.beta_penalty = scale * shape_penalty;
    double prev_rate = rate;
    while (budget-- > 0) {
      // (B + beta I) phi = t d + beta (x + omega), divided through by `scale`.
      const cvec phi = llt.solve(t * d / scale + shape_penalty * (vars.x + vars.omega));
      if (!phi.allFinite()) throw NumericError("optimize_layer: ADMM produced non-finite phases");
      vars.x = project_discrete(phi - vars.omega, res);
      vars.omega += vars.x - phi;
      ++vars.iterations;

      const double r = rate_with(vars.x);
      if (r > rate || !config.acceptance_guard) {
        rate = r;
        anchor = vars.x;
        moved = true;
        if (config.refresh_in_admm) {
          refresh_weights(trial, model, state.power, state.weights);
          scale = quadratic_scale(model, state.weights);
          d = quadratic_linear(sweep, model, state.power, state.weights);
          vars.beta_penalty = scale * shape_penalty;
        }
      }
      const double primal = (vars.x - phi).norm() / std::sqrt(static_cast<double>(N));
      if (std::abs(r - prev_rate) < config.admm_tol && primal < 1e-3) break;
      prev_rate = r;
    }
  }

  if (config.polish_passes > 0 && config.acceptance_guard) {
    cvec polished = anchor;
    double r = rate;
    if (polish_layer(polished, gram, sweep, model, state.power, res, config.polish_passes, r)) {
      // The incremental rate drifts slightly; the exact one decides.
      r = rate_with(polished);
      if (r > rate) {
        rate = r;
        anchor = polished;
        moved = true;
      }
    }
  }

  if (moved) state.stack.set_layer_phasors(layer, anchor);
  state.admm = std::move(vars);
  return moved;
}

}  // namespace

AlgorithmResult run_algorithm1(const ChannelModel& model, const OptimizerConfig& config, std::uint64_t seed) {
  return run_algorithm1(model, config, initialize_state(model, config, seed));
}

static void validate(const OptimizerConfig& c) {
  auto fail = [](const char* what) { throw std::invalid_argument(std::string("OptimizerConfig: ") + what); };
  if (!(c.P_max > 0.0)) fail("P_max must be positive");
  if (c.max_outer_iters < 0 || c.power_max_iters < 0 || c.admm_max_iters < 0) fail("iteration caps must be >= 0");
  if (!(c.power_tol >= 0.0) || !(c.admm_tol >= 0.0) || !(c.outer_rel_tol >= 0.0)) fail("tolerances must be >= 0");
  if (!(c.penalty_scale > 0.0)) fail("penalty_scale must be positive");
  if (!(c.max_filter_shrink >= 1.0)) fail("max_filter_shrink must be >= 1");
  if (c.max_filter_shrink > 1.0 && !(c.filter_shrink_step > 1.0)) fail("filter_shrink_step must exceed 1");
  if (c.polish_passes < 0) fail("polish_passes must be >= 0");
}

AlgorithmResult run_algorithm1(const ChannelModel& model, const OptimizerConfig& config, WmmseState state) {
  validate(config);
  const auto start = Clock::now();
  const int L = model.L();
  auto elapsed = [&] {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
  };

  std::vector<cvec> g = effective_vectors(state.stack, model);
  refresh_weights(g, model, state.power, state.weights);
  double rate = rate_of(g, model, state.power);
  check_finite(state, rate, "surrogate rate");
  state.history.push_back({state.iter, rate, wmmse_objective(g, model, state.power, state.weights), elapsed()});

  while (state.iter < config.max_outer_iters) {
    ++state.iter;
    const double rate_before = rate;

    // Power: alternate u, rho and the closed-form p until rate and p settle.
    for (int it = 0; it < config.power_max_iters; ++it) {
      PowerAlloc candidate = state.power;
      candidate.p = power_step(g, model, state.power, state.weights).p;
      const double new_rate = rate_of(g, model, candidate);
      check_finite(state, new_rate, "surrogate rate");
      if (new_rate < rate) break;
      // Near a symmetric split the rate is flat while p still drifts away
      // from the saddle, so the amplitudes must settle too.
      const double step = (candidate.p - state.power.p).norm() / std::sqrt(config.P_max);
      state.power = std::move(candidate);
      refresh_weights(g, model, state.power, state.weights);
      const double change = new_rate - rate;
      rate = new_rate;
      if (change < config.power_tol && step < config.power_tol) break;
    }

    LayerSweep sweep(state.stack, model);
    for (int l = 0; l < L; ++l) {
      if (l > 0) sweep.advance(state.stack);
      if (optimize_layer(state, sweep, model, config, l, rate)) {
        g = effective_vectors(state.stack, model);
        refresh_weights(g, model, state.power, state.weights);
      }
    }

    g = effective_vectors(state.stack, model);
    refresh_weights(g, model, state.power, state.weights);
    rate = rate_of(g, model, state.power);
    check_finite(state, rate, "surrogate rate");
    const double objective = wmmse_objective(g, model, state.power, state.weights);
    check_finite(state, objective, "objective");
    state.history.push_back({state.iter, rate, objective, elapsed()});

    if (config.early_stop && std::abs(rate - rate_before) < config.outer_rel_tol * std::max(std::abs(rate), 1e-300))
      break;
  }

  AlgorithmResult result{std::move(state), {}};
  result.report = surrogate_rate(g, model, result.state.power);
  return result;
}

std::vector<rvec> rate_phase_gradient(const WmmseState& state, const ChannelModel& model) {
  const auto g = effective_vectors(state.stack, model);
  WmmseWeights w;
  refresh_weights(g, model, state.power, w);
  // With u, rho optimal the objective equals K - rate and its phase gradient
  // is the rate's, so each layer's quadratic gives dR/dtheta directly.
  LayerSweep sweep(state.stack, model);
  std::vector<rvec> out;
  for (int l = 0; l < model.L(); ++l) {
    if (l > 0) sweep.advance(state.stack);
    const LayerQuadratic q = build_quadratic(sweep, model, state.power, w);
    const cvec phi = state.stack.phi(l);
    const cvec grad = q.gradient(phi);
    rvec dtheta(phi.size());
    for (Eigen::Index n = 0; n < phi.size(); ++n)
      dtheta[n] = -(std::conj(grad[n]) * cplx(0.0, 1.0) * phi[n]).real() / std::log(2.0);
    out.push_back(std::move(dtheta));
  }
  return out;
}

double stationarity_residual(const WmmseState& state, const ChannelModel& model) {
  double sq = 0.0;
  for (const rvec& layer : rate_phase_gradient(state, model)) sq += layer.squaredNorm();
  const auto g = effective_vectors(state.stack, model);
  const double rate = surrogate_rate(g, model, state.power).surrogate_sum_rate;
  return std::sqrt(sq) / std::max(rate, 1.0);
}

}  // namespace simbeam
