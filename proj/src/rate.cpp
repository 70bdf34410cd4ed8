#include "simbeam/rate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace simbeam {

PowerAlloc PowerAlloc::uniform(int K, double P_max) {
  if (K < 1 || !(P_max > 0.0)) throw std::invalid_argument("PowerAlloc::uniform: need K >= 1 and P_max > 0");
  return {rvec::Constant(K, std::sqrt(P_max / K)), P_max};
}

bool PowerAlloc::feasible(double rel_tol) const {
  return (p.array() >= 0.0).all() && total() <= P_max * (1.0 + rel_tol);
}

Eigen::MatrixXd cross_gains(std::span<const cvec> g, const ChannelModel& model) {
  const int K = model.K();
  if (static_cast<int>(g.size()) != K) throw std::invalid_argument("cross_gains: one effective vector per user");
  Eigen::MatrixXd gains(K, K);
  for (int i = 0; i < K; ++i) {
    const cvec Rg = model.R * g[i];
    const cplx q = g[i].dot(Rg);  // g^H R g
    const double scale = std::max(std::abs(q), 1e-300);
    if (std::abs(q.imag()) > 1e-9 * scale)
      throw NumericError("cross_gains: quadratic form is not real; correlation matrix not Hermitian");
    for (int k = 0; k < K; ++k) gains(i, k) = model.beta[k] * q.real();
  }
  return gains;
}

RateReport surrogate_rate(std::span<const cvec> g, const ChannelModel& model, const PowerAlloc& power) {
  const int K = model.K();
  if (power.p.size() != K) throw std::invalid_argument("surrogate_rate: power vector size mismatch");
  const Eigen::MatrixXd gains = cross_gains(g, model);
  RateReport report;
  report.per_user.resize(K);
  for (int k = 0; k < K; ++k) {
    UserTerms& t = report.per_user[k];
    for (int i = 0; i < K; ++i) {
      const double term = power.p[i] * power.p[i] * gains(i, k);
      if (i == k)
        t.signal = term;
      else
        t.interference += term;
    }
    t.sinr = t.signal / (t.interference + model.sigma2[k]);
    report.surrogate_sum_rate += std::log2(1.0 + t.sinr);
  }
  if (!std::isfinite(report.surrogate_sum_rate)) throw NumericError("surrogate_rate: non-finite rate");
  return report;
}

RateReport surrogate_rate(const CascadeOperator& op, const ChannelModel& model, const PowerAlloc& power) {
  return surrogate_rate(std::span<const cvec>(op.g), model, power);
}

namespace {

// Instantaneous per-user rates for one channel draw H (column k = h_k).
void instantaneous_rates(std::span<const cvec> g, const ChannelModel& model, const PowerAlloc& power,
                         const cmat& H, std::span<double> out) {
  const int K = model.K();
  for (int k = 0; k < K; ++k) {
    double signal = 0.0;
    double interference = 0.0;
    for (int i = 0; i < K; ++i) {
      const double v = std::norm(power.p[i] * g[i].dot(H.col(k)));
      if (i == k)
        signal = v;
      else
        interference += v;
    }
    out[k] = std::log2(1.0 + signal / (interference + model.sigma2[k]));
  }
}

}  // namespace

McEstimate mc_ergodic_rate(std::span<const cvec> g, const ChannelModel& model, const PowerAlloc& power,
                           std::uint64_t seed, int n_draws, int threads) {
  if (n_draws < 2) throw std::invalid_argument("mc_ergodic_rate: need at least two draws");
  const int K = model.K();
  Eigen::MatrixXd rates(K, n_draws);

  auto work = [&](int begin, int end) {
    for (int d = begin; d < end; ++d) {
      const cmat H = sample_channel(model, seed, static_cast<std::uint64_t>(d));
      instantaneous_rates(g, model, power, H, std::span<double>(rates.col(d).data(), K));
    }
  };
  threads = std::clamp(threads, 1, n_draws);
  if (threads == 1) {
    work(0, n_draws);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back(work, n_draws * t / threads, n_draws * (t + 1) / threads);
    for (auto& th : pool) th.join();
  }

  McEstimate est;
  est.n = n_draws;
  auto mean_and_stderr = [n_draws](const Eigen::RowVectorXd& x) {
    const double mean = x.mean();
    const double var = (x.array() - mean).square().sum() / (n_draws - 1);
    return std::pair{mean, std::sqrt(var / n_draws)};
  };
  const Eigen::RowVectorXd sums = rates.colwise().sum();
  std::tie(est.mean, est.stderr_) = mean_and_stderr(sums);
  for (int k = 0; k < K; ++k) {
    auto [m, s] = mean_and_stderr(rates.row(k));
    est.per_user.push_back(m);
    est.per_user_stderr.push_back(s);
  }
  return est;
}

rvec mse_terms(std::span<const cvec> g, const ChannelModel& model, const PowerAlloc& power,
               const WmmseWeights& weights) {
  const int K = model.K();
  if (static_cast<int>(weights.u.size()) != K || weights.rho.size() != K)
    throw std::invalid_argument("mse_terms: weights size mismatch");
  const Eigen::MatrixXd gains = cross_gains(g, model);
  rvec e(K);
  for (int k = 0; k < K; ++k) {
    double received = model.sigma2[k];
    for (int i = 0; i < K; ++i) received += power.p[i] * power.p[i] * gains(i, k);
    const cvec target = std::sqrt(model.beta[k]) * (model.R_sqrt * g[k]) * power.p[k];
    e[k] = weights.u[k].squaredNorm() * received - 2.0 * weights.u[k].dot(target).real() + 1.0;
  }
  return e;
}

double wmmse_objective(std::span<const cvec> g, const ChannelModel& model, const PowerAlloc& power,
                       const WmmseWeights& weights) {
  if ((weights.rho.array() <= 0.0).any()) throw std::invalid_argument("wmmse_objective: rho must be positive");
  const rvec e = mse_terms(g, model, power, weights);
  const int K = model.K();
  double total = K;
  for (int k = 0; k < K; ++k) total += (weights.rho[k] * e[k] - 1.0 - std::log(weights.rho[k])) / M_LN2;
  return total;
}

}  // namespace simbeam
