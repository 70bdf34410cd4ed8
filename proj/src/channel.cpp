#include "simbeam/channel.hpp"

#include <cmath>
#include <string>

#include "simbeam/rng.hpp"

namespace simbeam {

cplx rs_coefficient(const SimGeometry& geom, double distance, double cos_incidence) {
  if (!(distance > 0.0)) throw std::invalid_argument("rs_coefficient: distance must be positive");
  const double lambda = geom.wavelength;
  const double amplitude = geom.d_x * geom.d_y * cos_incidence / distance;
  const cplx near_far{1.0 / (2.0 * kPi * distance), -1.0 / lambda};
  return amplitude * near_far * std::polar(1.0, 2.0 * kPi * distance / lambda);
}

Propagation build_propagation(const SimGeometry& geom) {
  Propagation prop;
  const int N = geom.N;
  for (int l = 1; l < geom.L; ++l) {
    cmat W(N, N);
    for (int to = 0; to < N; ++to) {
      for (int from = 0; from < N; ++from) {
        const auto m = propagation_metrics(geom, AtomRef{l - 1, from}, AtomRef{l, to});
        W(to, from) = rs_coefficient(geom, m.distance, m.cos_incidence);
      }
    }
    prop.inter_layer.push_back(std::move(W));
  }
  for (int a = 0; a < geom.M; ++a) {
    cvec w(N);
    for (int n = 0; n < N; ++n) {
      const auto m = propagation_metrics(geom, AntennaRef{a}, AtomRef{0, n});
      w[n] = rs_coefficient(geom, m.distance, m.cos_incidence);
    }
    prop.antenna_to_first.push_back(std::move(w));
  }
  return prop;
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = kPi * x;
  return std::sin(px) / px;
}

cmat build_correlation(const SimGeometry& geom) {
  const int N = geom.N;
  cmat R(N, N);
  for (int n = 0; n < N; ++n) {
    R(n, n) = 1.0;
    for (int m = n + 1; m < N; ++m) {
      const double sep = (lattice_point(geom, n) - lattice_point(geom, m)).norm();
      const double v = sinc(2.0 * sep / geom.wavelength);
      R(n, m) = v;
      R(m, n) = v;
    }
  }
  return R;
}

UserPlacement assign_users(std::uint64_t seed, int K, const Annulus& annulus, double sigma2_watts) {
  if (K < 1) throw std::invalid_argument("assign_users: K must be positive");
  if (!(annulus.r_in > 0.0) || !(annulus.r_out > annulus.r_in))
    throw std::invalid_argument("assign_users: need 0 < r_in < r_out");
  if (!(sigma2_watts > 0.0)) throw std::invalid_argument("assign_users: noise power must be positive");

  CounterRng rng(seed, streams::kUsers);
  UserPlacement users;
  const double a2 = annulus.r_in * annulus.r_in;
  const double b2 = annulus.r_out * annulus.r_out;
  for (int k = 0; k < K; ++k) {
    const double d = std::sqrt(a2 + rng.uniform() * (b2 - a2));
    users.distances.push_back(d);
    users.beta.push_back(1e-3 / (d * d));
    users.sigma2.push_back(sigma2_watts);
  }
  return users;
}

cmat hermitian_sqrt(const cmat& R) {
  Eigen::SelfAdjointEigenSolver<cmat> eig(R);
  if (eig.info() != Eigen::Success) throw NumericError("hermitian_sqrt: eigendecomposition failed");
  const double floor = -1e-8 * static_cast<double>(R.rows());
  rvec roots(R.rows());
  for (Eigen::Index i = 0; i < R.rows(); ++i) {
    const double ev = eig.eigenvalues()[i];
    if (ev < floor)
      throw NumericError("hermitian_sqrt: matrix is not PSD (eigenvalue " + std::to_string(ev) + ")");
    roots[i] = ev > 0.0 ? std::sqrt(ev) : 0.0;
  }
  const cmat& V = eig.eigenvectors();
  return V * roots.asDiagonal() * V.adjoint();
}

ChannelModel build_channel_model(const SimGeometry& geom, const UserPlacement& users) {
  const int K = static_cast<int>(users.beta.size());
  if (K != geom.M)
    throw std::invalid_argument("build_channel_model: M must equal K (antenna k feeds user k)");
  if (users.sigma2.size() != users.beta.size() || users.distances.size() != users.beta.size())
    throw std::invalid_argument("build_channel_model: inconsistent user placement");
  for (double b : users.beta)
    if (!(b > 0.0)) throw std::invalid_argument("build_channel_model: path loss must be positive");

  Propagation prop = build_propagation(geom);
  ChannelModel model;
  model.W = std::move(prop.inter_layer);
  model.w1 = std::move(prop.antenna_to_first);
  model.R = build_correlation(geom);
  model.R_sqrt = hermitian_sqrt(model.R);
  model.beta = users.beta;
  model.sigma2 = users.sigma2;
  model.user_distances = users.distances;
  for (const auto& W : model.W)
    if (!W.allFinite()) throw NumericError("build_channel_model: non-finite propagation coefficient");
  return model;
}

cmat sample_channel(const ChannelModel& model, std::uint64_t seed, std::uint64_t index) {
  const int N = model.N();
  const int K = model.K();
  CounterRng rng(seed, streams::kChannelDraws + index);
  cmat z(N, K);
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < N; ++n) z(n, k) = rng.complex_normal();
  cmat h = model.R_sqrt * z;
  for (int k = 0; k < K; ++k) h.col(k) *= std::sqrt(model.beta[k]);
  return h;
}

std::vector<cmat> sample_channels(const ChannelModel& model, std::uint64_t seed, int n_draws) {
  std::vector<cmat> draws;
  draws.reserve(n_draws);
  for (int i = 0; i < n_draws; ++i) draws.push_back(sample_channel(model, seed, static_cast<std::uint64_t>(i)));
  return draws;
}

}  // namespace simbeam
