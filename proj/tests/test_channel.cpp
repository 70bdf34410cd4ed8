#include <doctest.h>

#include <cmath>
#include <complex>
#include <stdexcept>

#include "simbeam/channel.hpp"
#include "simbeam/rng.hpp"
#include "support.hpp"

using namespace simbeam;

namespace {

constexpr double kTwoPi = 6.283185307179586;

// Independent evaluation of the diffraction coefficient.
std::complex<double> rs_oracle(double dx, double dy, double lambda, double d, double c) {
  const std::complex<double> j(0.0, 1.0);
  return (dx * dy * c / d) * (1.0 / (kTwoPi * d) - j / lambda) * std::exp(j * (kTwoPi * d / lambda));
}

SimGeometry geometry(int N, int N_r, int L, int M = 2, LatticeStep step = LatticeStep::half) {
  GeometryParams p;
  p.M = M;
  p.N = N;
  p.N_r = N_r;
  p.L = L;
  p.lattice_step = step;
  return build_geometry(p);
}

}  // namespace

TEST_CASE("coefficient at one wavelength with half-wavelength atoms") {
  const SimGeometry g = geometry(4, 2, 2);
  const cplx c = rs_coefficient(g, g.wavelength, 1.0);
  CHECK(c.real() == doctest::Approx(1.0 / (8.0 * kPi)).epsilon(1e-12));
  CHECK(c.imag() == doctest::Approx(-0.25).epsilon(1e-12));
}

TEST_CASE("coefficient modulus falls with distance and depends only on the metrics") {
  const SimGeometry g = geometry(4, 2, 2);
  const double l = g.wavelength;
  const double a = std::abs(rs_coefficient(g, l, 0.7));
  const double b = std::abs(rs_coefficient(g, 2 * l, 0.7));
  const double c = std::abs(rs_coefficient(g, 4 * l, 0.7));
  CHECK(a > b);
  CHECK(b > c);
  CHECK(rs_coefficient(g, 1.3 * l, 0.4) == rs_coefficient(g, 1.3 * l, 0.4));
  CHECK_THROWS_AS(rs_coefficient(g, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(rs_coefficient(g, -1.0, 1.0), std::invalid_argument);
}

TEST_CASE("single layer has no inter-layer matrices") {
  const Propagation p = build_propagation(geometry(4, 2, 1, 3));
  CHECK(p.inter_layer.empty());
  CHECK(p.antenna_to_first.size() == 3);
}

TEST_CASE("facing pairs give a constant diagonal") {
  const SimGeometry g = geometry(9, 3, 3);
  const Propagation p = build_propagation(g);
  REQUIRE(p.inter_layer.size() == 2);
  for (const auto& W : p.inter_layer) {
    for (int n = 1; n < 9; ++n) CHECK(std::abs(W(n, n) - W(0, 0)) <= 1e-15 * std::abs(W(0, 0)));
  }
}

TEST_CASE("two-atom lattice matches hand evaluation of the facing and diagonal pairs") {
  const SimGeometry g = geometry(2, 2, 2);
  const Propagation p = build_propagation(g);
  const double s = g.layer_spacing;
  const double off = g.d_x / 2;  // half-step lattice
  const double diag = std::sqrt(s * s + off * off);
  const auto facing = rs_oracle(g.d_x, g.d_y, g.wavelength, s, 1.0);
  const auto cross = rs_oracle(g.d_x, g.d_y, g.wavelength, diag, s / diag);
  const cmat& W = p.inter_layer[0];
  CHECK(std::abs(W(0, 0) - facing) <= 1e-12 * std::abs(facing));
  CHECK(std::abs(W(1, 1) - facing) <= 1e-12 * std::abs(facing));
  CHECK(std::abs(W(0, 1) - cross) <= 1e-12 * std::abs(cross));
  CHECK(std::abs(W(1, 0) - cross) <= 1e-12 * std::abs(cross));
}

TEST_CASE("antenna coefficients follow the same formula") {
  const SimGeometry g = geometry(4, 2, 2, 3);
  const Propagation p = build_propagation(g);
  for (int m = 0; m < 3; ++m) {
    for (int n = 0; n < 4; ++n) {
      const Vec3 d = g.atom_positions[0][n] - g.antenna_positions[m];
      const auto want = rs_oracle(g.d_x, g.d_y, g.wavelength, d.norm(), d.x() / d.norm());
      CHECK(std::abs(p.antenna_to_first[m][n] - want) <= 1e-12 * std::abs(want));
    }
  }
}

TEST_CASE("propagation is bit-identical when rebuilt") {
  const SimGeometry g = geometry(6, 3, 3);
  const Propagation a = build_propagation(g);
  const Propagation b = build_propagation(g);
  for (std::size_t l = 0; l < a.inter_layer.size(); ++l) CHECK(a.inter_layer[l] == b.inter_layer[l]);
  for (std::size_t m = 0; m < a.antenna_to_first.size(); ++m) CHECK(a.antenna_to_first[m] == b.antenna_to_first[m]);
}

TEST_CASE("sinc convention") {
  CHECK(sinc(0.0) == 1.0);
  CHECK(std::abs(sinc(1.0)) < 1e-15);
  CHECK(sinc(0.5) == doctest::Approx(2.0 / kPi));
}

TEST_CASE("correlation matrix structure") {
  const SimGeometry g = geometry(12, 4, 1);
  const cmat R = build_correlation(g);
  CHECK(R.trace().real() == doctest::Approx(12.0).epsilon(1e-12));
  for (int n = 0; n < 12; ++n) CHECK(R(n, n) == cplx(1.0, 0.0));
  CHECK((R - R.adjoint()).norm() == 0.0);
  for (int a = 0; a < 12; ++a) {
    for (int b = 0; b < 12; ++b) {
      const double sep = (lattice_point(g, a) - lattice_point(g, b)).norm();
      const double x = 2 * sep / g.wavelength;
      const double want = x == 0 ? 1.0 : std::sin(kPi * x) / (kPi * x);
      CHECK(R(a, b).real() == doctest::Approx(want).epsilon(1e-14));
    }
  }
  Eigen::SelfAdjointEigenSolver<cmat> eig(R);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-8 * 12);
}

TEST_CASE("half-wavelength neighbours are uncorrelated") {
  const SimGeometry g = geometry(4, 2, 1, 2, LatticeStep::full);
  const cmat R = build_correlation(g);
  CHECK(std::abs(R(0, 1)) < 1e-15);
  CHECK(std::abs(R(0, 2)) < 1e-15);
}

TEST_CASE("path loss and noise conversion") {
  CHECK(1e-3 / (60.0 * 60.0) == doctest::Approx(2.7778e-7).epsilon(1e-4));
  CHECK(dbm_to_watts(-80.0) == doctest::Approx(1e-11).epsilon(1e-12));
  CHECK(dbm_to_watts(30.0) == doctest::Approx(1.0).epsilon(1e-15));
  const UserPlacement u = assign_users(11, 500, {60.0, 80.0}, 1e-11);
  for (int k = 0; k < 500; ++k) {
    CHECK(u.distances[k] >= 60.0);
    CHECK(u.distances[k] <= 80.0);
    CHECK(u.beta[k] == doctest::Approx(1e-3 / (u.distances[k] * u.distances[k])).epsilon(1e-15));
    CHECK(u.sigma2[k] == 1e-11);
  }
}

TEST_CASE("user draws have uniform area density") {
  // P(d <= r) = (r^2 - 60^2) / (80^2 - 60^2); at the median radius that is 1/2.
  const UserPlacement u = assign_users(5, 20000, {60.0, 80.0}, 1e-11);
  const double median_r = std::sqrt(0.5 * (60.0 * 60.0 + 80.0 * 80.0));
  int below = 0;
  for (double d : u.distances) below += d <= median_r;
  const double frac = below / 20000.0;
  CHECK(std::abs(frac - 0.5) < 3 * std::sqrt(0.25 / 20000));
}

TEST_CASE("user placement is deterministic and validated") {
  const UserPlacement a = assign_users(3, 5, {60.0, 80.0}, 1e-11);
  const UserPlacement b = assign_users(3, 5, {60.0, 80.0}, 1e-11);
  CHECK(a.distances == b.distances);
  CHECK(assign_users(4, 5, {60.0, 80.0}, 1e-11).distances != a.distances);
  CHECK_THROWS_AS(assign_users(1, 5, {80.0, 60.0}, 1e-11), std::invalid_argument);
  CHECK_THROWS_AS(assign_users(1, 5, {0.0, 60.0}, 1e-11), std::invalid_argument);
  CHECK_THROWS_AS(assign_users(1, 0, {60.0, 80.0}, 1e-11), std::invalid_argument);
}

TEST_CASE("model requires one antenna per user") {
  const SimGeometry g = geometry(4, 2, 2, 3);
  CHECK_THROWS_AS(build_channel_model(g, assign_users(1, 2, {60.0, 80.0}, 1e-11)), std::invalid_argument);
  const ChannelModel m = build_channel_model(g, assign_users(1, 3, {60.0, 80.0}, 1e-11));
  CHECK(m.K() == 3);
  CHECK(m.N() == 4);
  CHECK(m.L() == 2);
}

TEST_CASE("Hermitian square root") {
  const SimGeometry g = geometry(16, 4, 1);
  const cmat R = build_correlation(g);
  const cmat S = hermitian_sqrt(R);
  CHECK((S - S.adjoint()).norm() < 1e-12);
  CHECK((S * S - R).norm() < 1e-10 * R.norm());

  cmat bad = cmat::Identity(3, 3);
  bad(2, 2) = -1.0;
  CHECK_THROWS_AS(hermitian_sqrt(bad), NumericError);

  cmat tiny = cmat::Identity(3, 3);
  tiny(2, 2) = -1e-9;  // within the clamp band
  const cmat T = hermitian_sqrt(tiny);
  CHECK(std::abs(T(2, 2)) == 0.0);
  CHECK(std::abs(T(0, 0) - 1.0) < 1e-15);
}

TEST_CASE("channel draws have covariance beta R") {
  const ChannelModel m = testing::make_model(4, 2, 1, 2, 9);
  const int n = 100000;
  const int N = m.N();
  cmat cov = cmat::Zero(N, N);
  cvec mean = cvec::Zero(N);
  double energy = 0.0, energy_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const cmat h = sample_channel(m, 77, i);
    const cvec z = h.col(0) / std::sqrt(m.beta[0]);
    cov += z * z.adjoint();
    mean += h.col(0);
    const double e = h.col(0).squaredNorm();
    energy += e;
    energy_sq += e * e;
  }
  cov /= n;
  mean /= n;
  for (int a = 0; a < N; ++a) {
    for (int b = 0; b < N; ++b) {
      const double var = (m.R(a, a).real() * m.R(b, b).real() + std::norm(m.R(a, b))) / 2.0;
      const double se = std::sqrt(var / n);
      CHECK(std::abs(cov(a, b).real() - m.R(a, b).real()) <= 3 * se);
      CHECK(std::abs(cov(a, b).imag() - m.R(a, b).imag()) <= 3 * se);
    }
    CHECK(std::abs(mean[a]) <= 3 * std::sqrt(m.beta[0] / n));
  }
  const double e_mean = energy / n;
  const double e_se = std::sqrt((energy_sq / n - e_mean * e_mean) / n);
  CHECK(std::abs(e_mean - m.beta[0] * N) <= 3 * e_se);
}

TEST_CASE("draws are addressable by index") {
  const ChannelModel m = testing::make_model(4, 2, 2, 3, 2);
  const auto batch = sample_channels(m, 5, 10);
  REQUIRE(batch.size() == 10);
  for (int i = 9; i >= 0; --i) CHECK(sample_channel(m, 5, i) == batch[i]);
  CHECK(sample_channel(m, 6, 0) != batch[0]);
}
