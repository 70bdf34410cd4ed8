#pragma once

#include <cstdint>
#include <vector>

#include "simbeam/geometry.hpp"
#include "simbeam/types.hpp"

namespace simbeam {

// Rayleigh-Sommerfeld transmission coefficient between two aperture
// elements separated by `distance` with incidence cosine `cos_incidence`.
cplx rs_coefficient(const SimGeometry& geom, double distance, double cos_incidence);

struct Propagation {
  // inter_layer[j] maps layer-j signals to layer-(j+1) signals (0-based), so
  // the list has L-1 entries and entry (n', n) couples atom n to atom n'.
  std::vector<cmat> inter_layer;
  // antenna_to_first[m][n]: antenna m to layer-0 atom n.
  std::vector<cvec> antenna_to_first;
};

Propagation build_propagation(const SimGeometry& geom);

// Isotropic-scattering spatial correlation, normalized sinc of 2|u_n-u_n'|/lambda.
cmat build_correlation(const SimGeometry& geom);

// sin(pi x)/(pi x) with sinc(0) = 1.
double sinc(double x);

struct Annulus {
  double r_in = 60.0;
  double r_out = 80.0;
};

struct UserPlacement {
  std::vector<double> distances;  // m
  std::vector<double> beta;       // path loss 1e-3 d^-2
  std::vector<double> sigma2;     // W
};

UserPlacement assign_users(std::uint64_t seed, int K, const Annulus& annulus, double sigma2_watts);

// Hermitian PSD square root via eigendecomposition; eigenvalues in
// [-1e-8 N, 0) are clamped to zero, anything more negative is rejected.
cmat hermitian_sqrt(const cmat& R);

struct ChannelModel {
  std::vector<cmat> W;   // see Propagation::inter_layer
  std::vector<cvec> w1;  // one column per user stream (user k <- antenna k)
  cmat R;
  cmat R_sqrt;
  std::vector<double> beta;
  std::vector<double> sigma2;
  std::vector<double> user_distances;

  int K() const { return static_cast<int>(beta.size()); }
  int N() const { return static_cast<int>(R.rows()); }
  int L() const { return static_cast<int>(W.size()) + 1; }
};

// Requires M == K: antenna k feeds user k's stream.
ChannelModel build_channel_model(const SimGeometry& geom, const UserPlacement& users);

// One channel realization: column k is h_k ~ CN(0, beta_k R). Draw `index`
// of a given seed is the same regardless of the order draws are taken in.
cmat sample_channel(const ChannelModel& model, std::uint64_t seed, std::uint64_t index);

std::vector<cmat> sample_channels(const ChannelModel& model, std::uint64_t seed, int n_draws);

}  // namespace simbeam
