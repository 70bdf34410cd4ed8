#include "simbeam/geometry.hpp"

#include <string>

namespace simbeam {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("geometry: " + what);
}

}  // namespace

SimGeometry build_geometry(const GeometryParams& params) {
  require(params.M >= 1, "M must be positive");
  require(params.N >= 1, "N must be positive");
  require(params.N_r >= 1, "N_r must be positive");
  require(params.N % params.N_r == 0, "N_r must divide N");
  require(params.L >= 1, "L must be at least 1");
  require(params.f_carrier > 0.0, "carrier frequency must be positive");
  require(params.d_x.value_or(1.0) > 0.0 && params.d_y.value_or(1.0) > 0.0, "atom dimensions must be positive");
  require(params.thickness.value_or(1.0) > 0.0, "thickness must be positive");

  SimGeometry geom;
  geom.M = params.M;
  geom.N = params.N;
  geom.N_r = params.N_r;
  geom.L = params.L;
  geom.lattice_step = params.lattice_step;
  geom.wavelength = kSpeedOfLight / params.f_carrier;
  geom.d_x = params.d_x.value_or(geom.wavelength / 2.0);
  geom.d_y = params.d_y.value_or(geom.wavelength / 2.0);
  geom.thickness = params.thickness.value_or(5.0 * geom.wavelength);
  geom.layer_spacing = geom.thickness / geom.L;

  Vec3 centroid = Vec3::Zero();
  for (int n = 0; n < geom.N; ++n) centroid += lattice_point(geom, n);
  centroid /= geom.N;

  geom.atom_positions.resize(geom.L);
  for (int l = 0; l < geom.L; ++l) {
    const double x = (l + 1) * geom.layer_spacing;
    auto& layer = geom.atom_positions[l];
    layer.reserve(geom.N);
    for (int n = 0; n < geom.N; ++n) layer.push_back(lattice_point(geom, n) + Vec3(x, 0.0, 0.0));
  }

  // Uniform linear array along y, lambda/2 pitch, centred on the lattice.
  geom.antenna_positions.reserve(geom.M);
  const double pitch = geom.wavelength / 2.0;
  for (int m = 0; m < geom.M; ++m) {
    const double offset = (m - (geom.M - 1) / 2.0) * pitch;
    geom.antenna_positions.emplace_back(0.0, centroid.y() + offset, centroid.z());
  }
  return geom;
}

Vec3 lattice_point(const SimGeometry& geom, int n) {
  const double scale = geom.lattice_step == LatticeStep::half ? 0.5 : 1.0;
  const int col = n % geom.N_r;
  const int row = n / geom.N_r;
  return {0.0, col * geom.d_x * scale, row * geom.d_y * scale};
}

PropagationMetrics propagation_metrics(const SimGeometry& geom, const Emitter& from, const AtomRef& to) {
  if (to.layer < 0 || to.layer >= geom.L || to.atom < 0 || to.atom >= geom.N)
    throw std::out_of_range("propagation_metrics: receiving atom index out of range");

  Vec3 source;
  if (const auto* ant = std::get_if<AntennaRef>(&from)) {
    if (ant->antenna < 0 || ant->antenna >= geom.M)
      throw std::out_of_range("propagation_metrics: antenna index out of range");
    if (to.layer != 0) throw std::invalid_argument("propagation_metrics: antennas only illuminate the first layer");
    source = geom.antenna_positions[ant->antenna];
  } else {
    const auto& atom = std::get<AtomRef>(from);
    if (atom.layer < 0 || atom.layer >= geom.L || atom.atom < 0 || atom.atom >= geom.N)
      throw std::out_of_range("propagation_metrics: emitting atom index out of range");
    if (to.layer != atom.layer + 1)
      throw std::invalid_argument("propagation_metrics: layers must be adjacent");
    source = geom.atom_positions[atom.layer][atom.atom];
  }

  const Vec3 delta = geom.atom_positions[to.layer][to.atom] - source;
  const double distance = delta.norm();
  return {distance, delta.x() / distance};
}

}  // namespace simbeam
