#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "simbeam/types.hpp"

namespace simbeam {

inline constexpr double kSpeedOfLight = 2.998e8;  // m/s

// Spacing of the in-plane atom lattice. `half` places atom n at
// [0, mod(n-1,N_r)*d_x/2, floor((n-1)/N_r)*d_y/2]; `full` drops the 1/2.
enum class LatticeStep { half, full };

struct GeometryParams {
  int M = 5;
  int N = 49;
  int N_r = 7;
  int L = 3;
  double f_carrier = 2e9;  // Hz
  std::optional<double> d_x;        // m; defaults to lambda/2
  std::optional<double> d_y;        // m; defaults to lambda/2
  std::optional<double> thickness;  // m; defaults to 5 lambda
  LatticeStep lattice_step = LatticeStep::half;
};

// Layout of the transmitter. The stacking axis is x: antennas sit on the
// plane x = 0 and layer l (1-based) on x = l * layer_spacing. Layers are
// indexed from 0 in code.
struct SimGeometry {
  int M = 0;
  int N = 0;
  int N_r = 0;
  int L = 0;
  double wavelength = 0.0;
  double d_x = 0.0;
  double d_y = 0.0;
  double thickness = 0.0;
  double layer_spacing = 0.0;
  LatticeStep lattice_step = LatticeStep::half;
  std::vector<std::vector<Vec3>> atom_positions;  // [layer][atom]
  std::vector<Vec3> antenna_positions;
};

SimGeometry build_geometry(const GeometryParams& params);

// In-plane lattice coordinate of atom n (0-based), shared by every layer.
Vec3 lattice_point(const SimGeometry& geom, int n);

struct AntennaRef {
  int antenna;
};
struct AtomRef {
  int layer;
  int atom;
};
using Emitter = std::variant<AntennaRef, AtomRef>;

struct PropagationMetrics {
  double distance;
  double cos_incidence;
};

// Distance and incidence cosine from an antenna (to layer 0) or from an atom
// of layer l-1 to an atom of layer l.
PropagationMetrics propagation_metrics(const SimGeometry& geom, const Emitter& from, const AtomRef& to);

}  // namespace simbeam
