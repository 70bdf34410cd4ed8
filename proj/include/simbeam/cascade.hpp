#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simbeam/channel.hpp"
#include "simbeam/types.hpp"

namespace simbeam {

// Phase resolution of the meta-atoms: b bits (2^b levels) or continuous.
struct PhaseResolution {
  int bits = 0;  // 0 = continuous

  static PhaseResolution continuous() { return {0}; }
  static PhaseResolution discrete(int b);
  bool is_continuous() const { return bits == 0; }
  int levels() const { return 1 << bits; }
  double step() const { return 2.0 * kPi / levels(); }
  std::string label() const { return is_continuous() ? "inf" : std::to_string(bits); }
  bool operator==(const PhaseResolution&) const = default;
};

// L x N phase configuration. In discrete mode each atom stores an index t
// with theta = 2*pi*t/2^b; in continuous mode only the raw angle is kept.
class PhaseStack {
 public:
  PhaseStack() = default;
  PhaseStack(int L, int N, PhaseResolution res);

  static PhaseStack random(int L, int N, PhaseResolution res, std::uint64_t seed);

  int layers() const { return L_; }
  int atoms() const { return N_; }
  PhaseResolution resolution() const { return res_; }

  int index(int layer, int n) const;
  double theta(int layer, int n) const { return theta_[offset(layer, n)]; }
  cplx phasor(int layer, int n) const { return std::polar(1.0, theta(layer, n)); }
  // phi^l: the diagonal of Phi^l.
  cvec phi(int layer) const;
  std::vector<int> layer_indices(int layer) const;

  void set_layer(int layer, std::span<const int> indices);
  // Continuous mode only.
  void set_layer_angles(int layer, std::span<const double> angles);
  // Accepts unit-modulus phasors already on the stack's grid.
  void set_layer_phasors(int layer, const cvec& phasors);

  // Bumped on every mutation; cached cascade products key off it.
  std::uint64_t version() const { return version_; }

  bool operator==(const PhaseStack& other) const;

 private:
  std::size_t offset(int layer, int n) const;
  void check_layer(int layer, std::size_t count) const;

  int L_ = 0;
  int N_ = 0;
  PhaseResolution res_;
  std::vector<int> indices_;
  std::vector<double> theta_;
  std::uint64_t version_ = 0;
};

// Plain-text checkpoint: L lines of N whitespace-separated values (integer
// indices, or radians with 17 significant digits in continuous mode).
std::string to_text(const PhaseStack& stack);
PhaseStack stack_from_text(std::string_view text, PhaseResolution res);

struct CascadeOperator {
  cmat G;
  std::vector<cvec> g;  // g_k = G w_k^1
};

CascadeOperator materialize_G(const PhaseStack& stack, const ChannelModel& model);

// g_k = G w_k^1 by forward propagation, without forming G.
std::vector<cvec> effective_vectors(const PhaseStack& stack, const ChannelModel& model);

// Reference linearization of user `user` at layer `layer` (0-based), built
// directly from the product definitions: C phi^layer = G w_user^1 p.
cmat linearize_layer(const PhaseStack& stack, const ChannelModel& model, int layer, int user, double p);

// Products used by a layer sweep. suffix(l) = Phi^L W^L ... Phi^{l+1} W^{l+1}
// (identity for the last layer) is computed once from the stack at sweep
// start; layer_input(k) = W^l ... Phi^1 w_k^1 follows the sweep forward as
// layers are finalized, so C_k^l = suffix(l) diag(layer_input(k) p_k).
class LayerSweep {
 public:
  LayerSweep(const PhaseStack& stack, const ChannelModel& model);

  int layer() const { return layer_; }
  const cmat& suffix() const { return suffix_[layer_]; }
  const cvec& layer_input(int user) const { return inputs_[user]; }
  cmat linearization(int user, double p) const;

  // Moves to the next layer using the (possibly updated) phases of the
  // current one from `stack`.
  void advance(const PhaseStack& stack);

 private:
  const ChannelModel* model_;
  int layer_ = 0;
  std::vector<cmat> suffix_;
  std::vector<cvec> inputs_;
};

}  // namespace simbeam
