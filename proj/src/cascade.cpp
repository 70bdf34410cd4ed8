#include "simbeam/cascade.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "simbeam/rng.hpp"

namespace simbeam {

PhaseResolution PhaseResolution::discrete(int b) {
  if (b < 1 || b > 16) throw std::invalid_argument("phase resolution must be between 1 and 16 bits");
  return {b};
}

PhaseStack::PhaseStack(int L, int N, PhaseResolution res)
    : L_(L), N_(N), res_(res), indices_(static_cast<std::size_t>(L) * N, 0), theta_(indices_.size(), 0.0) {
  if (L < 1 || N < 1) throw std::invalid_argument("PhaseStack: dimensions must be positive");
}

PhaseStack PhaseStack::random(int L, int N, PhaseResolution res, std::uint64_t seed) {
  PhaseStack stack(L, N, res);
  CounterRng rng(seed, streams::kPhaseInit);
  for (std::size_t i = 0; i < stack.theta_.size(); ++i) {
    if (res.is_continuous()) {
      stack.theta_[i] = 2.0 * kPi * rng.uniform();
    } else {
      const int t = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(res.levels()));
      stack.indices_[i] = t;
      stack.theta_[i] = t * res.step();
    }
  }
  return stack;
}

std::size_t PhaseStack::offset(int layer, int n) const {
  return static_cast<std::size_t>(layer) * N_ + static_cast<std::size_t>(n);
}

void PhaseStack::check_layer(int layer, std::size_t count) const {
  if (layer < 0 || layer >= L_) throw std::out_of_range("PhaseStack: layer out of range");
  if (count != static_cast<std::size_t>(N_)) throw std::invalid_argument("PhaseStack: expected one value per atom");
}

int PhaseStack::index(int layer, int n) const {
  if (res_.is_continuous()) throw std::logic_error("PhaseStack: continuous stacks have no grid index");
  return indices_[offset(layer, n)];
}

cvec PhaseStack::phi(int layer) const {
  cvec v(N_);
  for (int n = 0; n < N_; ++n) v[n] = phasor(layer, n);
  return v;
}

std::vector<int> PhaseStack::layer_indices(int layer) const {
  return {indices_.begin() + static_cast<std::ptrdiff_t>(offset(layer, 0)),
          indices_.begin() + static_cast<std::ptrdiff_t>(offset(layer, 0) + N_)};
}

void PhaseStack::set_layer(int layer, std::span<const int> indices) {
  check_layer(layer, indices.size());
  if (res_.is_continuous()) throw std::logic_error("PhaseStack: continuous stacks take angles, not indices");
  for (int t : indices)
    if (t < 0 || t >= res_.levels()) throw std::out_of_range("PhaseStack: phase index outside the b-bit grid");
  for (int n = 0; n < N_; ++n) {
    indices_[offset(layer, n)] = indices[n];
    theta_[offset(layer, n)] = indices[n] * res_.step();
  }
  ++version_;
}

void PhaseStack::set_layer_angles(int layer, std::span<const double> angles) {
  check_layer(layer, angles.size());
  if (!res_.is_continuous()) throw std::logic_error("PhaseStack: discrete stacks take grid indices");
  for (int n = 0; n < N_; ++n) theta_[offset(layer, n)] = angles[n];
  ++version_;
}

void PhaseStack::set_layer_phasors(int layer, const cvec& phasors) {
  check_layer(layer, static_cast<std::size_t>(phasors.size()));
  if (res_.is_continuous()) {
    std::vector<double> angles(N_);
    for (int n = 0; n < N_; ++n) angles[n] = std::arg(phasors[n]);
    set_layer_angles(layer, angles);
    return;
  }
  std::vector<int> idx(N_);
  const int levels = res_.levels();
  for (int n = 0; n < N_; ++n) {
    const double a = std::arg(phasors[n]) / res_.step();
    idx[n] = static_cast<int>(std::lround(a)) % levels;
    if (idx[n] < 0) idx[n] += levels;
  }
  set_layer(layer, idx);
}

bool PhaseStack::operator==(const PhaseStack& other) const {
  return L_ == other.L_ && N_ == other.N_ && res_.bits == other.res_.bits && indices_ == other.indices_ &&
         theta_ == other.theta_;
}

std::string to_text(const PhaseStack& stack) {
  std::string out;
  char buf[32];
  for (int l = 0; l < stack.layers(); ++l) {
    for (int n = 0; n < stack.atoms(); ++n) {
      if (n) out += ' ';
      std::to_chars_result r;
      if (stack.resolution().is_continuous())
        r = std::to_chars(buf, buf + sizeof(buf), stack.theta(l, n), std::chars_format::general, 17);
      else
        r = std::to_chars(buf, buf + sizeof(buf), stack.index(l, n));
      out.append(buf, r.ptr);
    }
    out += '\n';
  }
  return out;
}

PhaseStack stack_from_text(std::string_view text, PhaseResolution res) {
  std::vector<std::vector<double>> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (!ls.eof()) throw std::invalid_argument("stack_from_text: malformed value");
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("stack_from_text: empty stack");
  const int L = static_cast<int>(rows.size());
  const int N = static_cast<int>(rows.front().size());
  PhaseStack stack(L, N, res);
  for (int l = 0; l < L; ++l) {
    if (static_cast<int>(rows[l].size()) != N) throw std::invalid_argument("stack_from_text: ragged rows");
    if (res.is_continuous()) {
      stack.set_layer_angles(l, rows[l]);
    } else {
      std::vector<int> idx;
      for (double v : rows[l]) {
        if (v != std::floor(v)) throw std::invalid_argument("stack_from_text: non-integer phase index");
        idx.push_back(static_cast<int>(v));
      }
      stack.set_layer(l, idx);
    }
  }
  return stack;
}

namespace {

void check_dims(const PhaseStack& stack, const ChannelModel& model) {
  if (stack.layers() != model.L() || stack.atoms() != model.N())
    throw std::invalid_argument("phase stack dimensions do not match the channel model");
}

}  // namespace

CascadeOperator materialize_G(const PhaseStack& stack, const ChannelModel& model) {
  check_dims(stack, model);
  CascadeOperator op;
  op.G = stack.phi(0).asDiagonal();
  for (int l = 1; l < stack.layers(); ++l) op.G = stack.phi(l).asDiagonal() * (model.W[l - 1] * op.G);
  for (const auto& w : model.w1) op.g.push_back(op.G * w);
  return op;
}

std::vector<cvec> effective_vectors(const PhaseStack& stack, const ChannelModel& model) {
  check_dims(stack, model);
  std::vector<cvec> g;
  g.reserve(model.w1.size());
  for (const auto& w : model.w1) {
    cvec v = stack.phi(0).cwiseProduct(w);
    for (int l = 1; l < stack.layers(); ++l) v = stack.phi(l).cwiseProduct(model.W[l - 1] * v);
    g.push_back(std::move(v));
  }
  return g;
}

cmat linearize_layer(const PhaseStack& stack, const ChannelModel& model, int layer, int user, double p) {
  check_dims(stack, model);
  const int L = stack.layers();
  const int N = stack.atoms();
  if (layer < 0 || layer >= L) throw std::out_of_range("linearize_layer: layer out of range");
  if (user < 0 || user >= model.K()) throw std::out_of_range("linearize_layer: user out of range");

  // Signal arriving at `layer`: W^l Phi^{l-1} ... Phi^1 w_i (w_i for the first layer).
  cvec incoming = model.w1[user] * p;
  for (int l = 0; l < layer; ++l) incoming = model.W[l] * stack.phi(l).cwiseProduct(incoming);

  // Everything after `layer`: Phi^L W^L ... Phi^{l+1} W^{l+1}.
  cmat after = cmat::Identity(N, N);
  for (int l = layer + 1; l < L; ++l) after = stack.phi(l).asDiagonal() * (model.W[l - 1] * after);

  if (layer == L - 1) return incoming.asDiagonal();
  return after * incoming.asDiagonal();
}

LayerSweep::LayerSweep(const PhaseStack& stack, const ChannelModel& model) : model_(&model) {
  check_dims(stack, model);
  const int L = stack.layers();
  const int N = stack.atoms();
  suffix_.resize(L);
  suffix_[L - 1] = cmat::Identity(N, N);
  for (int l = L - 2; l >= 0; --l) suffix_[l] = suffix_[l + 1] * stack.phi(l + 1).asDiagonal() * model.W[l];
  inputs_ = model.w1;
}

cmat LayerSweep::linearization(int user, double p) const { return suffix() * (inputs_[user] * p).asDiagonal(); }

void LayerSweep::advance(const PhaseStack& stack) {
  if (layer_ + 1 >= static_cast<int>(suffix_.size())) throw std::logic_error("LayerSweep: already at the last layer");
  const cvec phi = stack.phi(layer_);
  for (auto& v : inputs_) v = model_->W[layer_] * phi.cwiseProduct(v);
  ++layer_;
}

}  // namespace simbeam
