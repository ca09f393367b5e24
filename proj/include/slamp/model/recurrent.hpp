#pragma once

#include <string>
#include <utility>
#include <vector>

#include "slamp/model/gaussian.hpp"
#include "slamp/nn.hpp"

namespace slamp {

/// Hidden and cell activations for every layer of one recurrent head.
template <class T>
using HeadState = std::vector<LstmState<T>>;

/// Linear embedding followed by stacked LSTM cells.
template <class T>
class LstmStack {
 public:
  LstmStack() = default;
  LstmStack(ParameterStore<T>& store, const std::string& name, int in_features, int units, int layers,
            std::mt19937_64& rng)
      : units_(units) {
    embed_ = Linear<T>(store, name + ".embed", in_features, units, rng);
    for (int i = 0; i < layers; ++i) cells_.emplace_back(store, name + ".lstm" + std::to_string(i), units, units, rng);
  }

  HeadState<T> zero_state(int batch) const {
    HeadState<T> s;
    for (const auto& c : cells_) s.push_back(c.zero_state(batch));
    return s;
  }

  /// Returns the new state; the top layer's hidden activation is state.back().hidden.
  HeadState<T> step(const HeadState<T>& state, const Var<T>& input) const {
    if (state.size() != cells_.size()) detail::shape_fail("recurrent state has wrong layer count");
    HeadState<T> next;
    Var<T> h = embed_(input);
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      next.push_back(cells_[i](h, state[i]));
      h = next.back().hidden;
    }
    return next;
  }

  int units() const noexcept { return units_; }

 private:
  int units_ = 0;
  Linear<T> embed_;
  std::vector<LstmCell<T>> cells_;
};

/// Recurrent head emitting a diagonal Gaussian over one latent stream.
template <class T>
class GaussianHead {
 public:
  GaussianHead() = default;
  GaussianHead(ParameterStore<T>& store, const std::string& name, int in_features, int latent, int units, int layers,
               double lv_min, double lv_max, std::mt19937_64& rng)
      : rnn_(store, name, in_features, units, layers, rng),
        mean_(store, name + ".mean", units, latent, rng),
        logvar_(store, name + ".logvar", units, latent, rng),
        lv_min_(static_cast<T>(lv_min)),
        lv_max_(static_cast<T>(lv_max)) {}

  HeadState<T> zero_state(int batch) const { return rnn_.zero_state(batch); }

  std::pair<HeadState<T>, GaussianParams<T>> step(const HeadState<T>& state, const Var<T>& features) const {
    HeadState<T> next = rnn_.step(state, features);
    const Var<T>& top = next.back().hidden;
    GaussianParams<T> p{mean_(top), clamp(logvar_(top), lv_min_, lv_max_)};
    return {std::move(next), std::move(p)};
  }

 private:
  LstmStack<T> rnn_;
  Linear<T> mean_, logvar_;
  T lv_min_{-10}, lv_max_{10};
};

/// Frame predictor: consumes [features, latent], emits g features (tanh).
template <class T>
class Predictor {
 public:
  Predictor() = default;
  Predictor(ParameterStore<T>& store, const std::string& name, int feature_dim, int latent, int units, int layers,
            std::mt19937_64& rng)
      : rnn_(store, name, feature_dim + latent, units, layers, rng), out_(store, name + ".out", units, feature_dim, rng) {}

  HeadState<T> zero_state(int batch) const { return rnn_.zero_state(batch); }

  std::pair<HeadState<T>, Var<T>> step(const HeadState<T>& state, const Var<T>& features, const Var<T>& latent) const {
    HeadState<T> next = rnn_.step(state, concat<T>({features, latent}, 1));
    Var<T> g = tanh(out_(next.back().hidden));
    return {std::move(next), std::move(g)};
  }

 private:
  LstmStack<T> rnn_;
  Linear<T> out_;
};

/// Per-rollout recurrent state for all six heads. Heads a variant does not
/// use stay empty.
template <class T>
struct RecurrentState {
  HeadState<T> posterior_pixel, prior_pixel, predictor_pixel;
  HeadState<T> posterior_flow, prior_flow, predictor_flow;
};

}  // namespace slamp
