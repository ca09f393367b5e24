#pragma once

#include <vector>

#include "slamp/model/gaussian.hpp"

namespace slamp {

/// Everything produced while predicting one target frame.
/// Flow-stream fields are empty for the baseline and svg variants; x_f,
/// flow and mask are empty for svg. Posterior fields are empty for
/// generation steps past the conditioning window.
template <class T>
struct StepOutput {
  int target_index = 0;  // 0-based frame index being predicted
  bool from_posterior = true;
  Var<T> appearance;  // x_p
  Var<T> motion;      // x_f
  Var<T> combined;    // x_hat
  Var<T> flow;
  Var<T> mask;
  GaussianParams<T> posterior_pixel, prior_pixel, posterior_flow, prior_flow;
  Var<T> latent_pixel, latent_flow;
};

template <class T>
struct RolloutOutput {
  std::vector<StepOutput<T>> steps;
  /// Frames actually fed as "previous frame" at each step (ground truth or generated).
  std::vector<Tensor<T>> inputs;
};

}  // namespace slamp
