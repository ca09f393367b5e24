#pragma once

#include "slamp/ops.hpp"

namespace slamp {

/// Diagonal Gaussian, [B, d] mean and log-variance.
template <class T>
struct GaussianParams {
  Var<T> mean;
  Var<T> log_variance;

  bool defined() const { return mean.defined(); }
  int dim() const { return mean.dim(1); }
};

/// z = mean + exp(log_variance / 2) * noise.
template <class T>
Var<T> reparameterize(const GaussianParams<T>& p, const Tensor<T>& noise) {
  if (noise.shape() != p.mean.shape())
    detail::shape_fail("reparameterize: noise " + shape_str(noise.shape()) + " vs mean " + shape_str(p.mean.shape()));
  return p.mean + exp(scale(p.log_variance, T(0.5))) * Var<T>(noise);
}

}  // namespace slamp
