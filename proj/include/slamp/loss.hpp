#pragma once

#include <span>
#include <string>
#include <vector>

#include "slamp/model/config.hpp"
#include "slamp/rollout/step_output.hpp"

namespace slamp {

/// Analytic KL(q || p) between diagonal Gaussians, summed over every entry
/// (latent dimensions and batch rows).
template <class T>
Var<T> gaussian_kl(const GaussianParams<T>& q, const GaussianParams<T>& p) {
  if (q.mean.shape() != p.mean.shape() || q.log_variance.shape() != p.log_variance.shape() ||
      q.mean.shape() != q.log_variance.shape())
    detail::shape_fail("gaussian_kl: q " + shape_str(q.mean.shape()) + " vs p " + shape_str(p.mean.shape()));
  const Var<T> var_ratio = exp(q.log_variance - p.log_variance);
  const Var<T> mahalanobis = square(p.mean - q.mean) * exp(scale(p.log_variance, T{-1}));
  // Log-variance difference first so that KL(q, q) is exactly zero.
  return scale(sum(add_scalar(var_ratio + mahalanobis + (p.log_variance - q.log_variance), T{-1})), T(0.5));
}

/// Sum of squared errors over pixels, averaged over the batch.
template <class T>
Var<T> recon_l2(const Var<T>& pred, const Var<T>& target) {
  if (pred.shape() != target.shape())
    detail::shape_fail("recon_l2: " + shape_str(pred.shape()) + " vs " + shape_str(target.shape()));
  return scale(sum(square(pred - target)), T{1} / static_cast<T>(pred.dim(0)));
}

/// Sequence form: summed over time as well.
template <class T>
Var<T> recon_l2(std::span<const Var<T>> pred, std::span<const Var<T>> target) {
  if (pred.size() != target.size() || pred.empty()) detail::shape_fail("recon_l2: sequence length mismatch");
  Var<T> total = recon_l2(pred[0], target[0]);
  for (std::size_t i = 1; i < pred.size(); ++i) total = total + recon_l2(pred[i], target[i]);
  return total;
}

/// Reconstruction fields already carry their weights, so
/// total = recon_combined + recon_appearance + recon_motion + beta * (kl_pixel + kl_flow).
template <class T>
struct LossBreakdown {
  double recon_combined = 0, recon_appearance = 0, recon_motion = 0;
  double kl_pixel = 0, kl_flow = 0;
  double beta = 0;
  double total_value = 0;
  Var<T> total;

  double reconstruction() const { return recon_combined + recon_appearance + recon_motion; }
};

namespace detail {

template <class T>
LossBreakdown<T> assemble_elbo(std::span<const StepOutput<T>> steps, std::span<const Var<T>> targets, double beta,
                               const ReconWeights& w, bool two_streams) {
  if (steps.empty()) throw PreconditionError("elbo: no steps");
  if (steps.size() != targets.size())
    throw PreconditionError("elbo: " + std::to_string(steps.size()) + " steps but " + std::to_string(targets.size()) +
                            " targets");
  const T inv_b = T{1} / static_cast<T>(targets[0].dim(0));
  Var<T> rc, ra, rm, klp, klf;
  auto acc = [](Var<T>& into, const Var<T>& v) { into = into.defined() ? into + v : v; };
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    if (!s.posterior_pixel.defined() || !s.prior_pixel.defined())
      throw PreconditionError("elbo: step " + std::to_string(i) + " lacks pixel-stream posterior/prior");
    acc(rc, recon_l2(s.combined, targets[i]));
    acc(ra, recon_l2(s.appearance, targets[i]));
    if (s.motion.defined()) acc(rm, recon_l2(s.motion, targets[i]));
    acc(klp, scale(gaussian_kl(s.posterior_pixel, s.prior_pixel), inv_b));
    if (two_streams) {
      if (!s.posterior_flow.defined() || !s.prior_flow.defined())
        throw PreconditionError("elbo: step " + std::to_string(i) + " lacks flow-stream posterior/prior");
      acc(klf, scale(gaussian_kl(s.posterior_flow, s.prior_flow), inv_b));
    }
  }
  LossBreakdown<T> out;
  out.beta = beta;
  Var<T> total = scale(rc, static_cast<T>(w.combined));
  out.recon_combined = w.combined * static_cast<double>(rc.item());
  total = total + scale(ra, static_cast<T>(w.appearance));
  out.recon_appearance = w.appearance * static_cast<double>(ra.item());
  if (rm.defined()) {
    total = total + scale(rm, static_cast<T>(w.motion));
    out.recon_motion = w.motion * static_cast<double>(rm.item());
  }
  Var<T> kl = klp;
  out.kl_pixel = static_cast<double>(klp.item());
  if (klf.defined()) {
    kl = kl + klf;
    out.kl_flow = static_cast<double>(klf.item());
  }
  out.total = total + scale(kl, static_cast<T>(beta));
  out.total_value = static_cast<double>(out.total.item());
  return out;
}

}  // namespace detail

/// Single latent stream: sum_t [reconstructions] + beta * sum_t KL(q_t || p_t).
template <class T>
LossBreakdown<T> elbo_baseline(std::span<const StepOutput<T>> steps, std::span<const Var<T>> targets, double beta,
                               const ReconWeights& weights = {}) {
  return detail::assemble_elbo(steps, targets, beta, weights, false);
}

/// Pixel and flow streams, each with its own per-step KL.
template <class T>
LossBreakdown<T> elbo_slamp(std::span<const StepOutput<T>> steps, std::span<const Var<T>> targets, double beta,
                            const ReconWeights& weights = {}) {
  return detail::assemble_elbo(steps, targets, beta, weights, true);
}

/// Dispatches on the model variant.
template <class T>
LossBreakdown<T> elbo(Variant v, std::span<const StepOutput<T>> steps, std::span<const Var<T>> targets, double beta,
                      const ReconWeights& weights = {}) {
  return v == Variant::slamp ? elbo_slamp(steps, targets, beta, weights) : elbo_baseline(steps, targets, beta, weights);
}

}  // namespace slamp
