#pragma once

#include <optional>
#include <vector>

#include "wnet/enhance/enhancer.hpp"
#include "wnet/fie/fie.hpp"
#include "wnet/head/task_head.hpp"

namespace wnet::objective {

struct ObjectiveConfig {
  double epsilon = 5e-3;    // Charbonnier knee
  double alpha = 0.0;       // task-loss weight
  double beta_fi = 0.0;     // identity-loss weight
  // The printed recovery-loss formula reduces to mean squared error plus a
  // constant; the robust Charbonnier form is the default, the printed form
  // stays available for comparison.
  bool literal_recovery_form = false;

  void validate() const {
    if (!(epsilon > 0.0)) throw ConfigError("objective: epsilon must be > 0");
    if (alpha < 0.0 || beta_fi < 0.0) throw ConfigError("objective: weights must be >= 0");
  }
};

/// Mean over elements of sqrt(diff^2 + eps^2). Exact recovery gives eps.
template <class S>
double charbonnier_loss(const Tensor<S>& pred, const Tensor<S>& target, double eps) {
  pred.require_shape(target, "charbonnier_loss");
  double acc = 0.0;
  for (size_t i = 0; i < pred.numel(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    acc += std::sqrt(d * d + eps * eps);
  }
  return acc / static_cast<double>(pred.numel());
}

/// Same, accumulating weight * dL/dpred into dpred.
template <class S>
double charbonnier_loss_grad(const Tensor<S>& pred, const Tensor<S>& target, double eps,
                             double weight, Tensor<S>& dpred) {
  pred.require_shape(target, "charbonnier_loss");
  const double inv_m = 1.0 / static_cast<double>(pred.numel());
  double acc = 0.0;
  for (size_t i = 0; i < pred.numel(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    const double r = std::sqrt(d * d + eps * eps);
    acc += r;
    dpred[i] += static_cast<S>(weight * inv_m * d / r);
  }
  return acc * inv_m;
}

/// The formula as printed: mean(diff^2) + eps^2.
template <class S>
double literal_recovery_loss_grad(const Tensor<S>& pred, const Tensor<S>& target, double eps,
                                  double weight, Tensor<S>* dpred) {
  pred.require_shape(target, "literal_recovery_loss");
  const double inv_m = 1.0 / static_cast<double>(pred.numel());
  double acc = 0.0;
  for (size_t i = 0; i < pred.numel(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    acc += d * d;
    if (dpred) (*dpred)[i] += static_cast<S>(weight * inv_m * 2.0 * d);
  }
  return acc * inv_m + eps * eps;
}

template <class S>
struct Batch {
  Tensor<S> degraded;  // [N,3,H,W]
  Tensor<S> clean;     // [N,3,H,W]
  std::vector<synth::ToyLabel> labels;  // empty when the task loss is off
};

struct ObjectiveTerms {
  double total = 0.0;
  double recovery = 0.0;  // summed over stages, batch-meaned
  double task = 0.0;
  double identity = 0.0;
  std::vector<double> recovery_per_stage;

  bool finite() const {
    return std::isfinite(total) && std::isfinite(recovery) && std::isfinite(task) &&
           std::isfinite(identity);
  }
};

/// One evaluation of the composite objective
///   (1/N) sum_i [ sum_t L_R(x_i^t, gt_i) + alpha L_HT + beta L_FI ]
/// with the task and identity terms taken on the final stage output. With
/// compute_grads, gradients land in the enhancer and FIE stores only; a
/// frozen head never accumulates any.
template <class S>
ObjectiveTerms total_objective(enh::RecursiveEnhancer<S>& enhancer,
                               fie::IdentityProjector<S>& fie_net,
                               head::TaskHead<S>* task_head, const Batch<S>& batch,
                               const ObjectiveConfig& cfg, bool compute_grads,
                               bool bn_training = true) {
  cfg.validate();
  const bool want_task = cfg.alpha > 0.0;
  const bool want_identity = cfg.beta_fi > 0.0;
  if ((want_task || want_identity) && task_head == nullptr)
    throw ConfigError("objective: task/identity terms need a task head");
  if (want_task && batch.labels.size() != static_cast<size_t>(batch.degraded.dim(0)))
    throw ConfigError("objective: task loss enabled but labels are missing");
  if ((want_task || want_identity) && !task_head->frozen())
    throw ConfigError("objective: the task head must be frozen");

  const int N = batch.degraded.dim(0);
  const int T = enhancer.spec().recursion_T;
  auto& rollout = enhancer.forward(batch.degraded, bn_training);

  ObjectiveTerms terms;
  std::vector<Tensor<S>> stage_grads(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t) {
    const Tensor<S>& x = rollout.outputs[static_cast<size_t>(t)];
    double l;
    if (compute_grads) {
      stage_grads[static_cast<size_t>(t)] = Tensor<S>(x.shape());
      l = cfg.literal_recovery_form
              ? literal_recovery_loss_grad(x, batch.clean, cfg.epsilon, 1.0,
                                           &stage_grads[static_cast<size_t>(t)])
              : charbonnier_loss_grad(x, batch.clean, cfg.epsilon, 1.0,
                                      stage_grads[static_cast<size_t>(t)]);
    } else {
      l = cfg.literal_recovery_form
              ? literal_recovery_loss_grad(x, batch.clean, cfg.epsilon, 1.0,
                                           static_cast<Tensor<S>*>(nullptr))
              : charbonnier_loss(x, batch.clean, cfg.epsilon);
    }
    terms.recovery_per_stage.push_back(l);
    terms.recovery += l;
  }

  nn::GradTaps<S> final_taps;
  if (want_task || want_identity) {
    const Tensor<S>& pred = rollout.final_output();
    auto head_out = task_head->forward(pred);

    Tensor<S> dlogits, doffset;
    if (want_task) {
      if (compute_grads) {
        dlogits = Tensor<S>(head_out.logits.shape());
        doffset = Tensor<S>({N});
      }
      terms.task = task_head->task_loss(head_out, batch.labels,
                                        compute_grads ? &dlogits : nullptr,
                                        compute_grads ? &doffset : nullptr) /
                   static_cast<double>(N);
      if (compute_grads) {
        const S scale = static_cast<S>(cfg.alpha / N);
        for (auto& v : dlogits.flat()) v *= scale;
        for (auto& v : doffset.flat()) v *= scale;
      }
    }

    std::optional<Tensor<S>> df_ht;
    typename fie::IdentityProjector<S>::Result r_en, r_ht;
    if (want_identity) {
      const Tensor<S>& f_en = rollout.caches.back().value(enhancer.stage().f_last);
      r_en = fie_net.forward(f_en);
      r_ht = fie_net.forward(head_out.f_last);
      double l_fi = 0.0;
      Tensor<S> dz_en, dz_ht;
      if (compute_grads) {
        dz_en = Tensor<S>(r_en.z.shape());
        dz_ht = Tensor<S>(r_ht.z.shape());
      }
      const double w = cfg.beta_fi / N;
      for (int n = 0; n < N; ++n) {
        const S* ze = &r_en.z[static_cast<size_t>(n) * fie::kLatentDim];
        const S* zh = &r_ht.z[static_cast<size_t>(n) * fie::kLatentDim];
        l_fi += fie::feature_identity_loss(ze, zh);
        if (compute_grads) {
          for (int k = 0; k < fie::kLatentDim; ++k) {
            const S d = ze[k] - zh[k];
            dz_en[static_cast<size_t>(n) * fie::kLatentDim + k] += static_cast<S>(2.0 * w) * d;
            dz_ht[static_cast<size_t>(n) * fie::kLatentDim + k] -= static_cast<S>(2.0 * w) * d;
          }
        }
      }
      terms.identity = l_fi / static_cast<double>(N);
      if (compute_grads) {
        Tensor<S> df_en = fie_net.backward(r_en, dz_en, true);
        final_taps.emplace_back(enhancer.stage().f_last, std::move(df_en));
        df_ht = fie_net.backward(r_ht, dz_ht, true);
      }
    }

    if (compute_grads && (want_task || df_ht.has_value())) {
      Tensor<S> dpred = task_head->backward_to_input(
          head_out, want_task ? &dlogits : nullptr, want_task ? &doffset : nullptr,
          df_ht ? &*df_ht : nullptr);
      Tensor<S>& g = stage_grads.back();
      if (g.empty()) g = std::move(dpred);
      else
        for (size_t i = 0; i < g.numel(); ++i) g[i] += dpred[i];
    }
  }

  if (compute_grads) enhancer.backward(rollout, std::move(stage_grads), std::move(final_taps));

  terms.total = terms.recovery + cfg.alpha * terms.task + cfg.beta_fi * terms.identity;
  return terms;
}

}  // namespace wnet::objective
