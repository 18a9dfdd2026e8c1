#pragma once

#include <cmath>
#include <vector>

#include "wnet/nn/param_store.hpp"

namespace wnet::nn {

/// Adaptive-moment optimizer over the trainable subset of one or more
/// parameter stores. Frozen parameters have no state and are never touched.
template <class S>
class Adam {
 public:
  Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void attach(ParamStore<S>& store) {
    stores_.push_back(&store);
    auto& m = m_.emplace_back();
    auto& v = v_.emplace_back();
    m.resize(static_cast<size_t>(store.count()));
    v.resize(static_cast<size_t>(store.count()));
    for (int i = 0; i < store.count(); ++i) {
      if (!store.spec(i).trainable) continue;
      m[static_cast<size_t>(i)] = Tensor<S>(store.value(i).shape());
      v[static_cast<size_t>(i)] = Tensor<S>(store.value(i).shape());
    }
  }

  /// Global-norm gradient clip over all trainable tensors, then one Adam
  /// update. Returns the pre-clip gradient norm.
  double step(double lr, double clip_norm) {
    for (size_t s = 0; s < stores_.size(); ++s)
      if (static_cast<size_t>(stores_[s]->count()) != m_[s].size())
        throw Error("adam: parameters were added after attach()");
    ++t_;
    double norm_sq = 0.0;
    for_each_trainable([&](Tensor<S>& /*value*/, Tensor<S>& grad, Tensor<S>&, Tensor<S>&) {
      for (size_t i = 0; i < grad.numel(); ++i)
        norm_sq += static_cast<double>(grad[i]) * static_cast<double>(grad[i]);
    });
    const double norm = std::sqrt(norm_sq);
    const double scale = (clip_norm > 0.0 && norm > clip_norm) ? clip_norm / norm : 1.0;

    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for_each_trainable([&](Tensor<S>& value, Tensor<S>& grad, Tensor<S>& m, Tensor<S>& v) {
      for (size_t i = 0; i < grad.numel(); ++i) {
        const double g = static_cast<double>(grad[i]) * scale;
        const double mi = beta1_ * static_cast<double>(m[i]) + (1.0 - beta1_) * g;
        const double vi = beta2_ * static_cast<double>(v[i]) + (1.0 - beta2_) * g * g;
        m[i] = static_cast<S>(mi);
        v[i] = static_cast<S>(vi);
        value[i] -= static_cast<S>(lr * (mi / bc1) / (std::sqrt(vi / bc2) + eps_));
      }
    });
    return norm;
  }

 private:
  template <class F>
  void for_each_trainable(F&& f) {
    for (size_t s = 0; s < stores_.size(); ++s) {
      ParamStore<S>& store = *stores_[s];
      for (int i = 0; i < store.count(); ++i) {
        if (!store.spec(i).trainable) continue;
        f(store.value(i), store.grad(i), m_[s][static_cast<size_t>(i)],
          v_[s][static_cast<size_t>(i)]);
      }
    }
  }

  double beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<ParamStore<S>*> stores_;
  std::vector<std::vector<Tensor<S>>> m_, v_;
};

}  // namespace wnet::nn
