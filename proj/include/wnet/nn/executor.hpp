#pragma once

#include <utility>
#include <vector>

#include "wnet/nn/graph.hpp"
#include "wnet/nn/kernels.hpp"
#include "wnet/nn/param_store.hpp"

namespace wnet::nn {

template <class S>
struct ForwardCache {
  std::vector<Tensor<S>> out;  // per node
  std::vector<Tensor<S>> bn_mean, bn_invstd;
  bool training = false;

  const Tensor<S>& value(int node) const { return out[static_cast<size_t>(node)]; }
};

/// Gradients injected at arbitrary nodes during the reverse pass; the
/// graph output is just another tap.
template <class S>
using GradTaps = std::vector<std::pair<int, Tensor<S>>>;

template <class S>
class Executor {
 public:
  Executor(const Graph& graph, ParamStore<S>& params) : g_(graph), params_(params) {}

  ForwardCache<S> forward(const std::vector<const Tensor<S>*>& inputs, bool training) {
    ForwardCache<S> cache;
    forward_into(inputs, training, cache);
    return cache;
  }

  /// Reuses the cache's buffers when shapes repeat (the hot training path).
  void forward_into(const std::vector<const Tensor<S>*>& inputs, bool training,
                    ForwardCache<S>& cache) {
    if (inputs.size() != g_.inputs.size()) throw ShapeError("executor: wrong input count");
    cache.training = training;
    cache.out.resize(g_.nodes.size());
    cache.bn_mean.resize(g_.nodes.size());
    cache.bn_invstd.resize(g_.nodes.size());

    size_t input_idx = 0;
    for (size_t id = 0; id < g_.nodes.size(); ++id) {
      const Node& n = g_.nodes[id];
      switch (n.kind) {
        case OpKind::Input: {
          const Tensor<S>* in = inputs[input_idx++];
          if (in->rank() != 4 || in->dim(1) != n.out_channels)
            throw ShapeError("executor: input '" + n.name + "' expects NCHW with " +
                             std::to_string(n.out_channels) + " channels");
          cache.out[id] = *in;
          break;
        }
        case OpKind::Conv: {
          std::vector<const Tensor<S>*> srcs;
          srcs.reserve(n.inputs.size());
          int in_ch = 0;
          for (int s : n.inputs) {
            srcs.push_back(&cache.out[static_cast<size_t>(s)]);
            in_ch += g_.nodes[static_cast<size_t>(s)].out_channels;
          }
          const ConvGeom geom{in_ch, n.out_channels, n.kh, n.kw, n.stride, n.pad};
          conv2d_forward(srcs, params_.value(n.weight), params_.value(n.bias), geom,
                         cache.out[id], col_);
          break;
        }
        case OpKind::BatchNorm: {
          const Tensor<S>& x = cache.out[static_cast<size_t>(n.inputs[0])];
          if (training) {
            batchnorm_forward_train(x, params_.value(n.gamma), params_.value(n.beta),
                                    params_.value(n.run_mean), params_.value(n.run_var),
                                    kBnMomentum, kBnEps, cache.out[id], cache.bn_mean[id],
                                    cache.bn_invstd[id]);
          } else {
            batchnorm_forward_eval(x, params_.value(n.gamma), params_.value(n.beta),
                                   params_.value(n.run_mean), params_.value(n.run_var), kBnEps,
                                   cache.out[id]);
          }
          break;
        }
        case OpKind::ReLU:
          relu_forward(cache.out[static_cast<size_t>(n.inputs[0])], cache.out[id]);
          break;
        case OpKind::Add:
          add_forward(cache.out[static_cast<size_t>(n.inputs[0])],
                      cache.out[static_cast<size_t>(n.inputs[1])], cache.out[id]);
          break;
      }
    }
  }

  /// Reverse pass. Returns one gradient tensor per graph input (zeros if an
  /// input never receives gradient). With param_grads=false the parameter
  /// gradients are not even accumulated — the store stays untouched, which
  /// is how frozen networks are run.
  std::vector<Tensor<S>> backward(const ForwardCache<S>& cache, const GradTaps<S>& taps,
                                  bool param_grads = true) {
    gbuf_.resize(g_.nodes.size());
    glive_.assign(g_.nodes.size(), 0);
    auto ensure = [&](int id) -> Tensor<S>& {
      Tensor<S>& t = gbuf_[static_cast<size_t>(id)];
      if (!glive_[static_cast<size_t>(id)]) {
        t.ensure_shape(cache.out[static_cast<size_t>(id)].shape());
        t.fill(S(0));
        glive_[static_cast<size_t>(id)] = 1;
      }
      return t;
    };

    for (const auto& [node, grad] : taps) {
      Tensor<S>& dst = ensure(node);
      dst.require_shape(grad, "executor tap");
      for (size_t i = 0; i < grad.numel(); ++i) dst[i] += grad[i];
    }

    for (int id = static_cast<int>(g_.nodes.size()) - 1; id >= 0; --id) {
      if (!glive_[static_cast<size_t>(id)]) continue;
      const Node& n = g_.nodes[static_cast<size_t>(id)];
      const Tensor<S>& dout = gbuf_[static_cast<size_t>(id)];
      switch (n.kind) {
        case OpKind::Input:
          break;
        case OpKind::Conv: {
          std::vector<const Tensor<S>*> srcs;
          std::vector<Tensor<S>*> dsrcs;
          int in_ch = 0;
          for (int s : n.inputs) {
            srcs.push_back(&cache.out[static_cast<size_t>(s)]);
            dsrcs.push_back(&ensure(s));
            in_ch += g_.nodes[static_cast<size_t>(s)].out_channels;
          }
          const ConvGeom geom{in_ch, n.out_channels, n.kh, n.kw, n.stride, n.pad};
          const bool train_w = param_grads && params_.spec(n.weight).trainable;
          conv2d_backward(srcs, params_.value(n.weight), geom, dout, dsrcs,
                          train_w ? &params_.grad(n.weight) : nullptr,
                          train_w ? &params_.grad(n.bias) : nullptr, col_, dcol_);
          break;
        }
        case OpKind::BatchNorm: {
          const int src = n.inputs[0];
          const bool train_p = param_grads && params_.spec(n.gamma).trainable;
          if (cache.training) {
            batchnorm_backward_train(cache.out[static_cast<size_t>(src)], params_.value(n.gamma),
                                     cache.bn_mean[static_cast<size_t>(id)],
                                     cache.bn_invstd[static_cast<size_t>(id)], dout, ensure(src),
                                     train_p ? &params_.grad(n.gamma) : nullptr,
                                     train_p ? &params_.grad(n.beta) : nullptr);
          } else {
            batchnorm_backward_eval(params_.value(n.gamma), params_.value(n.run_var), kBnEps, dout,
                                    ensure(src));
          }
          break;
        }
        case OpKind::ReLU:
          relu_backward(cache.out[static_cast<size_t>(id)], dout, ensure(n.inputs[0]));
          break;
        case OpKind::Add:
          for (int s : n.inputs) {
            Tensor<S>& dst = ensure(s);
            for (size_t i = 0; i < dout.numel(); ++i) dst[i] += dout[i];
          }
          break;
      }
    }

    std::vector<Tensor<S>> input_grads;
    input_grads.reserve(g_.inputs.size());
    for (int in_id : g_.inputs) input_grads.push_back(ensure(in_id));  // copy out of scratch
    return input_grads;
  }

  static constexpr double kBnEps = 1e-5;
  static constexpr double kBnMomentum = 0.1;

 private:
  const Graph& g_;
  ParamStore<S>& params_;
  std::vector<S> col_, dcol_;
  std::vector<Tensor<S>> gbuf_;  // reverse-pass scratch, reused across calls
  std::vector<char> glive_;
};

}  // namespace wnet::nn
