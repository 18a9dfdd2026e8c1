#pragma once

#include "wnet/enhance/arch.hpp"
#include "wnet/nn/adam.hpp"
#include "wnet/nn/executor.hpp"

namespace wnet::enh {

/// Executable form of one recursion stage. Concat rows compile away into
/// multi-input convolutions; row_nodes maps each printable row id to the
/// node holding that row's output (post BN+ReLU where applicable).
struct CompiledStage {
  nn::Graph graph;
  int input_bad = -1;
  int input_prev = -1;
  int output = -1;  // final conv (raw, unclamped)
  int f_last = -1;  // last Add row: the feature map feeding the identity branch
  std::vector<std::pair<std::string, int>> row_nodes;

  int row_node(const std::string& row_id) const {
    for (const auto& [id, node] : row_nodes)
      if (id == row_id) return node;
    throw Error("compiled stage: no row " + row_id);
  }
};

CompiledStage compile_stage(const NetworkSpec& spec);

/// The recursive enhancer: x^0 = I_bad, x^t = stage(concat(I_bad, x^{t-1})),
/// parameters shared across stages.
template <class S>
class RecursiveEnhancer {
 public:
  RecursiveEnhancer(NetworkSpec spec, uint64_t seed)
      : spec_(std::move(spec)),
        stage_(compile_stage(spec_)),
        params_(nn::ParamStore<S>::materialize(stage_.graph.params, seed)),
        exec_(stage_.graph, params_) {}

  // The executor references member state; keep the object where it was built.
  RecursiveEnhancer(const RecursiveEnhancer&) = delete;
  RecursiveEnhancer& operator=(const RecursiveEnhancer&) = delete;

  struct Rollout {
    std::vector<nn::ForwardCache<S>> caches;  // one per stage
    std::vector<Tensor<S>> outputs;           // x^1 .. x^T, raw
    const Tensor<S>& final_output() const { return outputs.back(); }
  };

  /// Runs all T stages. Input must be [N,3,H,W]; spatial dims are preserved.
  /// The returned rollout is owned by the enhancer and overwritten by the
  /// next forward call (buffers are reused across steps).
  Rollout& forward(const Tensor<S>& bad, bool training) {
    if (bad.rank() != 4 || bad.dim(1) != 3)
      throw ShapeError("enhancer: input must be [N,3,H,W]");
    const int T = spec_.recursion_T;
    rollout_.caches.resize(static_cast<size_t>(T));
    rollout_.outputs.resize(static_cast<size_t>(T));
    const Tensor<S>* prev = &bad;
    for (int t = 0; t < T; ++t) {
      nn::ForwardCache<S>& cache = rollout_.caches[static_cast<size_t>(t)];
      exec_.forward_into({&bad, prev}, training, cache);
      rollout_.outputs[static_cast<size_t>(t)] = cache.value(stage_.output);
      prev = &rollout_.outputs[static_cast<size_t>(t)];
    }
    return rollout_;
  }

  /// Backpropagates through the unrolled stages, accumulating parameter
  /// gradients (shared weights sum over stages). output_grads[t] is the
  /// direct gradient on x^{t+1}; empty tensors are skipped. Extra taps are
  /// applied on the final stage (e.g. the identity-branch feature).
  void backward(const Rollout& r, std::vector<Tensor<S>> output_grads,
                nn::GradTaps<S> final_stage_taps = {}) {
    const int T = spec_.recursion_T;
    if (static_cast<int>(output_grads.size()) != T)
      throw ShapeError("enhancer backward: need one grad slot per stage");
    Tensor<S> carry;  // d(loss)/d(x^t) flowing from stage t+1's prev input
    for (int t = T - 1; t >= 0; --t) {
      nn::GradTaps<S> taps;
      Tensor<S>& direct = output_grads[static_cast<size_t>(t)];
      if (!carry.empty()) {
        if (direct.empty()) {
          direct = std::move(carry);
        } else {
          for (size_t i = 0; i < direct.numel(); ++i) direct[i] += carry[i];
        }
      }
      if (!direct.empty()) taps.emplace_back(stage_.output, std::move(direct));
      if (t == T - 1)
        for (auto& tap : final_stage_taps) taps.push_back(std::move(tap));
      auto input_grads = exec_.backward(r.caches[static_cast<size_t>(t)], taps, true);
      carry = std::move(input_grads[1]);  // gradient w.r.t. input_prev
    }
  }

  const NetworkSpec& spec() const { return spec_; }
  const CompiledStage& stage() const { return stage_; }
  nn::ParamStore<S>& params() { return params_; }
  const nn::ParamStore<S>& params() const { return params_; }

 private:
  NetworkSpec spec_;
  CompiledStage stage_;
  nn::ParamStore<S> params_;
  nn::Executor<S> exec_;
  Rollout rollout_;
};

}  // namespace wnet::enh
