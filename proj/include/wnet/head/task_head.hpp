#pragma once

#include <memory>
#include <span>

#include <json.hpp>

#include "wnet/nn/adam.hpp"
#include "wnet/nn/executor.hpp"
#include "wnet/synth/dataset.hpp"

namespace wnet::head {

using nlohmann::json;

struct HeadCapability {
  std::string prediction_type = "class3+offset";
  std::string loss_type = "cross_entropy+squared_error";
  int num_classes = 3;
  int feature_channels = 32;  // channels of f_last
  int feature_stride = 8;     // spatial downscale of f_last vs the input

  json to_json() const {
    return json{{"prediction_type", prediction_type}, {"loss_type", loss_type},
                {"num_classes", num_classes},         {"feature_channels", feature_channels},
                {"feature_stride", feature_stride}};
  }
};

template <class S>
struct HeadOutputs {
  Tensor<S> logits;  // [N, num_classes]
  Tensor<S> offset;  // [N]
  Tensor<S> f_last;  // [N, C, h, w] last conv feature map
  // Backward bookkeeping.
  nn::ForwardCache<S> cache;
  Tensor<S> pooled;  // [N, C]
};

/// The three hooks a perception network must provide to plug into the
/// trainer: forward, a task loss with output gradients, and backward to the
/// input image. docs/task_head_adapter.md walks through writing one.
template <class S>
class TaskHead {
 public:
  virtual ~TaskHead() = default;
  virtual HeadCapability capability() const = 0;
  virtual bool frozen() const = 0;

  virtual HeadOutputs<S> forward(const Tensor<S>& images) = 0;

  /// Sum over samples of the per-sample task loss; accumulates output-side
  /// gradients (unnormalized) into dlogits/doffset when non-null.
  virtual double task_loss(const HeadOutputs<S>& out, std::span<const synth::ToyLabel> labels,
                           Tensor<S>* dlogits, Tensor<S>* doffset) const = 0;

  /// Pushes output-side gradients back to the input image. df_last adds an
  /// external gradient on the feature map (the identity branch). Parameter
  /// gradients are only accumulated while the head is unfrozen.
  virtual Tensor<S> backward_to_input(const HeadOutputs<S>& out, const Tensor<S>* dlogits,
                                      const Tensor<S>* doffset, const Tensor<S>* df_last) = 0;
};

/// Desk-scale stand-in for a real perception network: four 3x3 convs
/// (strides 2,2,2,1), global average pooling, and class/offset branches.
/// The last conv's activation is the f_last feature surface.
template <class S>
class ToyTaskHead : public TaskHead<S> {
 public:
  explicit ToyTaskHead(uint64_t seed) {
    nn::Graph& g = graph_;
    const int in = g.add_input("image", 3);
    int id = in;
    const int widths[4] = {16, 32, 32, 32};
    const int strides[4] = {2, 2, 2, 1};
    for (int i = 0; i < 4; ++i) {
      nn::Node n;
      n.kind = nn::OpKind::Conv;
      n.name = "head/conv" + std::to_string(i + 1);
      n.inputs = {id};
      n.out_channels = widths[i];
      n.kh = n.kw = 3;
      n.stride = strides[i];
      n.pad = 1;
      n.weight = g.add_param({n.name + "/w", {widths[i], i == 0 ? 3 : widths[i - 1], 3, 3}, true,
                              nn::ParamSpec::Init::conv_he});
      n.bias = g.add_param({n.name + "/b", {widths[i]}, true, nn::ParamSpec::Init::zeros});
      id = g.add_node(std::move(n));
      id = g.add_relu(n.name + "/relu", id);
    }
    f_last_node_ = id;
    g.output = id;
    fc_class_w_ = g.add_param({"head/fc_class/w", {3, 32}, true, nn::ParamSpec::Init::conv_he});
    fc_class_b_ = g.add_param({"head/fc_class/b", {3}, true, nn::ParamSpec::Init::zeros});
    fc_offset_w_ = g.add_param({"head/fc_offset/w", {1, 32}, true, nn::ParamSpec::Init::conv_he});
    fc_offset_b_ = g.add_param({"head/fc_offset/b", {1}, true, nn::ParamSpec::Init::zeros});

    params_ = nn::ParamStore<S>::materialize(g.params, seed);
    exec_ = std::make_unique<nn::Executor<S>>(graph_, params_);
  }

  ToyTaskHead(const ToyTaskHead&) = delete;
  ToyTaskHead& operator=(const ToyTaskHead&) = delete;

  HeadCapability capability() const override { return HeadCapability{}; }
  bool frozen() const override { return frozen_; }
  void freeze() {
    params_.freeze_all();
    frozen_ = true;
  }

  HeadOutputs<S> forward(const Tensor<S>& images) override {
    if (images.rank() != 4 || images.dim(1) != 3)
      throw ShapeError("toy head: input must be [N,3,H,W]");
    HeadOutputs<S> out;
    out.cache = exec_->forward({&images}, false);
    out.f_last = out.cache.value(f_last_node_);
    nn::global_avg_pool_forward(out.f_last, out.pooled);
    nn::linear_forward(out.pooled, params_.value(fc_class_w_), params_.value(fc_class_b_),
                       out.logits);
    Tensor<S> off;
    nn::linear_forward(out.pooled, params_.value(fc_offset_w_), params_.value(fc_offset_b_), off);
    out.offset = Tensor<S>({off.dim(0)});
    for (int n = 0; n < off.dim(0); ++n) out.offset[static_cast<size_t>(n)] = off[static_cast<size_t>(n)];
    return out;
  }

  double task_loss(const HeadOutputs<S>& out, std::span<const synth::ToyLabel> labels,
                   Tensor<S>* dlogits, Tensor<S>* doffset) const override {
    const int N = out.logits.dim(0);
    if (static_cast<int>(labels.size()) != N)
      throw ConfigError("toy head: label count does not match batch");
    double total = 0.0;
    for (int n = 0; n < N; ++n) {
      const synth::ToyLabel& lab = labels[static_cast<size_t>(n)];
      if (lab.stripes < 1 || lab.stripes > 3)
        throw ConfigError("toy head: stripe class out of range");
      total += nn::softmax_cross_entropy(&out.logits[static_cast<size_t>(n) * 3], 3,
                                         lab.stripes - 1,
                                         dlogits ? &(*dlogits)[static_cast<size_t>(n) * 3]
                                                 : static_cast<S*>(nullptr));
      const double err = static_cast<double>(out.offset[static_cast<size_t>(n)]) - lab.offset;
      total += err * err;
      if (doffset) (*doffset)[static_cast<size_t>(n)] += static_cast<S>(2.0 * err);
    }
    return total;
  }

  Tensor<S> backward_to_input(const HeadOutputs<S>& out, const Tensor<S>* dlogits,
                              const Tensor<S>* doffset, const Tensor<S>* df_last) override {
    const int N = out.f_last.dim(0);
    const bool pg = !frozen_;
    Tensor<S> dpooled({N, 32});
    if (dlogits)
      nn::linear_backward(out.pooled, params_.value(fc_class_w_), *dlogits, dpooled,
                          pg ? &params_.grad(fc_class_w_) : nullptr,
                          pg ? &params_.grad(fc_class_b_) : nullptr);
    if (doffset) {
      Tensor<S> doff2({N, 1});
      for (int n = 0; n < N; ++n) doff2[static_cast<size_t>(n)] = (*doffset)[static_cast<size_t>(n)];
      nn::linear_backward(out.pooled, params_.value(fc_offset_w_), doff2, dpooled,
                          pg ? &params_.grad(fc_offset_w_) : nullptr,
                          pg ? &params_.grad(fc_offset_b_) : nullptr);
    }
    Tensor<S> dfmap(out.f_last.shape());
    nn::global_avg_pool_backward(out.f_last.shape(), dpooled, dfmap);
    if (df_last) {
      dfmap.require_shape(*df_last, "toy head df_last");
      for (size_t i = 0; i < dfmap.numel(); ++i) dfmap[i] += (*df_last)[i];
    }
    auto input_grads = exec_->backward(out.cache, {{f_last_node_, std::move(dfmap)}}, pg);
    return std::move(input_grads[0]);
  }

  nn::ParamStore<S>& params() { return params_; }
  const nn::ParamStore<S>& params() const { return params_; }
  const nn::Graph& graph() const { return graph_; }

 private:
  nn::Graph graph_;
  nn::ParamStore<S> params_;
  std::unique_ptr<nn::Executor<S>> exec_;
  int f_last_node_ = -1;
  int fc_class_w_ = -1, fc_class_b_ = -1, fc_offset_w_ = -1, fc_offset_b_ = -1;
  bool frozen_ = false;
};

}  // namespace wnet::head
