#pragma once

#include <map>

#include "wnet/nn/executor.hpp"

namespace wnet::fie {

constexpr int kLatentDim = 128;
constexpr double kNormFloor = 1e-8;

/// Maps last-layer feature maps onto a shared 128-d unit hypersphere:
/// three stride-2 convs (32, 64, 64 channels, ReLU), flatten, a fixed
/// seeded random projection to 128, then L2 normalization.
///
/// The conv trunk is the trainable part (phi). Branches whose inputs have
/// the same channel count share the whole trunk; a differing channel count
/// only gets its own first conv. Projection matrices are created once per
/// flatten width from the recorded seed and are never updated.
template <class S>
class IdentityProjector {
 public:
  explicit IdentityProjector(uint64_t seed) : seed_(seed) {
    conv2_w_ = store_.append({"fie/conv2/w", {64, 32, 3, 3}, true,
                              nn::ParamSpec::Init::conv_he}, seed_);
    conv2_b_ = store_.append({"fie/conv2/b", {64}, true, nn::ParamSpec::Init::zeros}, seed_);
    conv3_w_ = store_.append({"fie/conv3/w", {64, 64, 3, 3}, true,
                              nn::ParamSpec::Init::conv_he}, seed_);
    conv3_b_ = store_.append({"fie/conv3/b", {64}, true, nn::ParamSpec::Init::zeros}, seed_);
  }

  IdentityProjector(const IdentityProjector&) = delete;
  IdentityProjector& operator=(const IdentityProjector&) = delete;

  struct Result {
    Tensor<S> z;       // [N,128], unit rows
    Tensor<S> pre;     // [N,128] before normalization
    Tensor<S> norms;   // [N]
    Tensor<S> flat;    // [N,D] flattened trunk output
    nn::ForwardCache<S> cache;
    int branch_channels = 0;
    int proj_id = -1;
    int out_node = -1;
  };

  /// feature_map: [N,C,H,W], any C, any spatial size >= 1 (designed for
  /// >= 8x8; smaller maps degrade gracefully through the ceil-div strides).
  Result forward(const Tensor<S>& feature_map) {
    if (feature_map.rank() != 4) throw ShapeError("fie: feature map must be [N,C,H,W]");
    Branch& br = ensure_branch(feature_map.dim(1));
    Result res;
    res.branch_channels = feature_map.dim(1);
    res.out_node = br.out_node;
    res.cache = br.exec->forward({&feature_map}, false);

    const Tensor<S>& fmap = res.cache.value(br.out_node);
    const int N = fmap.dim(0);
    const int D = fmap.dim(1) * fmap.dim(2) * fmap.dim(3);
    res.flat = Tensor<S>({N, D});
    std::copy(fmap.data(), fmap.data() + fmap.numel(), res.flat.data());

    const int proj = ensure_projection(D);
    res.proj_id = proj;
    const Tensor<S>& P = store_.value(proj);  // [128, D]
    res.pre = Tensor<S>({N, kLatentDim});
    nn::CMapRM<S> Pm(P.data(), kLatentDim, D);
    nn::CMapRM<S> Fm(res.flat.data(), N, D);
    nn::MapRM<S>(res.pre.data(), N, kLatentDim).noalias() = Fm * Pm.transpose();

    res.norms = Tensor<S>({N});
    res.z = Tensor<S>({N, kLatentDim});
    for (int n = 0; n < N; ++n) {
      double acc = 0.0;
      const S* p = &res.pre[static_cast<size_t>(n) * kLatentDim];
      for (int k = 0; k < kLatentDim; ++k) acc += static_cast<double>(p[k]) * p[k];
      const double norm = std::sqrt(acc);
      const double denom = std::max(norm, kNormFloor);
      res.norms[static_cast<size_t>(n)] = static_cast<S>(norm);
      for (int k = 0; k < kLatentDim; ++k)
        res.z[static_cast<size_t>(n) * kLatentDim + k] = static_cast<S>(p[k] / denom);
    }
    return res;
  }

  /// dz: [N,128]. Returns the gradient w.r.t. the input feature map;
  /// accumulates trunk gradients unless param_grads is false. Projection
  /// matrices never receive gradient.
  Tensor<S> backward(const Result& res, const Tensor<S>& dz, bool param_grads = true) {
    const int N = res.z.dim(0);
    // Through the normalization: d_pre = (dz - z (z . dz)) / max(norm, floor).
    Tensor<S> dpre({N, kLatentDim});
    for (int n = 0; n < N; ++n) {
      const S* z = &res.z[static_cast<size_t>(n) * kLatentDim];
      const S* g = &dz[static_cast<size_t>(n) * kLatentDim];
      double dot = 0.0;
      for (int k = 0; k < kLatentDim; ++k) dot += static_cast<double>(z[k]) * g[k];
      const double denom = std::max(static_cast<double>(res.norms[static_cast<size_t>(n)]),
                                    kNormFloor);
      S* out = &dpre[static_cast<size_t>(n) * kLatentDim];
      for (int k = 0; k < kLatentDim; ++k)
        out[k] = static_cast<S>((static_cast<double>(g[k]) - dot * z[k]) / denom);
    }

    const Tensor<S>& P = store_.value(res.proj_id);
    const int D = res.flat.dim(1);
    Tensor<S> dflat({N, D});
    nn::CMapRM<S> Pm(P.data(), kLatentDim, D);
    nn::CMapRM<S> dPre(dpre.data(), N, kLatentDim);
    nn::MapRM<S>(dflat.data(), N, D).noalias() = dPre * Pm;

    Branch& br = branches_.at(res.branch_channels);
    const Tensor<S>& fmap = res.cache.value(br.out_node);
    Tensor<S> dfmap(fmap.shape());
    std::copy(dflat.data(), dflat.data() + dflat.numel(), dfmap.data());
    auto input_grads = br.exec->backward(res.cache, {{br.out_node, std::move(dfmap)}}, param_grads);
    return std::move(input_grads[0]);
  }

  /// Pre-creates the trunk and projection for a branch signature, so the
  /// optimizer can be attached to a complete parameter set.
  void ensure_branch_shapes(int in_channels, int in_h, int in_w) {
    ensure_branch(in_channels);
    int h = in_h, w = in_w;
    for (int i = 0; i < 3; ++i) {
      h = (h + 1) / 2;
      w = (w + 1) / 2;
    }
    ensure_projection(64 * h * w);
  }

  void ensure_branch_channels(int in_channels) { ensure_branch(in_channels); }
  void ensure_projection_dim(int flatten_dim) { ensure_projection(flatten_dim); }

  std::vector<int> branch_channel_list() const {
    std::vector<int> out;
    for (const auto& [c, br] : branches_) out.push_back(c);
    return out;
  }
  std::vector<int> projection_dim_list() const {
    std::vector<int> out;
    for (const auto& [d, id] : projections_) out.push_back(d);
    return out;
  }

  nn::ParamStore<S>& params() { return store_; }
  const nn::ParamStore<S>& params() const { return store_; }
  uint64_t seed() const { return seed_; }

  std::vector<int> projection_ids() const {
    std::vector<int> out;
    for (const auto& [dim, id] : projections_) out.push_back(id);
    return out;
  }

 private:
  struct Branch {
    nn::Graph graph;
    std::unique_ptr<nn::Executor<S>> exec;
    int out_node = -1;
  };

  Branch& ensure_branch(int in_channels) {
    auto it = branches_.find(in_channels);
    if (it != branches_.end()) return it->second;

    const std::string c1 = "fie/conv1_c" + std::to_string(in_channels);
    const int w1 = store_.append({c1 + "/w", {32, in_channels, 3, 3}, true,
                                  nn::ParamSpec::Init::conv_he}, seed_);
    const int b1 = store_.append({c1 + "/b", {32}, true, nn::ParamSpec::Init::zeros}, seed_);

    Branch br;
    nn::Graph& g = br.graph;
    const int in = g.add_input("f", in_channels);
    auto conv = [&](const std::string& name, int src, int out_ch, int w_id, int b_id) {
      nn::Node n;
      n.kind = nn::OpKind::Conv;
      n.name = name;
      n.inputs = {src};
      n.out_channels = out_ch;
      n.kh = n.kw = 3;
      n.stride = 2;
      n.pad = 1;
      n.weight = w_id;
      n.bias = b_id;
      return g.add_node(std::move(n));
    };
    int id = conv(c1, in, 32, w1, b1);
    id = g.add_relu(c1 + "/relu", id);
    id = conv("fie/conv2", id, 64, conv2_w_, conv2_b_);
    id = g.add_relu("fie/conv2/relu", id);
    id = conv("fie/conv3", id, 64, conv3_w_, conv3_b_);
    id = g.add_relu("fie/conv3/relu", id);
    br.out_node = id;
    g.output = id;
    br.exec = std::make_unique<nn::Executor<S>>(br.graph, store_);
    return branches_.emplace(in_channels, std::move(br)).first->second;
  }

  int ensure_projection(int flatten_dim) {
    auto it = projections_.find(flatten_dim);
    if (it != projections_.end()) return it->second;
    const int id = store_.append({"fie/proj_d" + std::to_string(flatten_dim),
                                  {kLatentDim, flatten_dim}, false,
                                  nn::ParamSpec::Init::rand_proj}, seed_);
    projections_.emplace(flatten_dim, id);
    return id;
  }

  uint64_t seed_;
  nn::ParamStore<S> store_;
  int conv2_w_ = -1, conv2_b_ = -1, conv3_w_ = -1, conv3_b_ = -1;
  std::map<int, Branch> branches_;
  std::map<int, int> projections_;  // flatten_dim -> param id
};

/// Squared Euclidean distance between two unit-norm latents; range [0, 4].
template <class S>
double feature_identity_loss(const S* z_en, const S* z_ht, int dim = kLatentDim) {
  auto check = [dim](const S* z, const char* which) {
    double acc = 0.0;
    for (int k = 0; k < dim; ++k) acc += static_cast<double>(z[k]) * z[k];
    if (std::abs(std::sqrt(acc) - 1.0) > 1e-3)
      throw ContractViolation(std::string("feature_identity_loss: ") + which +
                              " is not unit-norm");
  };
  check(z_en, "z_en");
  check(z_ht, "z_ht");
  double acc = 0.0;
  for (int k = 0; k < dim; ++k) {
    const double d = static_cast<double>(z_en[k]) - static_cast<double>(z_ht[k]);
    acc += d * d;
  }
  return acc;
}

}  // namespace wnet::fie
