#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "wnet/nn/graph.hpp"
#include "wnet/rng.hpp"
#include "wnet/tensor.hpp"

namespace wnet::nn {

/// Owns parameter values and gradients for one network. Initialization is
/// seeded per tensor name, so adding or reordering parameters elsewhere
/// does not perturb existing ones.
template <class S>
class ParamStore {
 public:
  ParamStore() = default;

  static ParamStore materialize(const std::vector<ParamSpec>& specs, uint64_t seed) {
    ParamStore ps;
    for (const ParamSpec& spec : specs) ps.append(spec, seed);
    return ps;
  }

  /// Materializes one more parameter. Init randomness is seeded per tensor
  /// name, so creation order does not matter.
  int append(const ParamSpec& spec, uint64_t seed) {
    Tensor<S> t(spec.shape);
    switch (spec.init) {
      case ParamSpec::Init::zeros:
        break;
      case ParamSpec::Init::ones:
        t.fill(S(1));
        break;
      case ParamSpec::Init::conv_he:
      case ParamSpec::Init::rand_proj: {
        // Fan-in = product of the non-leading dims (in_ch*kh*kw for convs,
        // input width for linear/projection weights).
        size_t fan_in = 1;
        for (size_t d = 1; d < spec.shape.size(); ++d)
          fan_in *= static_cast<size_t>(spec.shape[d]);
        const double std = spec.init == ParamSpec::Init::conv_he
                               ? std::sqrt(2.0 / static_cast<double>(fan_in))
                               : std::sqrt(1.0 / static_cast<double>(fan_in));
        Rng rng(derive_seed(seed, spec.name));
        for (S& v : t.flat()) v = static_cast<S>(rng.normal(0.0, std));
        break;
      }
    }
    specs_.push_back(spec);
    values_.push_back(std::move(t));
    grads_.emplace_back(Tensor<S>(spec.shape));
    return static_cast<int>(values_.size()) - 1;
  }

  int count() const { return static_cast<int>(values_.size()); }
  const ParamSpec& spec(int id) const { return specs_[static_cast<size_t>(id)]; }
  Tensor<S>& value(int id) { return values_[static_cast<size_t>(id)]; }
  const Tensor<S>& value(int id) const { return values_[static_cast<size_t>(id)]; }
  Tensor<S>& grad(int id) { return grads_[static_cast<size_t>(id)]; }
  const Tensor<S>& grad(int id) const { return grads_[static_cast<size_t>(id)]; }

  int find(const std::string& name) const {
    for (size_t i = 0; i < specs_.size(); ++i)
      if (specs_[i].name == name) return static_cast<int>(i);
    return -1;
  }

  void zero_grad() {
    for (auto& g : grads_) g.fill(S(0));
  }

  size_t trainable_count() const {
    size_t n = 0;
    for (size_t i = 0; i < specs_.size(); ++i)
      if (specs_[i].trainable) n += values_[i].numel();
    return n;
  }

  /// Marks every parameter non-trainable (used to freeze a pretrained head).
  void freeze_all() {
    for (auto& s : specs_) s.trainable = false;
  }

 private:
  std::vector<ParamSpec> specs_;
  std::vector<Tensor<S>> values_;
  std::vector<Tensor<S>> grads_;
};

}  // namespace wnet::nn
