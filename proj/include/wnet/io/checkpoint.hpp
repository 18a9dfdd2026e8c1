#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "wnet/nn/param_store.hpp"

namespace wnet::io {

using nlohmann::json;

/// Container format: "WNETCKPT" magic, u32 version, u64 header length, a
/// JSON header (free-form meta plus the tensor directory), then each
/// tensor's raw little-endian float32 payload in directory order. Round
/// trips are bit-exact. Documented in the README.
struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  bool trainable = true;
  std::vector<float> data;
};

struct Checkpoint {
  json meta;
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const {
    for (const auto& t : tensors)
      if (t.name == name) return &t;
    return nullptr;
  }
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Appends every parameter of a store (values cast to float32).
template <class S>
void append_store(const nn::ParamStore<S>& store, std::vector<NamedTensor>& out) {
  for (int i = 0; i < store.count(); ++i) {
    NamedTensor t;
    t.name = store.spec(i).name;
    t.shape = store.spec(i).shape;
    t.trainable = store.spec(i).trainable;
    const Tensor<S>& v = store.value(i);
    t.data.resize(v.numel());
    for (size_t k = 0; k < v.numel(); ++k) t.data[k] = static_cast<float>(v[k]);
    out.push_back(std::move(t));
  }
}

/// Loads tensors into a store by name. Every store parameter must be
/// present with a matching shape.
template <class S>
void load_into_store(const Checkpoint& ckpt, nn::ParamStore<S>& store) {
  for (int i = 0; i < store.count(); ++i) {
    const NamedTensor* t = ckpt.find(store.spec(i).name);
    if (!t) throw IoError("checkpoint: missing tensor " + store.spec(i).name);
    if (t->shape != store.spec(i).shape)
      throw IoError("checkpoint: shape mismatch for " + store.spec(i).name);
    Tensor<S>& v = store.value(i);
    for (size_t k = 0; k < v.numel(); ++k) v[k] = static_cast<S>(t->data[k]);
  }
}

}  // namespace wnet::io
