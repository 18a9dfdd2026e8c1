#pragma once

#include <string>
#include <vector>

#include "wnet/common.hpp"

namespace wnet::nn {

enum class OpKind { Input, Conv, BatchNorm, ReLU, Add };

struct ParamSpec {
  // conv_he: fan-in scaled normal sqrt(2/fan_in); rand_proj: normal with
  // variance 1/fan_in (norm-preserving random projections).
  enum class Init { conv_he, zeros, ones, rand_proj };
  std::string name;
  std::vector<int> shape;
  bool trainable = true;
  Init init = Init::zeros;
};

/// A node's inputs are concatenated along channels for Conv (so explicit
/// concat buffers never materialize) and summed for Add.
struct Node {
  OpKind kind = OpKind::Input;
  std::string name;
  std::vector<int> inputs;
  int out_channels = 0;
  // Conv
  int kh = 1, kw = 1, stride = 1, pad = 0;
  int weight = -1, bias = -1;
  // BatchNorm
  int gamma = -1, beta = -1, run_mean = -1, run_var = -1;
};

/// Static dataflow graph; nodes are stored in topological order by
/// construction (inputs must already exist when a node is added).
struct Graph {
  std::vector<Node> nodes;
  std::vector<ParamSpec> params;
  std::vector<int> inputs;
  int output = -1;

  int add_param(ParamSpec spec) {
    params.push_back(std::move(spec));
    return static_cast<int>(params.size()) - 1;
  }

  int add_node(Node n) {
    for (int i : n.inputs)
      if (i < 0 || i >= static_cast<int>(nodes.size()))
        throw Error("graph: node input out of order: " + n.name);
    nodes.push_back(std::move(n));
    return static_cast<int>(nodes.size()) - 1;
  }

  int add_input(const std::string& name, int channels) {
    Node n;
    n.kind = OpKind::Input;
    n.name = name;
    n.out_channels = channels;
    const int id = add_node(std::move(n));
    inputs.push_back(id);
    return id;
  }

  int add_conv(const std::string& name, std::vector<int> srcs, int out_ch, int k, int stride,
               int pad) {
    int in_ch = 0;
    for (int s : srcs) in_ch += nodes[static_cast<size_t>(s)].out_channels;
    Node n;
    n.kind = OpKind::Conv;
    n.name = name;
    n.inputs = std::move(srcs);
    n.out_channels = out_ch;
    n.kh = n.kw = k;
    n.stride = stride;
    n.pad = pad;
    n.weight = add_param({name + "/w", {out_ch, in_ch, k, k}, true, ParamSpec::Init::conv_he});
    n.bias = add_param({name + "/b", {out_ch}, true, ParamSpec::Init::zeros});
    return add_node(std::move(n));
  }

  int add_batchnorm(const std::string& name, int src) {
    const int ch = nodes[static_cast<size_t>(src)].out_channels;
    Node n;
    n.kind = OpKind::BatchNorm;
    n.name = name;
    n.inputs = {src};
    n.out_channels = ch;
    n.gamma = add_param({name + "/gamma", {ch}, true, ParamSpec::Init::ones});
    n.beta = add_param({name + "/beta", {ch}, true, ParamSpec::Init::zeros});
    n.run_mean = add_param({name + "/running_mean", {ch}, false, ParamSpec::Init::zeros});
    n.run_var = add_param({name + "/running_var", {ch}, false, ParamSpec::Init::ones});
    return add_node(std::move(n));
  }

  int add_relu(const std::string& name, int src) {
    Node n;
    n.kind = OpKind::ReLU;
    n.name = name;
    n.inputs = {src};
    n.out_channels = nodes[static_cast<size_t>(src)].out_channels;
    return add_node(std::move(n));
  }

  int add_add(const std::string& name, int a, int b) {
    if (nodes[static_cast<size_t>(a)].out_channels != nodes[static_cast<size_t>(b)].out_channels)
      throw ShapeError("graph: add operands disagree on channels: " + name);
    Node n;
    n.kind = OpKind::Add;
    n.name = name;
    n.inputs = {a, b};
    n.out_channels = nodes[static_cast<size_t>(a)].out_channels;
    return add_node(std::move(n));
  }

  int find_node(const std::string& name) const {
    for (size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].name == name) return static_cast<int>(i);
    return -1;
  }
};

}  // namespace wnet::nn
