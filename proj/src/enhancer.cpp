#include "wnet/enhance/enhancer.hpp"

namespace wnet::enh {

namespace {

/// Conv + (BatchNorm) + ReLU; returns the post-activation node.
int conv_bn_relu(nn::Graph& g, const std::string& name, std::vector<int> srcs, int out_ch, int k,
                 bool with_norm) {
  int id = g.add_conv(name, std::move(srcs), out_ch, k, /*stride=*/1, /*pad=*/k / 2);
  if (with_norm) id = g.add_batchnorm(name + "/bn", id);
  return g.add_relu(name + "/relu", id);
}

/// Expands one HBlock into graph nodes. Returns the transition output node.
int emit_hblock(nn::Graph& g, const std::string& prefix, const HBlockPlan& plan, int block_input,
                bool with_norm) {
  std::vector<int> layer_out(static_cast<size_t>(plan.spec.depth_L) + 1);
  layer_out[0] = block_input;
  for (const HBlockLayer& layer : plan.layers) {
    std::vector<int> srcs;
    for (int src : layer.input_indices) srcs.push_back(layer_out[static_cast<size_t>(src)]);
    const std::string lname = prefix + "/layer" + std::to_string(layer.index);
    if (layer.bottlenecked) {
      const int squeeze = conv_bn_relu(g, lname + "/bottleneck", std::move(srcs),
                                       layer.bottleneck_width, 1, with_norm);
      srcs = {squeeze};
    }
    layer_out[static_cast<size_t>(layer.index)] =
        conv_bn_relu(g, lname, std::move(srcs), layer.out_channels, 3, with_norm);
  }
  // 1x1 transition over concat(odd layers, last); no norm, no activation.
  std::vector<int> concat_srcs;
  for (int src : plan.concat_sources) concat_srcs.push_back(layer_out[static_cast<size_t>(src)]);
  return g.add_conv(prefix + "/transition", std::move(concat_srcs), plan.spec.out_channels, 1, 1,
                    0);
}

}  // namespace

CompiledStage compile_stage(const NetworkSpec& spec) {
  CompiledStage cs;
  nn::Graph& g = cs.graph;
  cs.input_bad = g.add_input("input_bad", 3);
  cs.input_prev = g.add_input("input_prev", 3);

  const int B = static_cast<int>(spec.blocks.size());
  int conv_no = 1;
  // Conv1 consumes the bad-input / previous-output concat directly.
  int prev_conv = conv_bn_relu(g, "conv1", {cs.input_bad, cs.input_prev}, 32, 3, spec.with_norm);
  cs.row_nodes.emplace_back("Concat1", prev_conv);  // folded into conv1
  cs.row_nodes.emplace_back("Conv1", prev_conv);
  ++conv_no;

  int last_add = -1;
  for (int i = 0; i < B; ++i) {
    const std::string bname = "hblock" + std::to_string(i + 1);
    const int block_out = emit_hblock(g, bname, spec.blocks[static_cast<size_t>(i)], prev_conv,
                                      spec.with_norm);
    cs.row_nodes.emplace_back("HBlock" + std::to_string(i + 1), block_out);

    const std::string fuse_name = "conv" + std::to_string(conv_no);
    const int fused = conv_bn_relu(g, fuse_name, {prev_conv, block_out}, 32, 1, spec.with_norm);
    cs.row_nodes.emplace_back("Concat" + std::to_string(i + 2), fused);  // folded into the 1x1
    cs.row_nodes.emplace_back("Conv" + std::to_string(conv_no), fused);
    ++conv_no;

    last_add = g.add_add("add" + std::to_string(i + 1), prev_conv, fused);
    cs.row_nodes.emplace_back("Add" + std::to_string(i + 1), last_add);

    if (i + 1 < B) {
      prev_conv = conv_bn_relu(g, "conv" + std::to_string(conv_no), {last_add}, 32, 3,
                               spec.with_norm);
      cs.row_nodes.emplace_back("Conv" + std::to_string(conv_no), prev_conv);
      ++conv_no;
    }
  }

  // Stage-final 3x3 back to RGB: raw output, no norm, no activation.
  cs.output = g.add_conv("conv" + std::to_string(conv_no), {last_add}, 3, 3, 1, 1);
  cs.row_nodes.emplace_back("Conv" + std::to_string(conv_no), cs.output);
  cs.f_last = last_add;
  g.output = cs.output;
  return cs;
}

}  // namespace wnet::enh
