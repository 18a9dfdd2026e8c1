#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "wnet/common.hpp"

namespace wnet::enh {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Width / connectivity rules
// ---------------------------------------------------------------------------

/// Layer width k * 1.6^n rounded to the nearest even integer (ties up),
/// where n is the largest power of two dividing the layer index.
int channel_width(int growth_k, int layer_index);

/// Source layers of layer l: { l - 2^j : 2^j divides l }, descending.
/// Index 0 denotes the block input.
std::vector<int> harmonic_inputs(int layer_index);

/// Width of the squeeze 1x1 in front of a bottlenecked layer: the even-
/// rounded geometric mean of the layer's fan-in and fan-out, at least 2.
int bottleneck_channels(int c_in, int c_out);

// ---------------------------------------------------------------------------
// Block and network plans
// ---------------------------------------------------------------------------

struct HBlockSpec {
  int depth_L = 8;
  int growth_k = 14;
  int in_channels = 32;
  int out_channels = 32;  // width of the final layer and of the transition
};

struct HBlockLayer {
  int index = 0;                 // 1-based
  std::vector<int> input_indices;  // harmonic sources, 0 = block input
  int in_channels = 0;           // sum over sources
  int out_channels = 0;
  bool bottlenecked = false;
  int bottleneck_width = 0;
};

struct HBlockPlan {
  HBlockSpec spec;
  std::vector<HBlockLayer> layers;
  std::vector<int> concat_sources;  // odd layers plus the last, ascending
  int concat_channels = 0;          // transition fan-in
};

/// Expands the block rules: 3x3 layers with harmonic wiring, widths per
/// channel_width (final layer pinned to out_channels), a 1x1 squeeze before
/// every 4th layer, and a 1x1 transition over concat(odd layers, last)
/// producing out_channels.
HBlockPlan build_hblock(const HBlockSpec& spec);

enum class Variant { layers33, layers71, custom };

enum class RowKind { Concat, Conv, HBlock, Add, Output };

/// One stage-level table row (the printable architecture listing).
struct StageRow {
  std::string id;
  RowKind kind = RowKind::Conv;
  std::string info;  // "3, 1" kernel/stride, "-" or "-, -" for concat/add
  int out_channels = 0;
  int block = -1;  // HBlock rows: index into NetworkSpec::blocks
};

struct NetworkSpec {
  Variant variant = Variant::layers33;
  std::vector<int> block_depths;
  std::vector<int> growth_widths;
  int recursion_T = 3;
  bool with_norm = true;  // batch norm after convs (off only for dataflow tests)

  std::vector<HBlockPlan> blocks;
  std::vector<StageRow> rows;

  json to_json() const;
  static NetworkSpec from_json(const json& j);
};

/// The two published variants: blocks [8,16,16,16,4] with k [14,16,20,20,40]
/// and blocks [8,16,4] with k [14,16,40].
NetworkSpec build_network(Variant variant);
NetworkSpec build_network(const std::string& variant_name);

/// Arbitrary block/width lists (tests, tiny gradient-check nets).
NetworkSpec build_custom_network(std::vector<int> block_depths, std::vector<int> growth_widths,
                                 int recursion_T, bool with_norm = true);

const char* variant_name(Variant v);

}  // namespace wnet::enh
