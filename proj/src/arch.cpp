#include "wnet/enhance/arch.hpp"

#include <algorithm>
#include <cmath>

namespace wnet::enh {

namespace {

int round_even(double raw) {
  const double lo = 2.0 * std::floor(raw / 2.0);
  const double hi = lo + 2.0;
  const int v = (raw - lo) >= (hi - raw) ? static_cast<int>(hi) : static_cast<int>(lo);
  return std::max(v, 2);
}

}  // namespace

int channel_width(int growth_k, int layer_index) {
  if (layer_index < 1) throw InvalidParameter("channel_width: layer index must be >= 1");
  if (growth_k < 1) throw InvalidParameter("channel_width: growth must be >= 1");
  int n = 0;
  while (layer_index % (1 << (n + 1)) == 0) ++n;
  const double raw = growth_k * std::pow(1.6, n);
  return round_even(raw);
}

std::vector<int> harmonic_inputs(int layer_index) {
  if (layer_index < 1) throw InvalidParameter("harmonic_inputs: layer index must be >= 1");
  std::vector<int> out;
  for (int j = 0; (1 << j) <= layer_index; ++j)
    if (layer_index % (1 << j) == 0) out.push_back(layer_index - (1 << j));
  std::sort(out.begin(), out.end(), std::greater<int>());
  return out;
}

int bottleneck_channels(int c_in, int c_out) {
  if (c_in < 1 || c_out < 1) throw InvalidParameter("bottleneck_channels: channels must be >= 1");
  return round_even(std::sqrt(static_cast<double>(c_in) * static_cast<double>(c_out)));
}

HBlockPlan build_hblock(const HBlockSpec& spec) {
  if (spec.depth_L < 1 || spec.growth_k < 1 || spec.in_channels < 1 || spec.out_channels < 1)
    throw InvalidParameter("build_hblock: invalid block spec");

  HBlockPlan plan;
  plan.spec = spec;

  std::vector<int> width(static_cast<size_t>(spec.depth_L) + 1);
  width[0] = spec.in_channels;
  for (int l = 1; l <= spec.depth_L; ++l)
    width[static_cast<size_t>(l)] =
        (l == spec.depth_L) ? spec.out_channels : channel_width(spec.growth_k, l);

  for (int l = 1; l <= spec.depth_L; ++l) {
    HBlockLayer layer;
    layer.index = l;
    layer.input_indices = harmonic_inputs(l);
    layer.in_channels = 0;
    for (int src : layer.input_indices) layer.in_channels += width[static_cast<size_t>(src)];
    layer.out_channels = width[static_cast<size_t>(l)];
    layer.bottlenecked = (l % 4 == 0);
    if (layer.bottlenecked)
      layer.bottleneck_width = bottleneck_channels(layer.in_channels, layer.out_channels);
    plan.layers.push_back(std::move(layer));
  }

  for (int l = 1; l <= spec.depth_L; l += 2) plan.concat_sources.push_back(l);
  if (spec.depth_L % 2 == 0) plan.concat_sources.push_back(spec.depth_L);
  for (int src : plan.concat_sources) plan.concat_channels += width[static_cast<size_t>(src)];
  return plan;
}

namespace {

NetworkSpec assemble(Variant variant, std::vector<int> depths, std::vector<int> widths, int T,
                     bool with_norm) {
  if (depths.empty() || depths.size() != widths.size())
    throw InvalidParameter("network: block depth and growth lists must be nonempty and equal");
  if (T < 1) throw InvalidParameter("network: recursion depth must be >= 1");

  NetworkSpec spec;
  spec.variant = variant;
  spec.block_depths = std::move(depths);
  spec.growth_widths = std::move(widths);
  spec.recursion_T = T;
  spec.with_norm = with_norm;

  const int B = static_cast<int>(spec.block_depths.size());
  for (int i = 0; i < B; ++i) {
    HBlockSpec bs;
    bs.depth_L = spec.block_depths[static_cast<size_t>(i)];
    bs.growth_k = spec.growth_widths[static_cast<size_t>(i)];
    spec.blocks.push_back(build_hblock(bs));
  }

  // Stage table, numbered like the printed architecture listing.
  auto& rows = spec.rows;
  rows.push_back({"Concat1", RowKind::Concat, "-", 6, -1});
  rows.push_back({"Conv1", RowKind::Conv, "3, 1", 32, -1});
  int conv_no = 2;
  for (int i = 0; i < B; ++i) {
    rows.push_back({"HBlock" + std::to_string(i + 1), RowKind::HBlock, "3, 1", 32, i});
    rows.push_back({"Concat" + std::to_string(i + 2), RowKind::Concat, "-", 64, -1});
    rows.push_back({"Conv" + std::to_string(conv_no++), RowKind::Conv, "1, 1", 32, -1});
    rows.push_back({"Add" + std::to_string(i + 1), RowKind::Add, "-, -", 32, -1});
    if (i + 1 < B) rows.push_back({"Conv" + std::to_string(conv_no++), RowKind::Conv, "3, 1", 32, -1});
  }
  rows.push_back({"Conv" + std::to_string(conv_no), RowKind::Conv, "3, 1", 3, -1});
  rows.push_back({"RecursiveOutput", RowKind::Output, "-", 3, -1});
  return spec;
}

}  // namespace

NetworkSpec build_network(Variant variant) {
  switch (variant) {
    case Variant::layers71:
      return assemble(variant, {8, 16, 16, 16, 4}, {14, 16, 20, 20, 40}, 3, true);
    case Variant::layers33:
      return assemble(variant, {8, 16, 4}, {14, 16, 40}, 3, true);
    case Variant::custom:
      throw InvalidParameter("build_network: custom variant needs explicit block lists");
  }
  throw InvalidParameter("build_network: unknown variant");
}

NetworkSpec build_network(const std::string& variant_name) {
  if (variant_name == "layers33") return build_network(Variant::layers33);
  if (variant_name == "layers71") return build_network(Variant::layers71);
  throw InvalidParameter("build_network: unknown variant '" + variant_name + "'");
}

NetworkSpec build_custom_network(std::vector<int> block_depths, std::vector<int> growth_widths,
                                 int recursion_T, bool with_norm) {
  return assemble(Variant::custom, std::move(block_depths), std::move(growth_widths), recursion_T,
                  with_norm);
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::layers33: return "layers33";
    case Variant::layers71: return "layers71";
    case Variant::custom: return "custom";
  }
  return "?";
}

json NetworkSpec::to_json() const {
  return json{{"variant", variant_name(variant)},
              {"block_depths", block_depths},
              {"growth_widths", growth_widths},
              {"recursion_T", recursion_T},
              {"with_norm", with_norm}};
}

NetworkSpec NetworkSpec::from_json(const json& j) {
  const std::string v = j.at("variant").get<std::string>();
  const int T = j.value("recursion_T", 3);
  const bool norm = j.value("with_norm", true);
  if (v == "custom")
    return build_custom_network(j.at("block_depths").get<std::vector<int>>(),
                                j.at("growth_widths").get<std::vector<int>>(), T, norm);
  NetworkSpec spec = build_network(v);
  spec.recursion_T = T;
  spec.with_norm = norm;
  if (!norm) {
    // Rebuild without norm so compiled params match.
    spec = build_custom_network(spec.block_depths, spec.growth_widths, T, false);
    spec.variant = v == "layers33" ? Variant::layers33 : Variant::layers71;
  }
  return spec;
}

}  // namespace wnet::enh
