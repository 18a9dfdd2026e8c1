#include "wnet/enhance/cost.hpp"

namespace wnet::enh {

namespace {

void add_conv(CostBreakdown& cb, const std::string& name, int k, int cin, int cout,
              bool with_norm) {
  ConvCost c;
  c.name = name;
  c.kernel = k;
  c.in_channels = cin;
  c.out_channels = cout;
  c.params = static_cast<long long>(k) * k * cin * cout + cout;
  if (with_norm) c.params += 2LL * cout;
  c.macs_per_pixel = static_cast<long long>(k) * k * cin * cout;
  cb.total_params += c.params;
  cb.total_macs_per_pixel += c.macs_per_pixel;
  cb.convs.push_back(std::move(c));
}

}  // namespace

CostBreakdown cost_breakdown(const NetworkSpec& spec) {
  CostBreakdown cb;
  const bool norm = spec.with_norm;
  const int B = static_cast<int>(spec.blocks.size());

  int conv_no = 1;
  add_conv(cb, "conv1", 3, 6, 32, norm);
  ++conv_no;
  for (int i = 0; i < B; ++i) {
    const HBlockPlan& plan = spec.blocks[static_cast<size_t>(i)];
    const std::string prefix = "hblock" + std::to_string(i + 1);
    for (const HBlockLayer& layer : plan.layers) {
      const std::string lname = prefix + "/layer" + std::to_string(layer.index);
      if (layer.bottlenecked) {
        add_conv(cb, lname + "/bottleneck", 1, layer.in_channels, layer.bottleneck_width, norm);
        add_conv(cb, lname, 3, layer.bottleneck_width, layer.out_channels, norm);
      } else {
        add_conv(cb, lname, 3, layer.in_channels, layer.out_channels, norm);
      }
    }
    add_conv(cb, prefix + "/transition", 1, plan.concat_channels, plan.spec.out_channels, false);
    add_conv(cb, "conv" + std::to_string(conv_no++), 1, 64, 32, norm);
    if (i + 1 < B) add_conv(cb, "conv" + std::to_string(conv_no++), 3, 32, 32, norm);
  }
  add_conv(cb, "conv" + std::to_string(conv_no), 3, 32, 3, false);
  return cb;
}

long long count_params(const NetworkSpec& spec) { return cost_breakdown(spec).total_params; }

double count_flops(const NetworkSpec& spec, int height, int width, int stages,
                   int flops_per_mac) {
  if (height < 1 || width < 1 || stages < 1)
    throw InvalidParameter("count_flops: height, width and stages must be positive");
  const CostBreakdown cb = cost_breakdown(spec);
  return static_cast<double>(cb.total_macs_per_pixel) * flops_per_mac * stages *
         static_cast<double>(height) * static_cast<double>(width);
}

}  // namespace wnet::enh
