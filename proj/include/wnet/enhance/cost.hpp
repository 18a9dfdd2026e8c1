#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wnet/enhance/arch.hpp"

namespace wnet::enh {

struct ConvCost {
  std::string name;
  int kernel = 0;
  int in_channels = 0, out_channels = 0;
  long long params = 0;          // weights + bias (+ 2*out for batch norm)
  long long macs_per_pixel = 0;  // kh*kw*cin*cout
};

struct CostBreakdown {
  std::vector<ConvCost> convs;
  long long total_params = 0;
  long long total_macs_per_pixel = 0;
};

/// Walks the stage plan conv-by-conv. Parameter counting convention:
/// kh*kw*c_in*c_out + c_out per conv, plus 2*c_out per batch norm.
CostBreakdown cost_breakdown(const NetworkSpec& spec);

long long count_params(const NetworkSpec& spec);

/// FLOPs of a forward pass at H x W over `stages` recursion steps, counting
/// `flops_per_mac` per multiply-accumulate (2 by default). All convolutions
/// in this architecture are stride 1, so every layer runs at full resolution.
double count_flops(const NetworkSpec& spec, int height, int width, int stages,
                   int flops_per_mac = 2);

}  // namespace wnet::enh
