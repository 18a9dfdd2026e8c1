#pragma once

#include <string>
#include <vector>

#include "wnet/train/trainer.hpp"

namespace wnet::metrics {

struct CostRow {
  std::string variant;
  int height = 0, width = 0, stages = 1;
  double params_m = 0.0;  // millions
  double flops_g = 0.0;   // giga, 2 flops per MAC over `stages`
};

/// Writes the machine-readable JSON and the aligned text table for one
/// evaluation, including the model-cost block. Empty results are an error
/// and nothing is written.
void emit_report(const train::EvalReport& results, const std::vector<CostRow>& costs,
                 const std::string& json_path, const std::string& text_path);

std::string render_cost_table(const std::vector<CostRow>& costs);

}  // namespace wnet::metrics
