#include "wnet/metrics/report.hpp"

#include <fstream>
#include <sstream>

namespace wnet::metrics {

using nlohmann::json;

std::string render_cost_table(const std::vector<CostRow>& costs) {
  std::ostringstream os;
  char line[160];
  os << "model       image size   stages   FLOPs (G)   params (M)\n";
  for (const auto& c : costs) {
    std::snprintf(line, sizeof(line), "%-10s %5dx%-6d %6d %11.2f %12.4f\n", c.variant.c_str(),
                  c.height, c.width, c.stages, c.flops_g, c.params_m);
    os << line;
  }
  return os.str();
}

void emit_report(const train::EvalReport& results, const std::vector<CostRow>& costs,
                 const std::string& json_path, const std::string& text_path) {
  if (results.rows.empty()) throw Error("emit_report: no evaluation results");

  json j = results.to_json();
  json cost_j = json::array();
  for (const auto& c : costs)
    cost_j.push_back({{"variant", c.variant},
                      {"height", c.height},
                      {"width", c.width},
                      {"stages", c.stages},
                      {"params_m", c.params_m},
                      {"flops_g", c.flops_g}});
  j["costs"] = cost_j;

  std::ostringstream text;
  char line[200];
  text << "variant        n   PSNR deg   PSNR enh   SSIM deg   SSIM enh\n";
  auto row = [&](const std::string& name, const train::EvalAggregate& a) {
    std::snprintf(line, sizeof(line), "%-12s %4d %10.3f %10.3f %10.4f %10.4f\n", name.c_str(),
                  a.count, a.psnr_degraded, a.psnr_enhanced, a.ssim_degraded, a.ssim_enhanced);
    text << line;
  };
  for (const auto& [tag, agg] : results.per_variant) row(tag, agg);
  row("overall", results.overall);
  if (results.labeled_count > 0) {
    std::snprintf(line, sizeof(line),
                  "task accuracy: degraded %.4f -> enhanced %.4f (%d labeled)\n",
                  results.accuracy_degraded, results.accuracy_enhanced, results.labeled_count);
    text << line;
  }
  if (!costs.empty()) {
    text << "\n" << render_cost_table(costs);
  }

  std::ofstream jf(json_path, std::ios::binary);
  if (!jf) throw IoError("emit_report: cannot write " + json_path);
  jf << j.dump(2) << "\n";
  std::ofstream tf(text_path, std::ios::binary);
  if (!tf) throw IoError("emit_report: cannot write " + text_path);
  tf << text.str();
}

}  // namespace wnet::metrics
