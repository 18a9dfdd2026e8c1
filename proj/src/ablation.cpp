#include "wnet/train/ablation.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace wnet::train {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

double ArmStats::acc_mean() const { return mean_of(accuracy); }
double ArmStats::acc_sd() const { return sd_of(accuracy); }
double ArmStats::psnr_mean() const { return mean_of(psnr); }
double ArmStats::psnr_sd() const { return sd_of(psnr); }

json AblationReport::to_json() const {
  auto arm = [](const ArmStats& s) {
    return json{{"name", s.name},
                {"accuracy", s.accuracy},
                {"psnr", s.psnr},
                {"accuracy_mean", s.acc_mean()},
                {"accuracy_sd", s.acc_sd()},
                {"psnr_mean", s.psnr_mean()},
                {"psnr_sd", s.psnr_sd()}};
  };
  return json{{"seeds", seeds}, {"a", arm(a)}, {"b", arm(b)}, {"c", arm(c)}, {"d", arm(d)}};
}

std::string AblationReport::to_text() const {
  std::ostringstream os;
  char line[160];
  os << "arm                            acc mean    acc sd   psnr mean   psnr sd\n";
  for (const ArmStats* s : {&a, &b, &c, &d}) {
    std::snprintf(line, sizeof(line), "%-28s %9.4f %9.4f %11.3f %9.3f\n", s->name.c_str(),
                  s->acc_mean(), s->acc_sd(), s->psnr_mean(), s->psnr_sd());
    os << line;
  }
  return os.str();
}

AblationReport ablation_suite(const synth::DatasetManifest& manifest,
                              head::TaskHead<real>* task_head, const AblationConfig& cfg,
                              const std::string& run_dir) {
  if (!task_head || !task_head->frozen())
    throw ConfigError("ablation: needs a pretrained frozen task head");
  if (cfg.seeds < 1) throw ConfigError("ablation: needs at least one seed");
  fs::create_directories(run_dir);

  const synth::LabelMap labels = load_manifest_labels(manifest);

  AblationReport report;
  report.seeds = cfg.seeds;
  report.a.name = "(a) head on degraded";
  report.b.name = "(b) +enhancer (untrained)";
  report.c.name = "(c) +joint training";
  report.d.name = "(d) +identity loss (full)";

  // Arm (a): the enhanced-vs-degraded report of any enhancer carries the
  // degraded-input numbers; reuse one untrained net's report.
  for (int s = 0; s < cfg.seeds; ++s) {
    const uint64_t seed = cfg.training.seed + static_cast<uint64_t>(s);

    // Arm (b): untrained enhancer, straight to evaluation.
    {
      enh::NetworkSpec spec = enh::build_network(cfg.training.variant);
      spec.recursion_T = cfg.training.stages;
      enh::RecursiveEnhancer<real> net(spec, derive_seed(seed, "enhancer"));
      const EvalReport ev = evaluate(net, task_head, manifest, "test", labels);
      report.b.accuracy.push_back(ev.accuracy_enhanced);
      report.b.psnr.push_back(ev.overall.psnr_enhanced);
      if (s == 0) std::cerr << "ablation: arm (b) seed " << seed << " done\n";
      report.a.accuracy.push_back(ev.accuracy_degraded);
      report.a.psnr.push_back(ev.overall.psnr_degraded);
    }

    // Arms (c) and (d): train with/without the identity term.
    for (int arm = 0; arm < 2; ++arm) {
      objective::ObjectiveConfig ocfg = cfg.objective;
      if (arm == 0) ocfg.beta_fi = 0.0;
      TrainingConfig tcfg = cfg.training;
      tcfg.seed = seed;
      const std::string arm_dir =
          (fs::path(run_dir) / ((arm == 0 ? "arm_c_seed" : "arm_d_seed") + std::to_string(s)))
              .string();
      const TrainResult tr = train(manifest, task_head, ocfg, tcfg, arm_dir);
      if (tr.aborted) throw Error("ablation: training diverged in " + arm_dir);
      LoadedFramework best = load_framework_checkpoint(tr.checkpoint_path);
      const EvalReport ev = evaluate(*best.net, task_head, manifest, "test", labels);
      ArmStats& stats = arm == 0 ? report.c : report.d;
      stats.accuracy.push_back(ev.accuracy_enhanced);
      stats.psnr.push_back(ev.overall.psnr_enhanced);
      std::cerr << "ablation: arm (" << (arm == 0 ? 'c' : 'd') << ") seed " << seed
                << " acc=" << ev.accuracy_enhanced << " psnr=" << ev.overall.psnr_enhanced
                << "\n";
    }
  }
  return report;
}

}  // namespace wnet::train
