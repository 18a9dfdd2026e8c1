#pragma once

#include "wnet/train/trainer.hpp"

namespace wnet::train {

/// The four-arm study: (a) head on degraded input, (b) untrained enhancer,
/// (c) joint training without the identity loss, (d) the full objective.
struct ArmStats {
  std::string name;
  std::vector<double> accuracy;
  std::vector<double> psnr;

  double acc_mean() const;
  double acc_sd() const;
  double psnr_mean() const;
  double psnr_sd() const;
};

struct AblationReport {
  ArmStats a, b, c, d;
  int seeds = 0;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

struct AblationConfig {
  int seeds = 3;
  TrainingConfig training;            // per-arm training budget
  objective::ObjectiveConfig objective;  // alpha/beta for arm (d); arm (c) zeroes beta
};

/// Runs every arm over `seeds` seeds and reports mean +- sd task accuracy
/// and PSNR per arm. Training arms write their runs under run_dir.
AblationReport ablation_suite(const synth::DatasetManifest& manifest,
                              head::TaskHead<real>* task_head, const AblationConfig& cfg,
                              const std::string& run_dir);

}  // namespace wnet::train
