#pragma once

#include <map>
#include <memory>
#include <string>

#include "wnet/enhance/enhancer.hpp"
#include "wnet/fie/fie.hpp"
#include "wnet/head/task_head.hpp"
#include "wnet/objective/objective.hpp"
#include "wnet/train/config.hpp"
#include "wnet/train/data.hpp"

namespace wnet::train {

using real = float;

// ---------------------------------------------------------------------------
// Checkpoint glue
// ---------------------------------------------------------------------------

/// Enhancer + FIE (trunk, frozen projections, seed) + architecture JSON in
/// one file.
void save_framework_checkpoint(const std::string& path, const enh::RecursiveEnhancer<real>& net,
                               const fie::IdentityProjector<real>& fie_net,
                               const nlohmann::json& extra_meta = {});

struct LoadedFramework {
  std::unique_ptr<enh::RecursiveEnhancer<real>> net;
  std::unique_ptr<fie::IdentityProjector<real>> fie_net;
  nlohmann::json meta;
};

LoadedFramework load_framework_checkpoint(const std::string& path);

void save_head_checkpoint(const std::string& path, const head::ToyTaskHead<real>& task_head,
                          const nlohmann::json& extra_meta = {});
std::unique_ptr<head::ToyTaskHead<real>> load_head_checkpoint(const std::string& path);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainResult {
  std::string run_dir;
  std::string checkpoint_path;  // best by validation PSNR
  std::string runlog_path;
  int steps = 0;
  bool aborted = false;           // non-finite loss
  double first_epoch_recovery = 0.0;
  double final_epoch_recovery = 0.0;
  double best_val_psnr = -1.0;
  double val_psnr_degraded = 0.0;  // baseline of the validation split
};

/// End-to-end optimization of the enhancer and FIE against the composite
/// objective. Deterministic under (configs, seed): fixed init, fixed data
/// order, single-threaded math. Writes run_config.json, runlog.jsonl and
/// checkpoint_best.wckpt into run_dir.
TrainResult train(const synth::DatasetManifest& manifest, head::TaskHead<real>* task_head,
                  const objective::ObjectiveConfig& ocfg, const TrainingConfig& tcfg,
                  const std::string& run_dir);

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct EvalRow {
  std::string degraded_path;
  std::string variant_tag;
  double psnr_degraded = 0.0, psnr_enhanced = 0.0;
  double ssim_degraded = 0.0, ssim_enhanced = 0.0;
  int label_class = -1;        // 0-based; -1 when unlabeled
  int pred_degraded = -1, pred_enhanced = -1;
};

struct EvalAggregate {
  double psnr_degraded = 0.0, psnr_enhanced = 0.0;
  double ssim_degraded = 0.0, ssim_enhanced = 0.0;
  int count = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::map<std::string, EvalAggregate> per_variant;
  EvalAggregate overall;
  double accuracy_degraded = -1.0;  // -1 when no labels / no head
  double accuracy_enhanced = -1.0;
  int labeled_count = 0;

  nlohmann::json to_json() const;
};

/// PSNR/SSIM of x^T against clean per record, grouped by variant, plus task
/// accuracy through the (frozen) head on raw-degraded vs enhanced inputs.
EvalReport evaluate(enh::RecursiveEnhancer<real>& net, head::TaskHead<real>* task_head,
                    const synth::DatasetManifest& manifest, const std::string& split,
                    const synth::LabelMap& labels);

/// Enhances one CHW image through the T stages (eval mode) and clamps.
Image enhance_image(enh::RecursiveEnhancer<real>& net, const Image& degraded);

}  // namespace wnet::train
