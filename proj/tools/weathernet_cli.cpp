// weathernet: synthesis, training, evaluation and cost analysis for the
// bad-weather enhancement framework. One subcommand per pipeline step; every
// run directory records its resolved configuration and seed.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "wnet/enhance/cost.hpp"
#include "wnet/enhance/memory.hpp"
#include "wnet/head/toy_data.hpp"
#include "wnet/io/png_io.hpp"
#include "wnet/metrics/report.hpp"
#include "wnet/train/ablation.hpp"
#include "wnet/train/pretrain.hpp"
#include "wnet/train/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wnet;

namespace {

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  json j;
  in >> j;
  return j;
}

void write_run_config(const std::string& dir, const json& resolved) {
  fs::create_directories(dir);
  std::ofstream out(fs::path(dir) / "run_config.json");
  out << resolved.dump(2) << "\n";
}

struct CliContext {
  std::string config_path;
  uint64_t seed = 0;
  bool seed_set = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bad-weather image enhancement toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // --seed / --config may follow the subcommand
  app.failure_message(CLI::FailureMessage::help);

  CliContext ctx;
  app.add_option("--config", ctx.config_path, "JSON config file (defaults < file < flags)");
  auto* seed_opt = app.add_option("--seed", ctx.seed, "master seed");

  // --- toygen ---------------------------------------------------------------
  auto* toygen = app.add_subcommand("toygen", "generate the clean labeled toy dataset");
  std::string toygen_out = "toy_clean";
  int toygen_train = 200, toygen_test = 50, toygen_size = 64;
  toygen->add_option("--out", toygen_out, "output directory");
  toygen->add_option("--train", toygen_train, "training images");
  toygen->add_option("--test", toygen_test, "held-out images");
  toygen->add_option("--size", toygen_size, "image side length");

  // --- synth ----------------------------------------------------------------
  auto* synth_cmd = app.add_subcommand("synth", "compose weather variants over a clean dir");
  std::string synth_in, synth_out;
  synth_cmd->add_option("clean_dir", synth_in, "directory of clean PNGs")->required();
  synth_cmd->add_option("out_dir", synth_out, "output dataset directory")->required();

  // --- pretrain-head ----------------------------------------------------------
  auto* ph = app.add_subcommand("pretrain-head", "train and freeze the toy perception head");
  std::string ph_toy_dir, ph_out = "head.wckpt";
  int ph_steps = 2500;
  double ph_target = 0.95;
  ph->add_option("toy_dir", ph_toy_dir, "clean toy dataset directory")->required();
  ph->add_option("--out", ph_out, "head checkpoint path");
  ph->add_option("--max-steps", ph_steps, "pretraining budget");
  ph->add_option("--target", ph_target, "holdout accuracy gate");

  // --- train ------------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "joint training against the frozen head");
  std::string tr_manifest, tr_head, tr_out = "runs/train";
  std::string tr_variant;
  double tr_alpha = -1.0, tr_beta = -1.0;
  int tr_max_steps = -1, tr_epochs = -1, tr_batch = -1;
  double tr_lr = -1.0;
  tr->add_option("manifest", tr_manifest, "paired dataset manifest.jsonl")->required();
  tr->add_option("--head", tr_head, "frozen head checkpoint (.wckpt)");
  tr->add_option("--out", tr_out, "run directory");
  tr->add_option("--variant", tr_variant, "layers33 | layers71")
      ->check(CLI::IsMember({"layers33", "layers71"}));
  tr->add_option("--alpha", tr_alpha, "task-loss weight");
  tr->add_option("--beta", tr_beta, "identity-loss weight");
  tr->add_option("--max-steps", tr_max_steps, "step cap (0 = none)");
  tr->add_option("--epochs", tr_epochs, "epoch budget");
  tr->add_option("--batch", tr_batch, "batch size");
  tr->add_option("--lr", tr_lr, "base learning rate");

  // --- eval -------------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "PSNR/SSIM + task accuracy of a checkpoint");
  std::string ev_ckpt, ev_manifest, ev_head, ev_out = "runs/eval", ev_split = "test";
  ev->add_option("checkpoint", ev_ckpt, "framework checkpoint")->required();
  ev->add_option("manifest", ev_manifest, "dataset manifest.jsonl")->required();
  ev->add_option("--head", ev_head, "frozen head checkpoint");
  ev->add_option("--split", ev_split, "train | test");
  ev->add_option("--out", ev_out, "report directory");

  // --- enhance ----------------------------------------------------------------
  auto* en = app.add_subcommand("enhance", "run one image through a checkpoint");
  std::string en_ckpt, en_in, en_out;
  en->add_option("checkpoint", en_ckpt)->required();
  en->add_option("image_in", en_in)->required();
  en->add_option("image_out", en_out)->required();

  // --- analyze ----------------------------------------------------------------
  auto* an = app.add_subcommand("analyze", "parameter / FLOP / activation-memory analysis");
  std::string an_variant = "layers33";
  int an_h = 512, an_w = 1024, an_stages = 3;
  an->add_option("--variant", an_variant, "layers33 | layers71")
      ->check(CLI::IsMember({"layers33", "layers71"}));
  an->add_option("--height", an_h);
  an->add_option("--width", an_w);
  an->add_option("--stages", an_stages);

  // --- ablate -----------------------------------------------------------------
  auto* ab = app.add_subcommand("ablate", "four-arm study over several seeds");
  std::string ab_manifest, ab_head, ab_out = "runs/ablation";
  int ab_seeds = 3;
  ab->add_option("manifest", ab_manifest)->required();
  ab->add_option("--head", ab_head, "frozen head checkpoint")->required();
  ab->add_option("--out", ab_out, "run directory");
  ab->add_option("--seeds", ab_seeds, "seeds per arm");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    const json cfg = load_config_file(ctx.config_path);
    if (!ctx.seed_set && seed_opt->count() > 0) ctx.seed_set = true;
    if (!ctx.seed_set && cfg.contains("seed")) ctx.seed = cfg.at("seed").get<uint64_t>();

    if (*toygen) {
      head::write_toy_dataset(toygen_out, toygen_train, toygen_test, ctx.seed, toygen_size);
      std::cout << "toy dataset -> " << toygen_out << "\n";
      return 0;
    }

    if (*synth_cmd) {
      synth::SynthConfig sc = cfg.contains("synth") ? synth::SynthConfig::from_json(cfg.at("synth"))
                                                    : synth::SynthConfig{};
      const auto manifest = synth::build_paired_dataset(synth_in, synth_out, sc, ctx.seed);
      write_run_config(synth_out, json{{"command", "synth"},
                                       {"seed", ctx.seed},
                                       {"synth", sc.to_json()},
                                       {"clean_dir", synth_in}});
      std::cout << "wrote " << manifest.records.size() << " degraded records -> " << synth_out
                << "/manifest.jsonl\n";
      return 0;
    }

    if (*ph) {
      auto train_set = train::load_clean_labeled(ph_toy_dir, "train");
      auto holdout = train::load_clean_labeled(ph_toy_dir, "test");
      head::ToyTaskHead<train::real> task_head(derive_seed(ctx.seed, "head"));
      const auto report =
          train::pretrain_toy_head(task_head, train_set, holdout, ctx.seed, ph_steps, ph_target);
      train::save_head_checkpoint(ph_out, task_head,
                                  json{{"clean_accuracy", report.clean_accuracy},
                                       {"steps", report.steps},
                                       {"seed", ctx.seed}});
      std::cout << "head clean accuracy " << report.clean_accuracy << " after " << report.steps
                << " steps -> " << ph_out << "\n";
      return 0;
    }

    if (*tr) {
      train::TrainingConfig tcfg = cfg.contains("training")
                                       ? train::TrainingConfig::from_json(cfg.at("training"))
                                       : train::TrainingConfig{};
      objective::ObjectiveConfig ocfg;
      if (cfg.contains("objective")) {
        const json& oj = cfg.at("objective");
        ocfg.epsilon = oj.value("epsilon", ocfg.epsilon);
        ocfg.alpha = oj.value("alpha", ocfg.alpha);
        ocfg.beta_fi = oj.value("beta_fi", ocfg.beta_fi);
        ocfg.literal_recovery_form = oj.value("literal_recovery_form", false);
      }
      if (seed_opt->count() > 0 || cfg.contains("seed")) tcfg.seed = ctx.seed;
      if (!tr_variant.empty()) tcfg.variant = tr_variant;
      if (tr_alpha >= 0.0) ocfg.alpha = tr_alpha;
      if (tr_beta >= 0.0) ocfg.beta_fi = tr_beta;
      if (tr_max_steps >= 0) tcfg.max_steps = tr_max_steps;
      if (tr_epochs > 0) {
        tcfg.epochs = tr_epochs;
        // A flag-shortened run keeps only the default milestones it reaches;
        // explicitly configured milestones must fit the budget on their own.
        if (!(cfg.contains("training") && cfg.at("training").contains("milestones")))
          std::erase_if(tcfg.milestones, [&](int m) { return m >= tcfg.epochs; });
      }
      if (tr_batch > 0) tcfg.batch_size = tr_batch;
      if (tr_lr > 0.0) tcfg.learning_rate = tr_lr;

      std::unique_ptr<head::ToyTaskHead<train::real>> task_head;
      if (!tr_head.empty()) task_head = train::load_head_checkpoint(tr_head);
      if ((ocfg.alpha > 0.0 || ocfg.beta_fi > 0.0) && !task_head)
        throw ConfigError("train: --head is required when alpha or beta is nonzero");

      const auto manifest = synth::load_manifest(tr_manifest);
      const auto result = train::train(manifest, task_head.get(), ocfg, tcfg, tr_out);
      std::cout << "steps " << result.steps << ", best val PSNR " << result.best_val_psnr
                << " dB (degraded baseline " << result.val_psnr_degraded << " dB)\n"
                << "checkpoint: " << result.checkpoint_path << "\n";
      return result.aborted ? 1 : 0;
    }

    if (*ev) {
      auto fw = train::load_framework_checkpoint(ev_ckpt);
      std::unique_ptr<head::ToyTaskHead<train::real>> task_head;
      if (!ev_head.empty()) task_head = train::load_head_checkpoint(ev_head);
      const auto manifest = synth::load_manifest(ev_manifest);
      const auto labels = train::load_manifest_labels(manifest);
      const auto report = train::evaluate(*fw.net, task_head.get(), manifest, ev_split, labels);

      const enh::NetworkSpec& spec = fw.net->spec();
      std::vector<metrics::CostRow> costs;
      const int H = 512, W = 1024;
      costs.push_back({enh::variant_name(spec.variant), H, W, spec.recursion_T,
                       enh::count_params(spec) / 1e6,
                       enh::count_flops(spec, H, W, spec.recursion_T) / 1e9});
      fs::create_directories(ev_out);
      metrics::emit_report(report, costs, (fs::path(ev_out) / "report.json").string(),
                           (fs::path(ev_out) / "report.txt").string());
      write_run_config(ev_out, json{{"command", "eval"},
                                    {"checkpoint", ev_ckpt},
                                    {"manifest", ev_manifest},
                                    {"split", ev_split}});
      std::cout << "PSNR " << report.overall.psnr_degraded << " -> "
                << report.overall.psnr_enhanced << " dB; report -> " << ev_out << "\n";
      return 0;
    }

    if (*en) {
      auto fw = train::load_framework_checkpoint(en_ckpt);
      const Image in = io::load_png(en_in);
      if (channels(in) != 3) throw InvalidParameter("enhance: needs a 3-channel image");
      io::save_png(en_out, train::enhance_image(*fw.net, in));
      std::cout << en_out << "\n";
      return 0;
    }

    if (*an) {
      const enh::NetworkSpec spec = enh::build_network(an_variant);
      const auto cb = enh::cost_breakdown(spec);
      std::vector<metrics::CostRow> costs;
      costs.push_back({an_variant, an_h, an_w, an_stages,
                       static_cast<double>(cb.total_params) / 1e6,
                       enh::count_flops(spec, an_h, an_w, an_stages) / 1e9});
      std::cout << metrics::render_cost_table(costs);
      std::cout << "single-stage MACs: " << cb.total_macs_per_pixel << " /pixel, "
                << static_cast<double>(cb.total_macs_per_pixel) * an_h * an_w / 1e9
                << " G at " << an_w << "x" << an_h << "\n";
      enh::ActivationLedger harmonic, dense;
      const long long peak = enh::peak_activation_memory(spec, an_h, an_w,
                                                         enh::Wiring::harmonic, &harmonic);
      const long long peak_dense = enh::peak_activation_memory(spec, an_h, an_w,
                                                               enh::Wiring::dense_all_to_all,
                                                               &dense);
      std::cout << "peak activation memory: " << peak / (1024.0 * 1024.0) << " MiB (harmonic) vs "
                << peak_dense / (1024.0 * 1024.0) << " MiB (dense wiring)\n";
      return 0;
    }

    if (*ab) {
      train::AblationConfig acfg;
      if (cfg.contains("training")) acfg.training = train::TrainingConfig::from_json(cfg.at("training"));
      if (cfg.contains("objective")) {
        const json& oj = cfg.at("objective");
        acfg.objective.epsilon = oj.value("epsilon", acfg.objective.epsilon);
        acfg.objective.alpha = oj.value("alpha", 0.01);
        acfg.objective.beta_fi = oj.value("beta_fi", 0.1);
      } else {
        acfg.objective.alpha = 0.01;
        acfg.objective.beta_fi = 0.1;
      }
      if (cfg.contains("ablation")) acfg.seeds = cfg.at("ablation").value("seeds", acfg.seeds);
      acfg.seeds = ab_seeds;
      if (seed_opt->count() > 0 || cfg.contains("seed")) acfg.training.seed = ctx.seed;

      auto task_head = train::load_head_checkpoint(ab_head);
      const auto manifest = synth::load_manifest(ab_manifest);
      const auto report = train::ablation_suite(manifest, task_head.get(), acfg, ab_out);
      std::ofstream(fs::path(ab_out) / "ablation.json") << report.to_json().dump(2) << "\n";
      std::ofstream(fs::path(ab_out) / "ablation.txt") << report.to_text();
      write_run_config(ab_out, json{{"command", "ablate"},
                                    {"seeds", acfg.seeds},
                                    {"training", acfg.training.to_json()}});
      std::cout << report.to_text();
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
