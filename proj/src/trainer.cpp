#include "wnet/train/trainer.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "wnet/io/checkpoint.hpp"
#include "wnet/metrics/quality.hpp"
#include "wnet/rng.hpp"

namespace wnet::train {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

void save_framework_checkpoint(const std::string& path, const enh::RecursiveEnhancer<real>& net,
                               const fie::IdentityProjector<real>& fie_net,
                               const json& extra_meta) {
  io::Checkpoint ckpt;
  ckpt.meta["kind"] = "enhancer_framework";
  ckpt.meta["arch"] = net.spec().to_json();
  ckpt.meta["fie"] = {{"seed", fie_net.seed()},
                      {"branch_channels", fie_net.branch_channel_list()},
                      {"projection_dims", fie_net.projection_dim_list()}};
  if (!extra_meta.is_null()) ckpt.meta["run"] = extra_meta;
  io::append_store(net.params(), ckpt.tensors);
  io::append_store(fie_net.params(), ckpt.tensors);
  io::save_checkpoint(path, ckpt);
}

LoadedFramework load_framework_checkpoint(const std::string& path) {
  const io::Checkpoint ckpt = io::load_checkpoint(path);
  if (ckpt.meta.value("kind", "") != "enhancer_framework")
    throw IoError("not a framework checkpoint: " + path);

  LoadedFramework out;
  out.meta = ckpt.meta;
  const enh::NetworkSpec spec = enh::NetworkSpec::from_json(ckpt.meta.at("arch"));
  out.net = std::make_unique<enh::RecursiveEnhancer<real>>(spec, /*seed=*/0);
  io::load_into_store(ckpt, out.net->params());

  const json& fj = ckpt.meta.at("fie");
  out.fie_net = std::make_unique<fie::IdentityProjector<real>>(fj.at("seed").get<uint64_t>());
  for (int c : fj.at("branch_channels").get<std::vector<int>>())
    out.fie_net->ensure_branch_channels(c);
  for (int d : fj.at("projection_dims").get<std::vector<int>>())
    out.fie_net->ensure_projection_dim(d);
  io::load_into_store(ckpt, out.fie_net->params());
  return out;
}

void save_head_checkpoint(const std::string& path, const head::ToyTaskHead<real>& task_head,
                          const json& extra_meta) {
  io::Checkpoint ckpt;
  ckpt.meta["kind"] = "task_head";
  ckpt.meta["capability"] = task_head.capability().to_json();
  ckpt.meta["frozen"] = task_head.frozen();
  if (!extra_meta.is_null()) ckpt.meta["pretrain"] = extra_meta;
  io::append_store(task_head.params(), ckpt.tensors);
  io::save_checkpoint(path, ckpt);
}

std::unique_ptr<head::ToyTaskHead<real>> load_head_checkpoint(const std::string& path) {
  const io::Checkpoint ckpt = io::load_checkpoint(path);
  if (ckpt.meta.value("kind", "") != "task_head") throw IoError("not a head checkpoint: " + path);
  auto task_head = std::make_unique<head::ToyTaskHead<real>>(/*seed=*/0);
  io::load_into_store(ckpt, task_head->params());
  if (ckpt.meta.value("frozen", false)) task_head->freeze();
  return task_head;
}

// ---------------------------------------------------------------------------
// Inference helpers
// ---------------------------------------------------------------------------

Image enhance_image(enh::RecursiveEnhancer<real>& net, const Image& degraded) {
  std::vector<const Image*> one{&degraded};
  const Tensor<real> batch = pack_batch(one);
  auto& rollout = net.forward(batch, /*training=*/false);
  const Tensor<real>& out = rollout.final_output();
  Image im({3, out.dim(2), out.dim(3)});
  std::copy(out.data(), out.data() + out.numel(), im.data());
  clamp01(im);
  return im;
}

namespace {

Image tensor_slice_to_image(const Tensor<real>& batch, int n) {
  Image im({batch.dim(1), batch.dim(2), batch.dim(3)});
  std::copy(&batch.at(n, 0, 0, 0), &batch.at(n, 0, 0, 0) + im.numel(), im.data());
  clamp01(im);
  return im;
}

int argmax3(const Tensor<real>& logits, int n) {
  int best = 0;
  for (int k = 1; k < 3; ++k)
    if (logits[static_cast<size_t>(n) * 3 + k] > logits[static_cast<size_t>(n) * 3 + best])
      best = k;
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

EvalReport evaluate(enh::RecursiveEnhancer<real>& net, head::TaskHead<real>* task_head,
                    const synth::DatasetManifest& manifest, const std::string& split,
                    const synth::LabelMap& labels) {
  const auto samples = load_pairs(manifest, split, &labels);

  EvalReport report;
  int correct_deg = 0, correct_enh = 0;
  const int batch_size = 8;
  for (size_t at = 0; at < samples.size(); at += batch_size) {
    std::vector<const Image*> deg;
    const size_t end = std::min(samples.size(), at + batch_size);
    for (size_t i = at; i < end; ++i) deg.push_back(&samples[i].degraded);
    const Tensor<real> x = pack_batch(deg);
    auto& rollout = net.forward(x, /*training=*/false);
    const Tensor<real>& out = rollout.final_output();

    std::unique_ptr<head::HeadOutputs<real>> ho_deg, ho_enh;
    if (task_head) {
      ho_deg = std::make_unique<head::HeadOutputs<real>>(task_head->forward(x));
      ho_enh = std::make_unique<head::HeadOutputs<real>>(task_head->forward(out));
    }

    for (size_t i = at; i < end; ++i) {
      const int n = static_cast<int>(i - at);
      const PairedSample& s = samples[i];
      EvalRow row;
      row.degraded_path = s.degraded_path;
      row.variant_tag = s.variant_tag;
      const Image enhanced = tensor_slice_to_image(out, n);
      row.psnr_degraded = metrics::psnr(s.degraded, s.clean);
      row.psnr_enhanced = metrics::psnr(enhanced, s.clean);
      row.ssim_degraded = metrics::ssim(s.degraded, s.clean);
      row.ssim_enhanced = metrics::ssim(enhanced, s.clean);
      if (task_head && s.has_label) {
        row.label_class = s.label.stripes - 1;
        row.pred_degraded = argmax3(ho_deg->logits, n);
        row.pred_enhanced = argmax3(ho_enh->logits, n);
        ++report.labeled_count;
        if (row.pred_degraded == row.label_class) ++correct_deg;
        if (row.pred_enhanced == row.label_class) ++correct_enh;
      }
      auto& agg = report.per_variant[row.variant_tag];
      agg.psnr_degraded += row.psnr_degraded;
      agg.psnr_enhanced += row.psnr_enhanced;
      agg.ssim_degraded += row.ssim_degraded;
      agg.ssim_enhanced += row.ssim_enhanced;
      ++agg.count;
      report.overall.psnr_degraded += row.psnr_degraded;
      report.overall.psnr_enhanced += row.psnr_enhanced;
      report.overall.ssim_degraded += row.ssim_degraded;
      report.overall.ssim_enhanced += row.ssim_enhanced;
      ++report.overall.count;
      report.rows.push_back(std::move(row));
    }
  }

  auto finish = [](EvalAggregate& a) {
    if (a.count == 0) return;
    a.psnr_degraded /= a.count;
    a.psnr_enhanced /= a.count;
    a.ssim_degraded /= a.count;
    a.ssim_enhanced /= a.count;
  };
  finish(report.overall);
  for (auto& [tag, agg] : report.per_variant) finish(agg);
  if (report.labeled_count > 0) {
    report.accuracy_degraded = static_cast<double>(correct_deg) / report.labeled_count;
    report.accuracy_enhanced = static_cast<double>(correct_enh) / report.labeled_count;
  }
  return report;
}

json EvalReport::to_json() const {
  json per;
  for (const auto& [tag, a] : per_variant)
    per[tag] = {{"psnr_degraded", a.psnr_degraded}, {"psnr_enhanced", a.psnr_enhanced},
                {"ssim_degraded", a.ssim_degraded}, {"ssim_enhanced", a.ssim_enhanced},
                {"count", a.count}};
  json rows_j = json::array();
  for (const auto& r : rows)
    rows_j.push_back({{"degraded_path", r.degraded_path},
                      {"variant_tag", r.variant_tag},
                      {"psnr_degraded", r.psnr_degraded},
                      {"psnr_enhanced", r.psnr_enhanced},
                      {"ssim_degraded", r.ssim_degraded},
                      {"ssim_enhanced", r.ssim_enhanced},
                      {"label_class", r.label_class},
                      {"pred_degraded", r.pred_degraded},
                      {"pred_enhanced", r.pred_enhanced}});
  return json{{"overall",
               {{"psnr_degraded", overall.psnr_degraded},
                {"psnr_enhanced", overall.psnr_enhanced},
                {"ssim_degraded", overall.ssim_degraded},
                {"ssim_enhanced", overall.ssim_enhanced},
                {"count", overall.count}}},
              {"per_variant", per},
              {"accuracy_degraded", accuracy_degraded},
              {"accuracy_enhanced", accuracy_enhanced},
              {"labeled_count", labeled_count},
              {"rows", rows_j}};
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

namespace {

double mean_val_psnr(enh::RecursiveEnhancer<real>& net, const std::vector<PairedSample>& val,
                     size_t limit = 0) {
  const size_t n = limit > 0 ? std::min(limit, val.size()) : val.size();
  double acc = 0.0;
  const int batch_size = 8;
  for (size_t at = 0; at < n; at += batch_size) {
    std::vector<const Image*> deg;
    const size_t end = std::min(n, at + batch_size);
    for (size_t i = at; i < end; ++i) deg.push_back(&val[i].degraded);
    const Tensor<real> x = pack_batch(deg);
    auto& rollout = net.forward(x, false);
    for (size_t i = at; i < end; ++i) {
      const Image enhanced = tensor_slice_to_image(rollout.final_output(),
                                                   static_cast<int>(i - at));
      acc += metrics::psnr(enhanced, val[i].clean);
    }
  }
  return acc / static_cast<double>(n);
}

}  // namespace

TrainResult train(const synth::DatasetManifest& manifest, head::TaskHead<real>* task_head,
                  const objective::ObjectiveConfig& ocfg, const TrainingConfig& tcfg,
                  const std::string& run_dir) {
  ocfg.validate();
  tcfg.validate();
  if ((ocfg.alpha > 0.0 || ocfg.beta_fi > 0.0) && !task_head)
    throw ConfigError("train: objective needs a task head");

  fs::create_directories(run_dir);

  const synth::LabelMap labels = load_manifest_labels(manifest);
  auto train_set = load_pairs(manifest, "train", &labels);
  auto val_set = load_pairs(manifest, "test", &labels);
  if (ocfg.alpha > 0.0)
    for (const auto& s : train_set)
      if (!s.has_label) throw ConfigError("train: task loss enabled but sample has no label");

  const int H = height(train_set.front().degraded), W = width(train_set.front().degraded);

  enh::NetworkSpec spec = enh::build_network(tcfg.variant);
  spec.recursion_T = tcfg.stages;
  enh::RecursiveEnhancer<real> net(spec, derive_seed(tcfg.seed, "enhancer"));
  fie::IdentityProjector<real> fie_net(derive_seed(tcfg.seed, "fie"));

  // Create every FIE branch up front so the optimizer sees all parameters.
  fie_net.ensure_branch_shapes(32, H, W);
  if (task_head) {
    Tensor<real> probe({1, 3, H, W});
    const auto ho = task_head->forward(probe);
    fie_net.ensure_branch_shapes(ho.f_last.dim(1), ho.f_last.dim(2), ho.f_last.dim(3));
  }

  nn::Adam<real> opt(tcfg.adam_beta1, tcfg.adam_beta2, tcfg.adam_eps);
  opt.attach(net.params());
  opt.attach(fie_net.params());

  // Record the resolved run configuration verbatim.
  {
    json rc{{"training", tcfg.to_json()},
            {"objective",
             {{"epsilon", ocfg.epsilon},
              {"alpha", ocfg.alpha},
              {"beta_fi", ocfg.beta_fi},
              {"literal_recovery_form", ocfg.literal_recovery_form}}},
            {"manifest_root", manifest.root},
            {"train_records", train_set.size()},
            {"val_records", val_set.size()}};
    std::ofstream(fs::path(run_dir) / "run_config.json") << rc.dump(2) << "\n";
  }

  TrainResult result;
  result.run_dir = run_dir;
  result.checkpoint_path = (fs::path(run_dir) / "checkpoint_best.wckpt").string();
  result.runlog_path = (fs::path(run_dir) / "runlog.jsonl").string();
  std::ofstream runlog(result.runlog_path, std::ios::binary);

  double baseline = 0.0;
  for (const auto& s : val_set) baseline += metrics::psnr(s.degraded, s.clean);
  result.val_psnr_degraded = baseline / static_cast<double>(val_set.size());

  // Initial validation so an aborted run still leaves a loadable checkpoint.
  const size_t val_limit = static_cast<size_t>(std::max(0, tcfg.val_subset));
  result.best_val_psnr = mean_val_psnr(net, val_set, val_limit);
  save_framework_checkpoint(result.checkpoint_path, net, fie_net,
                            json{{"epoch", 0}, {"val_psnr", result.best_val_psnr}});
  runlog << json{{"type", "epoch"}, {"epoch", 0}, {"val_psnr", result.best_val_psnr},
                 {"val_psnr_degraded", result.val_psnr_degraded}, {"best", true}}
                .dump()
         << "\n";

  int step = 0;
  bool done = false;
  const auto t0 = std::chrono::steady_clock::now();
  for (int epoch = 1; epoch <= tcfg.epochs && !done; ++epoch) {
    const double lr = lr_at_epoch(tcfg, epoch);
    std::vector<size_t> order(train_set.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle(derive_seed(tcfg.seed, "epoch", static_cast<uint64_t>(epoch)));
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1],
                order[static_cast<size_t>(shuffle.uniform_int(0, static_cast<int>(i) - 1))]);

    double epoch_recovery = 0.0;
    int epoch_steps = 0;
    for (size_t at = 0; at < order.size() && !done; at += static_cast<size_t>(tcfg.batch_size)) {
      const size_t end = std::min(order.size(), at + static_cast<size_t>(tcfg.batch_size));
      objective::Batch<real> batch;
      std::vector<const Image*> deg, cln;
      for (size_t i = at; i < end; ++i) {
        deg.push_back(&train_set[order[i]].degraded);
        cln.push_back(&train_set[order[i]].clean);
        if (ocfg.alpha > 0.0) batch.labels.push_back(train_set[order[i]].label);
      }
      batch.degraded = pack_batch(deg);
      batch.clean = pack_batch(cln);

      net.params().zero_grad();
      fie_net.params().zero_grad();
      const auto terms =
          objective::total_objective(net, fie_net, task_head, batch, ocfg, true, true);
      if (!terms.finite()) {
        std::cerr << "train: non-finite loss at step " << step << ", aborting\n";
        result.aborted = true;
        done = true;
        break;
      }
      const double gnorm = opt.step(lr, tcfg.clip_norm);
      ++step;
      ++epoch_steps;
      epoch_recovery += terms.recovery;

      const double wall_ms = std::chrono::duration<double, std::milli>(
                                 std::chrono::steady_clock::now() - t0)
                                 .count();
      runlog << json{{"type", "step"},     {"step", step},
                     {"epoch", epoch},     {"lr", lr},
                     {"l_r", terms.recovery}, {"l_ht", terms.task},
                     {"l_fi", terms.identity}, {"total", terms.total},
                     {"grad_norm", gnorm}, {"wall_ms", wall_ms}}
                    .dump()
             << "\n";
      if (tcfg.max_steps > 0 && step >= tcfg.max_steps) done = true;
    }
    if (epoch_steps == 0) continue;

    epoch_recovery /= epoch_steps;
    if (epoch == 1) result.first_epoch_recovery = epoch_recovery;
    result.final_epoch_recovery = epoch_recovery;

    const bool eval_now = (epoch % tcfg.eval_every == 0) || done || epoch == tcfg.epochs;
    double val_psnr = -1.0;
    bool best = false;
    if (eval_now && !result.aborted) {
      val_psnr = mean_val_psnr(net, val_set, val_limit);
      if (val_psnr > result.best_val_psnr) {
        result.best_val_psnr = val_psnr;
        best = true;
        save_framework_checkpoint(result.checkpoint_path, net, fie_net,
                                  json{{"epoch", epoch}, {"val_psnr", val_psnr}});
      }
    }
    runlog << json{{"type", "epoch"},         {"epoch", epoch},
                   {"mean_l_r", epoch_recovery}, {"lr", lr},
                   {"val_psnr", val_psnr},     {"best", best}}
                  .dump()
           << "\n";
  }
  result.steps = step;
  return result;
}

}  // namespace wnet::train
