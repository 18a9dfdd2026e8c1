#pragma once

#include <iostream>

#include "wnet/head/task_head.hpp"
#include "wnet/rng.hpp"
#include "wnet/train/data.hpp"

namespace wnet::train {

template <class S>
Tensor<S> to_scalar_batch(const std::vector<const Image*>& images) {
  const Tensor<float> f = pack_batch(images);
  if constexpr (std::is_same_v<S, float>) return f;
  Tensor<S> out(f.shape());
  for (size_t i = 0; i < f.numel(); ++i) out[i] = static_cast<S>(f[i]);
  return out;
}

/// Fraction of images whose argmax class matches the label.
template <class S>
double head_class_accuracy(head::TaskHead<S>& task_head,
                           const std::vector<std::pair<Image, synth::ToyLabel>>& samples,
                           int batch_size = 32) {
  int correct = 0;
  for (size_t at = 0; at < samples.size(); at += static_cast<size_t>(batch_size)) {
    std::vector<const Image*> imgs;
    std::vector<int> want;
    for (size_t i = at; i < std::min(samples.size(), at + batch_size); ++i) {
      imgs.push_back(&samples[i].first);
      want.push_back(samples[i].second.stripes - 1);
    }
    const Tensor<S> batch = to_scalar_batch<S>(imgs);
    const auto out = task_head.forward(batch);
    for (size_t n = 0; n < imgs.size(); ++n) {
      int best = 0;
      for (int k = 1; k < 3; ++k)
        if (out.logits[n * 3 + static_cast<size_t>(k)] > out.logits[n * 3 + static_cast<size_t>(best)])
          best = k;
      if (best == want[n]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

struct PretrainReport {
  double clean_accuracy = 0.0;
  int steps = 0;
};

/// Trains the toy head on clean labeled images until the holdout class
/// accuracy reaches `target` (checked periodically), then freezes it.
/// Fails with diagnostics if the budget runs out first.
template <class S>
PretrainReport pretrain_toy_head(head::ToyTaskHead<S>& task_head,
                                 const std::vector<std::pair<Image, synth::ToyLabel>>& train_set,
                                 const std::vector<std::pair<Image, synth::ToyLabel>>& holdout,
                                 uint64_t seed, int max_steps = 2500, double target = 0.95) {
  if (train_set.empty() || holdout.empty())
    throw InvalidParameter("pretrain_toy_head: empty dataset");
  nn::Adam<S> opt(0.9, 0.999, 1e-8);
  opt.attach(task_head.params());

  const int batch = 16;
  PretrainReport report;
  int step = 0;
  int epoch = 0;
  while (step < max_steps) {
    std::vector<size_t> order(train_set.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle(derive_seed(seed, "pretrain_epoch", static_cast<uint64_t>(epoch)));
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<size_t>(shuffle.uniform_int(0, static_cast<int>(i) - 1))]);

    for (size_t at = 0; at < order.size() && step < max_steps; at += batch) {
      std::vector<const Image*> imgs;
      std::vector<synth::ToyLabel> labels;
      for (size_t i = at; i < std::min(order.size(), at + batch); ++i) {
        imgs.push_back(&train_set[order[i]].first);
        labels.push_back(train_set[order[i]].second);
      }
      const Tensor<S> x = to_scalar_batch<S>(imgs);
      const int N = static_cast<int>(imgs.size());

      task_head.params().zero_grad();
      auto out = task_head.forward(x);
      Tensor<S> dlogits(out.logits.shape());
      Tensor<S> doffset({N});
      const double loss =
          task_head.task_loss(out, std::span<const synth::ToyLabel>(labels), &dlogits, &doffset) /
          N;
      if (!std::isfinite(loss)) throw Error("pretrain_toy_head: loss diverged");
      const S scale = static_cast<S>(1.0 / N);
      for (auto& v : dlogits.flat()) v *= scale;
      for (auto& v : doffset.flat()) v *= scale;
      task_head.backward_to_input(out, &dlogits, &doffset, nullptr);
      opt.step(1e-3, 5.0);
      ++step;

      if (step % 100 == 0 || step == max_steps) {
        const double acc = head_class_accuracy(task_head, holdout);
        if (acc >= target) {
          task_head.freeze();
          report.clean_accuracy = acc;
          report.steps = step;
          return report;
        }
      }
    }
    ++epoch;
  }
  const double acc = head_class_accuracy(task_head, holdout);
  throw Error("pretrain_toy_head: holdout accuracy " + std::to_string(acc) + " below target " +
              std::to_string(target) + " after " + std::to_string(step) + " steps");
}

}  // namespace wnet::train
