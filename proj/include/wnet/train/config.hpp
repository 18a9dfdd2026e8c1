#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "wnet/common.hpp"

namespace wnet::train {

using nlohmann::json;

/// Optimization schedule. The full-scale defaults follow the published
/// recipe (100 epochs, batch 8, lr 1e-4 divided by 5 at epochs 30/50/80);
/// desk-scale runs override epochs/batch/steps through the config file.
struct TrainingConfig {
  int epochs = 100;
  int batch_size = 8;
  double learning_rate = 1e-4;
  std::vector<int> milestones{30, 50, 80};
  double lr_divisor = 5.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 5.0;
  uint64_t seed = 0;
  int max_steps = 0;   // 0 = run all epochs
  int eval_every = 1;  // epochs between validation passes
  int val_subset = 0;  // 0 = validate on the whole held-out split
  std::string variant = "layers33";
  int stages = 3;

  void validate() const {
    if (epochs < 1 || batch_size < 1) throw ConfigError("training: epochs/batch must be >= 1");
    if (!(learning_rate > 0.0) || !(lr_divisor > 1.0))
      throw ConfigError("training: learning rate must be > 0 and divisor > 1");
    if (stages < 1) throw ConfigError("training: stages must be >= 1");
    int prev = 0;
    for (int m : milestones) {
      if (m <= prev) throw ConfigError("training: milestones must be ascending");
      if (m >= epochs) throw ConfigError("training: milestone beyond epoch budget");
      prev = m;
    }
  }

  json to_json() const {
    return json{{"epochs", epochs},
                {"batch_size", batch_size},
                {"learning_rate", learning_rate},
                {"milestones", milestones},
                {"lr_divisor", lr_divisor},
                {"adam_beta1", adam_beta1},
                {"adam_beta2", adam_beta2},
                {"adam_eps", adam_eps},
                {"clip_norm", clip_norm},
                {"seed", seed},
                {"max_steps", max_steps},
                {"eval_every", eval_every},
                {"val_subset", val_subset},
                {"variant", variant},
                {"stages", stages}};
  }

  static TrainingConfig from_json(const json& j) {
    TrainingConfig c;
    auto get = [&j](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("epochs", c.epochs);
    get("batch_size", c.batch_size);
    get("learning_rate", c.learning_rate);
    get("milestones", c.milestones);
    get("lr_divisor", c.lr_divisor);
    get("adam_beta1", c.adam_beta1);
    get("adam_beta2", c.adam_beta2);
    get("adam_eps", c.adam_eps);
    get("clip_norm", c.clip_norm);
    get("seed", c.seed);
    get("max_steps", c.max_steps);
    get("eval_every", c.eval_every);
    get("val_subset", c.val_subset);
    get("variant", c.variant);
    get("stages", c.stages);
    return c;
  }
};

/// Pure function of the 1-based epoch index: the base rate divided once per
/// milestone already passed.
inline double lr_at_epoch(const TrainingConfig& cfg, int epoch) {
  if (epoch < 1) throw InvalidParameter("lr_at_epoch: epochs are 1-based");
  double lr = cfg.learning_rate;
  for (int m : cfg.milestones)
    if (epoch > m) lr /= cfg.lr_divisor;
  return lr;
}

}  // namespace wnet::train
