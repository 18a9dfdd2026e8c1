#pragma once

#include <string>
#include <vector>

#include "wnet/synth/dataset.hpp"
#include "wnet/tensor.hpp"

namespace wnet::train {

struct PairedSample {
  Image degraded;
  Image clean;
  std::string variant_tag;
  std::string degraded_path;
  bool has_label = false;
  synth::ToyLabel label;
};

/// Decodes an entire manifest split into memory (desk-scale datasets are
/// small). Labels are joined by clean-image stem when a label map is given.
std::vector<PairedSample> load_pairs(const synth::DatasetManifest& manifest,
                                     const std::string& split, const synth::LabelMap* labels);

/// Loads the labels.jsonl that lives next to a manifest, if any.
synth::LabelMap load_manifest_labels(const synth::DatasetManifest& manifest);

/// Clean toy images + labels from a toy dataset directory (train/ or test/).
std::vector<std::pair<Image, synth::ToyLabel>> load_clean_labeled(const std::string& toy_dir,
                                                                  const std::string& split);

/// Packs CHW float images into an NCHW float batch.
Tensor<float> pack_batch(const std::vector<const Image*>& images);

}  // namespace wnet::train
