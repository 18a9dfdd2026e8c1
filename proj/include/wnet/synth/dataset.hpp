#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wnet/synth/weather.hpp"

namespace wnet::synth {

struct ManifestRecord {
  std::string clean_path;     // relative to the manifest's directory
  std::string degraded_path;  // ditto
  std::string variant_tag;
  json recipe;
  std::string split;  // "train" | "test"
};

struct DatasetManifest {
  std::vector<ManifestRecord> records;
  std::string root;  // directory the relative paths resolve against

  std::vector<const ManifestRecord*> split_records(const std::string& split) const;
};

/// Degrades every readable PNG under clean_dir into the 4 weather variants
/// and writes <out_dir>/images plus <out_dir>/manifest.jsonl. If clean_dir
/// has train/ and test/ subdirectories the split follows them; otherwise a
/// seeded split with config.train_fraction is applied. Unreadable files are
/// skipped and reported on stderr; an empty input is an error.
DatasetManifest build_paired_dataset(const std::string& clean_dir, const std::string& out_dir,
                                     const SynthConfig& config, uint64_t seed);

DatasetManifest load_manifest(const std::string& manifest_path);
void save_manifest(const DatasetManifest& manifest, const std::string& manifest_path);

/// Per-image task labels, joined by clean-image filename (stem).
struct ToyLabel {
  int stripes = 0;     // class in {1,2,3}
  double offset = 0.0; // normalized mean stripe center in [0,1]
};

using LabelMap = std::map<std::string, ToyLabel>;

LabelMap load_labels(const std::string& labels_path);
void save_labels(const LabelMap& labels, const std::string& labels_path);

/// Looks up the label for a manifest record (by clean-image stem).
std::optional<ToyLabel> label_for(const LabelMap& labels, const ManifestRecord& rec);

}  // namespace wnet::synth
