#include "wnet/train/data.hpp"

#include <filesystem>

#include "wnet/io/png_io.hpp"

namespace wnet::train {

namespace fs = std::filesystem;

std::vector<PairedSample> load_pairs(const synth::DatasetManifest& manifest,
                                     const std::string& split, const synth::LabelMap* labels) {
  std::vector<PairedSample> out;
  for (const auto& rec : manifest.records) {
    if (rec.split != split) continue;
    PairedSample s;
    s.degraded = io::load_png((fs::path(manifest.root) / rec.degraded_path).string());
    s.clean = io::load_png((fs::path(manifest.root) / rec.clean_path).string());
    s.variant_tag = rec.variant_tag;
    s.degraded_path = rec.degraded_path;
    if (labels) {
      if (auto lab = synth::label_for(*labels, rec)) {
        s.has_label = true;
        s.label = *lab;
      }
    }
    out.push_back(std::move(s));
  }
  if (out.empty()) throw Error("no records in split '" + split + "'");
  return out;
}

synth::LabelMap load_manifest_labels(const synth::DatasetManifest& manifest) {
  const fs::path p = fs::path(manifest.root) / "labels.jsonl";
  if (!fs::is_regular_file(p)) return {};
  return synth::load_labels(p.string());
}

std::vector<std::pair<Image, synth::ToyLabel>> load_clean_labeled(const std::string& toy_dir,
                                                                  const std::string& split) {
  const synth::LabelMap labels = synth::load_labels((fs::path(toy_dir) / "labels.jsonl").string());
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(fs::path(toy_dir) / split))
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no images under " + toy_dir + "/" + split);

  std::vector<std::pair<Image, synth::ToyLabel>> out;
  for (const auto& f : files) {
    const auto it = labels.find(fs::path(f).stem().string());
    if (it == labels.end()) throw IoError("no label for " + f);
    out.emplace_back(io::load_png(f), it->second);
  }
  return out;
}

Tensor<float> pack_batch(const std::vector<const Image*>& images) {
  if (images.empty()) throw InvalidParameter("pack_batch: empty batch");
  const Image& first = *images.front();
  Tensor<float> batch({static_cast<int>(images.size()), channels(first), height(first),
                       width(first)});
  for (size_t n = 0; n < images.size(); ++n) {
    images[n]->require_shape(first, "pack_batch");
    std::copy(images[n]->data(), images[n]->data() + images[n]->numel(),
              batch.data() + n * first.numel());
  }
  return batch;
}

}  // namespace wnet::train
