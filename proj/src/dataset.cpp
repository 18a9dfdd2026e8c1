#include "wnet/synth/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "wnet/io/png_io.hpp"
#include "wnet/rng.hpp"

namespace wnet::synth {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> list_pngs(const fs::path& dir) {
  std::vector<std::string> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

}  // namespace

std::vector<const ManifestRecord*> DatasetManifest::split_records(const std::string& split) const {
  std::vector<const ManifestRecord*> out;
  for (const auto& r : records)
    if (r.split == split) out.push_back(&r);
  return out;
}

DatasetManifest build_paired_dataset(const std::string& clean_dir, const std::string& out_dir,
                                     const SynthConfig& config, uint64_t seed) {
  if (!fs::is_directory(clean_dir))
    throw IoError("build_paired_dataset: not a directory: " + clean_dir);

  // (path, split) pairs. A train/ + test/ layout wins over a flat listing.
  std::vector<std::pair<std::string, std::string>> sources;
  const auto train_files = list_pngs(fs::path(clean_dir) / "train");
  const auto test_files = list_pngs(fs::path(clean_dir) / "test");
  if (!train_files.empty() || !test_files.empty()) {
    for (const auto& p : train_files) sources.emplace_back(p, "train");
    for (const auto& p : test_files) sources.emplace_back(p, "test");
  } else {
    auto flat = list_pngs(clean_dir);
    // Deterministic split: shuffle indices with the dataset seed, first
    // train_fraction goes to train.
    std::vector<size_t> order(flat.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(seed, "split"));
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
    const size_t n_train =
        static_cast<size_t>(std::llround(config.train_fraction * static_cast<double>(flat.size())));
    std::vector<std::string> split_of(flat.size(), "test");
    for (size_t i = 0; i < order.size() && i < n_train; ++i) split_of[order[i]] = "train";
    for (size_t i = 0; i < flat.size(); ++i) sources.emplace_back(flat[i], split_of[i]);
  }
  if (sources.empty()) throw IoError("build_paired_dataset: no PNG images in " + clean_dir);

  fs::create_directories(fs::path(out_dir) / "images");
  fs::create_directories(fs::path(out_dir) / "clean");

  DatasetManifest manifest;
  manifest.root = out_dir;
  size_t skipped = 0;
  for (const auto& [path, split] : sources) {
    Image clean;
    try {
      clean = io::load_png(path);
    } catch (const Error& e) {
      std::cerr << "build_paired_dataset: skipping " << path << " (" << e.what() << ")\n";
      ++skipped;
      continue;
    }
    const std::string stem = stem_of(path);
    // Keep a copy of the clean image inside the dataset so the manifest is
    // self-contained and relocatable.
    const std::string clean_rel = "clean/" + stem + ".png";
    io::save_png((fs::path(out_dir) / clean_rel).string(), clean);

    const uint64_t image_seed = derive_seed(seed, stem);
    for (auto& variant : compose_variants(clean, config, image_seed)) {
      const std::string degraded_rel = "images/" + stem + "__" + variant.tag + ".png";
      io::save_png((fs::path(out_dir) / degraded_rel).string(), variant.image);
      manifest.records.push_back(
          {clean_rel, degraded_rel, variant.tag, variant.recipe.to_json(), split});
    }
  }
  if (manifest.records.empty())
    throw IoError("build_paired_dataset: no readable images in " + clean_dir);
  if (skipped > 0)
    std::cerr << "build_paired_dataset: skipped " << skipped << " unreadable file(s)\n";

  // Carry task labels along when the source directory provides them.
  for (const char* cand : {"labels.jsonl"}) {
    const fs::path src = fs::path(clean_dir) / cand;
    if (fs::is_regular_file(src)) fs::copy_file(src, fs::path(out_dir) / cand,
                                                fs::copy_options::overwrite_existing);
  }

  save_manifest(manifest, (fs::path(out_dir) / "manifest.jsonl").string());
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::string& manifest_path) {
  std::ofstream out(manifest_path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest: " + manifest_path);
  for (const auto& r : manifest.records) {
    json j{{"clean_path", r.clean_path},
           {"degraded_path", r.degraded_path},
           {"variant_tag", r.variant_tag},
           {"recipe", r.recipe},
           {"split", r.split}};
    out << j.dump() << "\n";
  }
}

DatasetManifest load_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest: " + manifest_path);
  DatasetManifest manifest;
  manifest.root = fs::path(manifest_path).parent_path().string();
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw IoError("manifest parse error at line " + std::to_string(lineno) + ": " + e.what());
    }
    manifest.records.push_back({j.at("clean_path").get<std::string>(),
                                j.at("degraded_path").get<std::string>(),
                                j.at("variant_tag").get<std::string>(), j.value("recipe", json{}),
                                j.at("split").get<std::string>()});
  }
  if (manifest.records.empty()) throw IoError("manifest is empty: " + manifest_path);
  return manifest;
}

LabelMap load_labels(const std::string& labels_path) {
  std::ifstream in(labels_path, std::ios::binary);
  if (!in) throw IoError("cannot open labels: " + labels_path);
  LabelMap labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    ToyLabel lab;
    lab.stripes = j.at("stripes").get<int>();
    lab.offset = j.at("offset").get<double>();
    labels[j.at("image").get<std::string>()] = lab;
  }
  return labels;
}

void save_labels(const LabelMap& labels, const std::string& labels_path) {
  std::ofstream out(labels_path, std::ios::binary);
  if (!out) throw IoError("cannot write labels: " + labels_path);
  for (const auto& [name, lab] : labels) {
    json j{{"image", name}, {"stripes", lab.stripes}, {"offset", lab.offset}};
    out << j.dump() << "\n";
  }
}

std::optional<ToyLabel> label_for(const LabelMap& labels, const ManifestRecord& rec) {
  const auto it = labels.find(stem_of(rec.clean_path));
  if (it == labels.end()) return std::nullopt;
  return it->second;
}

}  // namespace wnet::synth
