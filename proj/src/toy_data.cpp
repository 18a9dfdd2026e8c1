#include "wnet/head/toy_data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "wnet/io/png_io.hpp"
#include "wnet/rng.hpp"

namespace wnet::head {

namespace fs = std::filesystem;

Image render_toy_scene(uint64_t seed, int size, synth::ToyLabel& label) {
  Rng rng(seed);
  const int H = size, W = size;
  Image im({3, H, W});

  // Background: tinted base + two low-frequency waves + speckle.
  const double base = rng.uniform(0.18, 0.30);
  double tint[3];
  for (double& t : tint) t = rng.uniform(-0.03, 0.03);
  const double fx = rng.uniform(1.0, 3.0), fy = rng.uniform(1.0, 3.0);
  const double px = rng.uniform(0.0, 6.283), py = rng.uniform(0.0, 6.283);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const double wave = 0.05 * std::sin(6.283 * fx * x / W + px) +
                          0.05 * std::sin(6.283 * fy * y / H + py);
      const double noise = rng.uniform(-0.04, 0.04);
      for (int c = 0; c < 3; ++c)
        im.at(c, y, x) = static_cast<float>(base + tint[c] + wave + noise);
    }

  // Stripes: count in {1,2,3}, spread around a random center column.
  const int count = rng.uniform_int(1, 3);
  const double mu = rng.uniform(0.3, 0.7) * W;
  const double spread = rng.uniform(12.0, 18.0);
  const double slope = rng.uniform(-0.15, 0.15);
  const double stripe_w = rng.uniform(3.5, 6.0);
  const double bright = rng.uniform(0.85, 1.0);
  const double color[3] = {0.98 * bright, 0.95 * bright, 0.85 * bright};

  std::vector<double> centers;
  double center_sum = 0.0;
  for (int i = 0; i < count; ++i) {
    double c = mu + spread * (i - (count - 1) / 2.0);
    c = std::clamp(c, 4.0, static_cast<double>(W - 4));
    centers.push_back(c);
    center_sum += c;
  }

  for (int y = 0; y < H; ++y)
    for (const double center : centers) {
      const double cx = center + slope * (y - H / 2.0);
      const int x0 = std::max(0, static_cast<int>(std::floor(cx - stripe_w)));
      const int x1 = std::min(W - 1, static_cast<int>(std::ceil(cx + stripe_w)));
      for (int x = x0; x <= x1; ++x) {
        const double cov =
            std::clamp(stripe_w / 2.0 + 0.5 - std::abs(x + 0.5 - cx), 0.0, 1.0);
        if (cov <= 0.0) continue;
        const float a = static_cast<float>(0.92 * cov);
        for (int c = 0; c < 3; ++c)
          im.at(c, y, x) = (1.f - a) * im.at(c, y, x) + a * static_cast<float>(color[c]);
      }
    }

  clamp01(im);
  label.stripes = count;
  label.offset = center_sum / count / W;
  return im;
}

void write_toy_dataset(const std::string& out_dir, int n_train, int n_test, uint64_t seed,
                       int size) {
  if (n_train < 1 || n_test < 0) throw InvalidParameter("write_toy_dataset: bad split sizes");
  fs::create_directories(fs::path(out_dir) / "train");
  fs::create_directories(fs::path(out_dir) / "test");

  synth::LabelMap labels;
  char name[64];
  for (int i = 0; i < n_train + n_test; ++i) {
    std::snprintf(name, sizeof(name), "toy_%05d", i);
    synth::ToyLabel label;
    const Image im = render_toy_scene(derive_seed(seed, "scene", static_cast<uint64_t>(i)), size,
                                      label);
    const char* split = i < n_train ? "train" : "test";
    io::save_png((fs::path(out_dir) / split / (std::string(name) + ".png")).string(), im);
    labels[name] = label;
  }
  synth::save_labels(labels, (fs::path(out_dir) / "labels.jsonl").string());
}

}  // namespace wnet::head
