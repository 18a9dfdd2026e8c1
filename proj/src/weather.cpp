#include "wnet/synth/weather.hpp"

#include <algorithm>
#include <cmath>

#include "wnet/rng.hpp"

namespace wnet::synth {

namespace {
constexpr double kPi = 3.14159265358979323846;

float clampf(float v, float lo, float hi) { return v < lo ? lo : (v > hi ? hi : v); }
}  // namespace

// ---------------------------------------------------------------------------
// Parameter validation
// ---------------------------------------------------------------------------

void HazeParams::validate() const {
  if (!(beta >= 0.f) || !std::isfinite(beta))
    throw InvalidParameter("haze: beta must be finite and >= 0");
  for (float a : atmospheric_light)
    if (!(a >= 0.f && a <= 1.f)) throw InvalidParameter("haze: atmospheric light outside [0,1]");
  if (depth_map.rank() != 2) throw InvalidParameter("haze: depth map must be HxW");
  for (float d : depth_map.flat())
    if (!std::isfinite(d) || d < 0.f)
      throw InvalidParameter("haze: depth map must be finite and >= 0");
}

void RainStreakParams::validate() const {
  if (!(density >= 0.f)) throw InvalidParameter("streaks: density must be >= 0");
  if (!(streak_alpha >= 0.f && streak_alpha <= 1.f))
    throw InvalidParameter("streaks: alpha outside [0,1]");
  if (!(orientation_deg >= -90.f && orientation_deg <= 90.f))
    throw InvalidParameter("streaks: orientation outside [-90,90]");
  if (!(streak_length > 0.f) || !(streak_width > 0.f))
    throw InvalidParameter("streaks: length/width must be positive");
}

void RaindropParams::validate() const {
  if (drop_count < 0) throw InvalidParameter("raindrops: count must be >= 0");
  if (!(radius_min <= radius_max)) throw InvalidParameter("raindrops: radius_min > radius_max");
  if (!(radius_min > 0.f)) throw InvalidParameter("raindrops: radius must be positive");
  if (!(drop_alpha >= 0.f && drop_alpha <= 1.f))
    throw InvalidParameter("raindrops: alpha outside [0,1]");
}

// ---------------------------------------------------------------------------
// Haze
// ---------------------------------------------------------------------------

Tensor<float> make_ramp_depth(int height, int width, float top, float bottom) {
  Tensor<float> d({height, width});
  for (int y = 0; y < height; ++y) {
    const float t = height > 1 ? static_cast<float>(y) / static_cast<float>(height - 1) : 0.f;
    const float v = top + (bottom - top) * t;
    for (int x = 0; x < width; ++x) d[static_cast<size_t>(y) * width + x] = v;
  }
  return d;
}

Tensor<float> transmission_map(const Tensor<float>& depth_map, float beta) {
  if (!(beta >= 0.f) || !std::isfinite(beta))
    throw InvalidParameter("transmission_map: beta must be finite and >= 0");
  Tensor<float> t(depth_map.shape());
  const float* d = depth_map.data();
  float* out = t.data();
  for (size_t i = 0; i < depth_map.numel(); ++i) {
    if (!std::isfinite(d[i]) || d[i] < 0.f)
      throw InvalidParameter("transmission_map: depth must be finite and >= 0");
    out[i] = std::exp(-beta * d[i]);
  }
  return t;
}

Image apply_haze(const Image& clean, const HazeParams& params) {
  require_image(clean, "apply_haze");
  params.validate();
  if (params.depth_map.dim(0) != height(clean) || params.depth_map.dim(1) != width(clean))
    throw ShapeError("apply_haze: depth map does not match image size");

  const Tensor<float> t = transmission_map(params.depth_map, params.beta);
  Image out(clean.shape());
  const int ch = channels(clean), h = height(clean), w = width(clean);
  for (int c = 0; c < ch; ++c) {
    const float a = params.atmospheric_light[static_cast<size_t>(ch == 1 ? 0 : c)];
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const float tr = t[static_cast<size_t>(y) * w + x];
        out.at(c, y, x) = clampf(clean.at(c, y, x) * tr + a * (1.f - tr), 0.f, 1.f);
      }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rain streaks
// ---------------------------------------------------------------------------

namespace {

// Coverage of a pixel center against a capsule around segment [q0,q1]:
// 1 inside, linear 1px falloff at the edge. Shared definition with the
// brute-force oracle in the tests.
double segment_coverage(double px, double py, double q0x, double q0y, double q1x, double q1y,
                        double half_width) {
  const double vx = q1x - q0x, vy = q1y - q0y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((px - q0x) * vx + (py - q0y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (q0x + t * vx), dy = py - (q0y + t * vy);
  const double dist = std::sqrt(dx * dx + dy * dy);
  return std::clamp(half_width + 0.5 - dist, 0.0, 1.0);
}

struct StreakDraw {
  double q0x, q0y, q1x, q1y;
  double weight;      // alpha * smear tap weight
  double brightness;  // streak luminance
};

// One streak expands into three parallel capsules (the motion smear).
std::vector<StreakDraw> plan_streaks(int h, int w, const RainStreakParams& p, uint64_t seed) {
  Rng rng(seed);
  const double megapixels = static_cast<double>(h) * w / 1e6;
  const int count = static_cast<int>(std::llround(p.density * megapixels));
  std::vector<StreakDraw> draws;
  draws.reserve(static_cast<size_t>(count) * 3);
  for (int s = 0; s < count; ++s) {
    const double cx = rng.uniform(0.0, w);
    const double cy = rng.uniform(0.0, h);
    const double ang = rng.uniform(-p.orientation_deg, p.orientation_deg) * kPi / 180.0;
    const double len = p.streak_length * rng.uniform(0.75, 1.25);
    const double bright = rng.uniform(0.85, 1.0);
    const double dx = std::sin(ang), dy = std::cos(ang);  // 0 deg = vertical fall
    const double hx = dx * len / 2.0, hy = dy * len / 2.0;
    static constexpr double tap_off[3] = {-1.0, 0.0, 1.0};
    static constexpr double tap_w[3] = {0.25, 0.5, 0.25};
    for (int tap = 0; tap < 3; ++tap) {
      const double ox = tap_off[tap] * dx, oy = tap_off[tap] * dy;
      draws.push_back({cx - hx + ox, cy - hy + oy, cx + hx + ox, cy + hy + oy,
                       static_cast<double>(p.streak_alpha) * tap_w[tap], bright});
    }
  }
  return draws;
}

}  // namespace

Image render_rain_streaks(const Image& clean, const RainStreakParams& params, uint64_t seed) {
  require_image(clean, "render_rain_streaks");
  params.validate();
  const int ch = channels(clean), h = height(clean), w = width(clean);

  const auto draws = plan_streaks(h, w, params, seed);
  if (draws.empty()) return clean;

  // Accumulate per-pixel alpha mass and brightness-weighted mass.
  Tensor<float> mask({h, w});
  Tensor<float> lum({h, w});
  const double reach = params.streak_width / 2.0 + 1.5;
  for (const StreakDraw& d : draws) {
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(d.q0x, d.q1x) - reach)));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(std::max(d.q0x, d.q1x) + reach)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(d.q0y, d.q1y) - reach)));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(std::max(d.q0y, d.q1y) + reach)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double cov = segment_coverage(x + 0.5, y + 0.5, d.q0x, d.q0y, d.q1x, d.q1y,
                                            params.streak_width / 2.0);
        if (cov <= 0.0) continue;
        const size_t i = static_cast<size_t>(y) * w + x;
        mask[i] += static_cast<float>(d.weight * cov);
        lum[i] += static_cast<float>(d.weight * cov * d.brightness);
      }
  }

  Image out = clean;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const size_t i = static_cast<size_t>(y) * w + x;
      if (mask[i] <= 0.f) continue;  // untouched pixels stay bit-identical
      const float m = std::min(1.f, mask[i]);
      const float color = lum[i] / mask[i];
      for (int c = 0; c < ch; ++c)
        out.at(c, y, x) = clampf((1.f - m) * clean.at(c, y, x) + m * color, 0.f, 1.f);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Raindrops
// ---------------------------------------------------------------------------

namespace {

// Gaussian blur of a rectangular region of `src`, clamp-to-edge sampling.
// Returns the blurred patch only.
Tensor<float> blur_patch(const Image& src, int c, int x0, int y0, int pw, int ph, float sigma) {
  const int h = height(src), w = width(src);
  const int k = std::max(1, static_cast<int>(std::ceil(3.f * sigma)));
  std::vector<float> kernel(static_cast<size_t>(2 * k + 1));
  float sum = 0.f;
  for (int i = -k; i <= k; ++i) {
    const float v = std::exp(-0.5f * (i * i) / (sigma * sigma));
    kernel[static_cast<size_t>(i + k)] = v;
    sum += v;
  }
  for (float& v : kernel) v /= sum;

  // Horizontal pass over the patch rows (with vertical halo).
  Tensor<float> tmp({ph + 2 * k, pw});
  for (int y = 0; y < ph + 2 * k; ++y) {
    const int sy = std::clamp(y0 - k + y, 0, h - 1);
    for (int x = 0; x < pw; ++x) {
      float acc = 0.f;
      for (int i = -k; i <= k; ++i) {
        const int sx = std::clamp(x0 + x + i, 0, w - 1);
        acc += kernel[static_cast<size_t>(i + k)] * src.at(c, sy, sx);
      }
      tmp[static_cast<size_t>(y) * pw + x] = acc;
    }
  }
  // Vertical pass.
  Tensor<float> out({ph, pw});
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < pw; ++x) {
      float acc = 0.f;
      for (int i = -k; i <= k; ++i)
        acc += kernel[static_cast<size_t>(i + k)] * tmp[static_cast<size_t>(y + k + i) * pw + x];
      out[static_cast<size_t>(y) * pw + x] = acc;
    }
  return out;
}

}  // namespace

Image apply_raindrops(const Image& clean, const RaindropParams& params, uint64_t seed) {
  require_image(clean, "apply_raindrops");
  params.validate();
  const int ch = channels(clean), h = height(clean), w = width(clean);
  if (params.radius_max > std::min(h, w) / 2.f)
    throw InvalidParameter("apply_raindrops: radius exceeds min(H,W)/2");
  if (params.drop_count == 0 || params.drop_alpha == 0.f) return clean;

  Rng rng(seed);
  Image out = clean;
  for (int dcount = 0; dcount < params.drop_count; ++dcount) {
    const float r = static_cast<float>(rng.uniform(params.radius_min, params.radius_max));
    const float cx = static_cast<float>(rng.uniform(r, w - r));
    const float cy = static_cast<float>(rng.uniform(r, h - r));
    const float sigma = params.blur_sigma > 0.f ? params.blur_sigma : r / 2.f;

    const int x0 = std::max(0, static_cast<int>(std::floor(cx - r)));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(cx + r)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - r)));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(cy + r)));
    const int pw = x1 - x0 + 1, ph = y1 - y0 + 1;
    if (pw <= 0 || ph <= 0) continue;

    for (int c = 0; c < ch; ++c) {
      // Blur the current state so overlapping drops stack.
      const Tensor<float> blurred = blur_patch(out, c, x0, y0, pw, ph, sigma);
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          const float ddx = (x + 0.5f) - cx, ddy = (y + 0.5f) - cy;
          const float dist = std::sqrt(ddx * ddx + ddy * ddy);
          const float edge = clampf(r - dist + 0.5f, 0.f, 1.f);
          if (edge <= 0.f) continue;
          const float a = params.drop_alpha * edge;
          const float b = blurred[static_cast<size_t>(y - y0) * pw + (x - x0)];
          out.at(c, y, x) = clampf((1.f - a) * out.at(c, y, x) + a * b, 0.f, 1.f);
        }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Variant composition
// ---------------------------------------------------------------------------

const std::array<const char*, 4>& variant_tags() {
  static const std::array<const char*, 4> tags = {"heavy-hazeA", "heavy-hazeB", "light-hazeA",
                                                  "light-hazeB"};
  return tags;
}

std::vector<WeatherVariant> compose_variants(const Image& clean, const SynthConfig& config,
                                             uint64_t base_seed) {
  require_image(clean, "compose_variants");
  const int h = height(clean), w = width(clean);

  std::vector<WeatherVariant> variants;
  variants.reserve(4);
  for (int vi = 0; vi < 4; ++vi) {
    const bool heavy = vi < 2;
    const bool haze_b = (vi % 2) == 1;

    RainStreakParams sp;
    sp.intensity_class = heavy ? StreakIntensity::heavy : StreakIntensity::light;
    sp.orientation_deg = config.orientation_deg;
    sp.density = heavy ? config.light_density * config.heavy_density_factor : config.light_density;
    sp.streak_length = config.streak_length;
    sp.streak_width = config.streak_width;
    sp.streak_alpha =
        std::min(1.f, heavy ? config.light_alpha * config.heavy_alpha_factor : config.light_alpha);

    RaindropParams dp;
    dp.drop_count = config.drop_count;
    dp.radius_min = config.drop_radius_min;
    dp.radius_max = config.drop_radius_max;
    dp.drop_alpha = config.drop_alpha;

    Rng haze_rng(derive_seed(base_seed, "haze", static_cast<uint64_t>(vi)));
    HazeParams hp;
    for (int c = 0; c < 3; ++c)
      hp.atmospheric_light[static_cast<size_t>(c)] =
          static_cast<float>(haze_rng.uniform(config.airlight_min, config.airlight_max));
    hp.beta = static_cast<float>(haze_b ? haze_rng.uniform(config.beta_b_min, config.beta_b_max)
                                        : haze_rng.uniform(config.beta_a_min, config.beta_a_max));
    hp.depth_map = make_ramp_depth(h, w, config.depth_top, config.depth_bottom);

    const uint64_t streak_seed = derive_seed(base_seed, "streak", static_cast<uint64_t>(vi));
    const uint64_t drop_seed = derive_seed(base_seed, "drop", static_cast<uint64_t>(vi));

    WeatherVariant v;
    v.tag = variant_tags()[static_cast<size_t>(vi)];
    v.image = apply_haze(apply_raindrops(render_rain_streaks(clean, sp, streak_seed), dp, drop_seed),
                         hp);
    v.recipe = WeatherRecipe{sp, dp, hp, base_seed};
    variants.push_back(std::move(v));
  }
  return variants;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

json WeatherRecipe::to_json() const {
  json j;
  j["seed"] = seed;
  j["streak"] = {{"intensity", streak.intensity_class == StreakIntensity::heavy ? "heavy" : "light"},
                 {"orientation_deg", streak.orientation_deg},
                 {"density", streak.density},
                 {"length", streak.streak_length},
                 {"width", streak.streak_width},
                 {"alpha", streak.streak_alpha}};
  j["drop"] = {{"count", drop.drop_count},
               {"radius", {drop.radius_min, drop.radius_max}},
               {"blur_sigma", drop.blur_sigma},
               {"alpha", drop.drop_alpha}};
  // Depth maps are procedural; record the generator, not the raster.
  float top = 0.f, bottom = 0.f;
  if (haze.depth_map.numel() > 0) {
    top = haze.depth_map[0];
    bottom = haze.depth_map[haze.depth_map.numel() - 1];
  }
  j["haze"] = {{"airlight", haze.atmospheric_light},
               {"beta", haze.beta},
               {"depth", {{"kind", "vertical_ramp"}, {"top", top}, {"bottom", bottom}}}};
  return j;
}

json SynthConfig::to_json() const {
  return json{{"light_density", light_density},
              {"heavy_density_factor", heavy_density_factor},
              {"light_alpha", light_alpha},
              {"heavy_alpha_factor", heavy_alpha_factor},
              {"streak_length", streak_length},
              {"streak_width", streak_width},
              {"orientation_deg", orientation_deg},
              {"drop_count", drop_count},
              {"drop_radius_min", drop_radius_min},
              {"drop_radius_max", drop_radius_max},
              {"drop_alpha", drop_alpha},
              {"airlight_min", airlight_min},
              {"airlight_max", airlight_max},
              {"beta_a_min", beta_a_min},
              {"beta_a_max", beta_a_max},
              {"beta_b_min", beta_b_min},
              {"beta_b_max", beta_b_max},
              {"depth_top", depth_top},
              {"depth_bottom", depth_bottom},
              {"train_fraction", train_fraction}};
}

SynthConfig SynthConfig::from_json(const json& j) {
  SynthConfig c;
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("light_density", c.light_density);
  get("heavy_density_factor", c.heavy_density_factor);
  get("light_alpha", c.light_alpha);
  get("heavy_alpha_factor", c.heavy_alpha_factor);
  get("streak_length", c.streak_length);
  get("streak_width", c.streak_width);
  get("orientation_deg", c.orientation_deg);
  get("drop_count", c.drop_count);
  get("drop_radius_min", c.drop_radius_min);
  get("drop_radius_max", c.drop_radius_max);
  get("drop_alpha", c.drop_alpha);
  get("airlight_min", c.airlight_min);
  get("airlight_max", c.airlight_max);
  get("beta_a_min", c.beta_a_min);
  get("beta_a_max", c.beta_a_max);
  get("beta_b_min", c.beta_b_min);
  get("beta_b_max", c.beta_b_max);
  get("depth_top", c.depth_top);
  get("depth_bottom", c.depth_bottom);
  get("train_fraction", c.train_fraction);
  return c;
}

}  // namespace wnet::synth
