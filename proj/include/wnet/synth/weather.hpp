#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "wnet/tensor.hpp"

namespace wnet::synth {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Degradation parameter types
// ---------------------------------------------------------------------------

struct HazeParams {
  std::array<float, 3> atmospheric_light{0.9f, 0.9f, 0.9f};
  float beta = 1.0f;              // scattering coefficient per unit depth
  Tensor<float> depth_map;        // HxW, nonnegative normalized scene depth

  void validate() const;
};

enum class StreakIntensity { light, heavy };

struct RainStreakParams {
  StreakIntensity intensity_class = StreakIntensity::light;
  float orientation_deg = 30.0f;  // per-streak tilt drawn from [-v, +v] off vertical
  float density = 400.0f;         // streaks per megapixel
  float streak_length = 12.0f;    // px
  float streak_width = 1.2f;      // px
  float streak_alpha = 0.25f;

  void validate() const;
};

struct RaindropParams {
  int drop_count = 3;
  float radius_min = 3.0f;
  float radius_max = 6.0f;
  float blur_sigma = 0.0f;        // <= 0 means "radius / 2"
  float drop_alpha = 0.85f;

  void validate() const;
};

struct WeatherRecipe {
  RainStreakParams streak;
  RaindropParams drop;
  HazeParams haze;   // depth_map materialized; serialized as a ramp descriptor
  uint64_t seed = 0;

  json to_json() const;
};

/// Ranges the variant sampler draws from. The two beta ranges realize the
/// two haze strengths; heavy rain scales the light-rain density and alpha.
struct SynthConfig {
  float light_density = 400.0f;
  float heavy_density_factor = 4.0f;
  float light_alpha = 0.25f;
  float heavy_alpha_factor = 1.5f;
  float streak_length = 12.0f;
  float streak_width = 1.2f;
  float orientation_deg = 30.0f;

  int drop_count = 3;
  float drop_radius_min = 3.0f;
  float drop_radius_max = 6.0f;
  float drop_alpha = 0.85f;

  float airlight_min = 0.7f;
  float airlight_max = 1.0f;
  float beta_a_min = 0.6f;
  float beta_a_max = 1.8f;
  float beta_b_min = 1.8f;
  float beta_b_max = 3.0f;
  float depth_top = 1.0f;     // normalized depth at the top image row
  float depth_bottom = 0.1f;  // ... and at the bottom row

  double train_fraction = 0.8;  // used only when the input dir has no split dirs

  json to_json() const;
  static SynthConfig from_json(const json& j);
};

// ---------------------------------------------------------------------------
// Synthesis operations. All are pure functions of (inputs, params, seed);
// repeated calls produce bit-identical outputs.
// ---------------------------------------------------------------------------

/// t(x) = exp(-beta * d(x)); every output lies in (0, 1].
Tensor<float> transmission_map(const Tensor<float>& depth_map, float beta);

/// Atmospheric scattering composition I = J * t + A * (1 - t).
Image apply_haze(const Image& clean, const HazeParams& params);

/// Oriented bright line segments with a 3-tap directional smear, alpha
/// composited. Pixels outside all streak footprints are left untouched.
Image render_rain_streaks(const Image& clean, const RainStreakParams& params, uint64_t seed);

/// Seeded circular lens-drop regions: content is Gaussian-blurred and
/// alpha-blended in place, drop by drop.
Image apply_raindrops(const Image& clean, const RaindropParams& params, uint64_t seed);

struct WeatherVariant {
  std::string tag;  // heavy-hazeA | heavy-hazeB | light-hazeA | light-hazeB
  Image image;
  WeatherRecipe recipe;
};

/// The 2 (streak) x 1 (drop) x 2 (haze) grid, composed streak -> drop -> haze.
std::vector<WeatherVariant> compose_variants(const Image& clean, const SynthConfig& config,
                                             uint64_t base_seed);

/// Top row = depth_top, bottom row = depth_bottom, linear in between.
Tensor<float> make_ramp_depth(int height, int width, float top, float bottom);

const std::array<const char*, 4>& variant_tags();

}  // namespace wnet::synth
