#pragma once

#include <cstdint>
#include <string>

#include "wnet/synth/dataset.hpp"
#include "wnet/tensor.hpp"

namespace wnet::head {

/// Procedural 64x64 road-ish scene: textured background with 1-3 bright,
/// slightly tilted lane stripes. The label (stripe count class + normalized
/// mean stripe center) is exact by construction.
Image render_toy_scene(uint64_t seed, int size, synth::ToyLabel& label);

/// Writes clean toy PNGs into <out_dir>/train and <out_dir>/test plus a
/// labels.jsonl keyed by image stem.
void write_toy_dataset(const std::string& out_dir, int n_train, int n_test, uint64_t seed,
                       int size = 64);

}  // namespace wnet::head
