#include "wnet/enhance/memory.hpp"

#include <algorithm>

namespace wnet::enh {

namespace {

constexpr long long kElemBytes = 4;

struct Buffer {
  std::string name;
  int channels = 0;
  int produced = -1;
  std::vector<int> consumers;
  bool even_internal = false;
  int block_end = -1;
};

}  // namespace

const MemoryEntry& ActivationLedger::entry(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return e;
  throw Error("activation ledger: no entry " + name);
}

bool ActivationLedger::released_by_block_end(const std::string& name) const {
  const MemoryEntry& e = entry(name);
  return e.block_end >= 0 && e.released <= e.block_end;
}

long long peak_activation_memory(const NetworkSpec& spec, int height, int width, Wiring wiring,
                                 ActivationLedger* ledger) {
  if (height < 1 || width < 1) throw InvalidParameter("peak_activation_memory: bad resolution");

  std::vector<Buffer> buffers;
  auto make = [&](const std::string& name, int ch, int produced) {
    buffers.push_back({name, ch, produced, {}, false, -1});
    return static_cast<int>(buffers.size()) - 1;
  };
  auto consume = [&](int buf, int step) { buffers[static_cast<size_t>(buf)].consumers.push_back(step); };

  int step = 0;
  const int bad = make("input_bad", 3, -1);
  const int prev = make("input_prev", 3, -1);

  // conv1
  consume(bad, step);
  consume(prev, step);
  int prev_conv = make("conv1", 32, step);
  ++step;

  const int B = static_cast<int>(spec.blocks.size());
  int conv_no = 2;
  int last_add = -1;
  for (int b = 0; b < B; ++b) {
    const HBlockPlan& plan = spec.blocks[static_cast<size_t>(b)];
    const std::string prefix = "hblock" + std::to_string(b + 1);
    const int L = plan.spec.depth_L;

    std::vector<int> layer_buf(static_cast<size_t>(L) + 1);
    layer_buf[0] = prev_conv;
    std::vector<int> first_of_block;
    for (int l = 1; l <= L; ++l) {
      std::vector<int> srcs;
      if (wiring == Wiring::harmonic) {
        srcs = harmonic_inputs(l);
      } else {
        for (int s = l - 1; s >= 0; --s) srcs.push_back(s);
      }
      for (int s : srcs) consume(layer_buf[static_cast<size_t>(s)], step);
      const int ch = (l == L) ? plan.spec.out_channels : channel_width(plan.spec.growth_k, l);
      layer_buf[static_cast<size_t>(l)] = make(prefix + "/layer" + std::to_string(l), ch, step);
      if (l >= 2 && l <= L - 2 && l % 2 == 0)
        buffers[static_cast<size_t>(layer_buf[static_cast<size_t>(l)])].even_internal = true;
      first_of_block.push_back(layer_buf[static_cast<size_t>(l)]);
      ++step;
    }

    // transition (= block end)
    std::vector<int> concat_srcs;
    if (wiring == Wiring::harmonic) {
      concat_srcs = plan.concat_sources;
    } else {
      for (int s = 0; s <= L; ++s) concat_srcs.push_back(s);
    }
    for (int s : concat_srcs) consume(layer_buf[static_cast<size_t>(s)], step);
    const int block_out = make(prefix + "/transition", plan.spec.out_channels, step);
    const int block_end_step = step;
    for (int buf : first_of_block) buffers[static_cast<size_t>(buf)].block_end = block_end_step;
    ++step;

    // fusion 1x1 over (prev_conv, block_out)
    consume(prev_conv, step);
    consume(block_out, step);
    const int fused = make("conv" + std::to_string(conv_no++), 32, step);
    ++step;

    // add
    consume(prev_conv, step);
    consume(fused, step);
    last_add = make("add" + std::to_string(b + 1), 32, step);
    ++step;

    if (b + 1 < B) {
      consume(last_add, step);
      prev_conv = make("conv" + std::to_string(conv_no++), 32, step);
      ++step;
    }
  }

  // final conv
  consume(last_add, step);
  make("conv" + std::to_string(conv_no), 3, step);
  ++step;

  const int last_step = step - 1;
  // input_bad is re-read by the next recursion stage; pin it to stage end.
  buffers[static_cast<size_t>(bad)].consumers.push_back(last_step);

  const long long pixel_bytes = kElemBytes * static_cast<long long>(height) * width;
  ActivationLedger local;
  local.steps = step;
  for (const Buffer& b : buffers) {
    MemoryEntry e;
    e.name = b.name;
    e.channels = b.channels;
    e.bytes = pixel_bytes * b.channels;
    e.produced = b.produced;
    e.released = b.consumers.empty() ? last_step : *std::max_element(b.consumers.begin(),
                                                                     b.consumers.end());
    // A produced-but-never-consumed buffer still exists until the end.
    if (b.consumers.empty()) e.released = last_step;
    e.even_internal = b.even_internal;
    e.block_end = b.block_end;
    local.entries.push_back(std::move(e));
  }

  long long peak = 0;
  int peak_step = 0;
  for (int s = 0; s < step; ++s) {
    long long alive = 0;
    for (const MemoryEntry& e : local.entries)
      if (e.produced <= s && s <= e.released) alive += e.bytes;
    if (alive > peak) {
      peak = alive;
      peak_step = s;
    }
  }
  local.peak_bytes = peak;
  local.peak_step = peak_step;
  if (ledger) *ledger = std::move(local);
  return peak;
}

}  // namespace wnet::enh
