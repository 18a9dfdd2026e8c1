#pragma once

#include <string>
#include <vector>

#include "wnet/enhance/arch.hpp"

namespace wnet::enh {

/// Forward-retention accounting model (not an allocator). One buffer per
/// retained activation at layer granularity:
///   - input_bad (alive for the whole stage: conv1 and the next recursion
///     stage both read it), input_prev (alive until conv1),
///   - every stage conv / add / transition output,
///   - every block-internal layer output.
/// One schedule step per producing op, in topological order; bottleneck
/// squeezes are transient within their layer's step and are not retained.
/// A buffer lives from its producing step through its last consuming step,
/// inclusive; buffers nobody consumes (the stage output) live to the end.
/// Element size is fixed at 4 bytes.
struct MemoryEntry {
  std::string name;
  int channels = 0;
  long long bytes = 0;
  int produced = 0;   // schedule step
  int released = 0;   // last step at which the buffer must still exist
  bool even_internal = false;  // block layer with even index in [2, L-2]
  int block_end = -1;          // transition step of the owning block, if any
};

struct ActivationLedger {
  std::vector<MemoryEntry> entries;
  long long peak_bytes = 0;
  int peak_step = 0;
  int steps = 0;

  const MemoryEntry& entry(const std::string& name) const;

  /// The printed block rule: even layers 2..L-2 hold no references past
  /// their block's completion.
  bool released_by_block_end(const std::string& name) const;
};

enum class Wiring {
  harmonic,          // { l - 2^j : 2^j | l }, transition reads odds + last
  dense_all_to_all,  // layer l reads 0..l-1, transition reads everything
};

/// Peak simultaneously-retained activation bytes for one recursion stage at
/// H x W. Layer widths are identical across wirings; only the lifetime
/// structure differs.
long long peak_activation_memory(const NetworkSpec& spec, int height, int width,
                                 Wiring wiring = Wiring::harmonic,
                                 ActivationLedger* ledger = nullptr);

}  // namespace wnet::enh
