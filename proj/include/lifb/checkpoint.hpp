#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lifb/network.hpp"
#include "lifb/optim.hpp"

namespace lifb {

/// A full training snapshot. The binary file layout is little-endian:
/// magic "LIFBCKP1", u32 format version, the network spec, counters, the RNG
/// state string, then three blocks of length-prefixed named tensor records
/// (parameters, momentum buffers, normalization running stats), then the
/// metric history as CSV text. Tensor payloads are stored as 64-bit reals.
struct Checkpoint {
    uint32_t version = 1;
    NetSpec spec;
    uint64_t epoch = 0;
    uint64_t step = 0;
    std::string rng_state;
    std::vector<std::pair<std::string, Tensor>> tensors;  // "<layer>.<param>"
    std::vector<std::pair<std::string, Tensor>> momentum; // optimizer buffers
    std::vector<std::pair<std::string, Tensor>> stats;    // tnorm running stats
    std::string metrics_csv;
};

/// Snapshots the network (and optionally optimizer/RNG) into a checkpoint.
Checkpoint make_checkpoint(Network& net, const Optimizer* opt, const Rng* rng, uint64_t epoch,
                           uint64_t step, const std::string& metrics_csv);

/// Atomic write (temp file + rename).
void save_checkpoint(const Checkpoint& ck, const std::string& path);

Checkpoint load_checkpoint(const std::string& path);

/// Rebuilds the topology from the stored NetSpec, then overwrites every
/// parameter and running stat by scoped name. Unknown or missing names are
/// errors: a checkpoint must match its own topology exactly.
Network restore_network(const Checkpoint& ck);

/// Loads momentum buffers into an optimizer built over the restored network.
void restore_optimizer(const Checkpoint& ck, Optimizer& opt);

} // namespace lifb
