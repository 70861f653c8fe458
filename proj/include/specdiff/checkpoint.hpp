#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "specdiff/nn.hpp"
#include "specdiff/tensor.hpp"

namespace specdiff {

// Binary layout (little-endian throughout):
//   "SPDM" | version u32 | config-echo length u32 + UTF-8 bytes |
//   tensor count u32 | per tensor: name length u16 + bytes, ndim u8,
//   dims u32 x ndim, payload f64.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    std::uint32_t version = kCheckpointVersion;
    std::string config_echo;
    std::vector<std::pair<std::string, Tensor>> tensors;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint make_checkpoint(const DenoiserNet& net, const std::string& config_echo);

// Copies checkpoint tensors into the net; names and shapes must line up.
void load_into_net(const Checkpoint& ckpt, DenoiserNet& net);

}  // namespace specdiff
