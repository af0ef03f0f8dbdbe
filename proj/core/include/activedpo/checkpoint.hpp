#pragma once

#include <string>
#include <variant>

#include "activedpo/direct_reward.hpp"
#include "activedpo/policy_model.hpp"

namespace activedpo {

// Binary checkpoint layout (little-endian):
//   "ADPOCKPT"            8-byte magic
//   u32 version           currently 1
//   u32 kind              0 = policy, 1 = direct reward net
//   u32 n                 descriptor length in bytes
//   n bytes               architecture descriptor (JSON text)
//   u64 p                 parameter count
//   p x f64               current parameters
//   p x f64               anchor (reference / initial) parameters
// Parameters are stored as raw IEEE-754 doubles, so a round trip is bit-exact.
using AnyModel = std::variant<PolicyModel, DirectRewardNet>;

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const PolicyModel& model);
std::string encode_checkpoint(const DirectRewardNet& model);
AnyModel decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::string& path, const AnyModel& model);
AnyModel load_checkpoint(const std::string& path);

}  // namespace activedpo
