#pragma once

#include <Eigen/Core>

#include "activedpo/types.hpp"

namespace activedpo {

// Fixed featurization z of a (prompt, response) pair: token-frequency vectors
// of prompt and response concatenated and scaled to unit l2 norm. In mirrored
// mode the unit vector u becomes [u; u] / sqrt(2), so ||z|| = 1 and the two
// halves agree entry by entry.
Eigen::VectorXd encode_pair(const TokenSeq& prompt, const TokenSeq& response, int vocab_size,
                            bool mirrored);

inline int encoded_pair_dim(int vocab_size, bool mirrored) {
  return mirrored ? 4 * vocab_size : 2 * vocab_size;
}

}  // namespace activedpo
