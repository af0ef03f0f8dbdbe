#include "activedpo/pair_encoding.hpp"

#include <cmath>

#include "activedpo/errors.hpp"

namespace activedpo {

Eigen::VectorXd encode_pair(const TokenSeq& prompt, const TokenSeq& response, int vocab_size,
                            bool mirrored) {
  if (prompt.empty() || response.empty()) throw InvalidArgument("cannot encode empty sequence");
  Eigen::VectorXd u = Eigen::VectorXd::Zero(2 * vocab_size);
  for (Token t : prompt) {
    if (t >= static_cast<Token>(vocab_size)) throw InvalidArgument("token out of vocabulary");
    u[t] += 1.0 / static_cast<double>(prompt.size());
  }
  for (Token t : response) {
    if (t >= static_cast<Token>(vocab_size)) throw InvalidArgument("token out of vocabulary");
    u[vocab_size + t] += 1.0 / static_cast<double>(response.size());
  }
  u /= u.norm();
  if (!mirrored) return u;
  Eigen::VectorXd z(4 * vocab_size);
  z << u, u;
  return z / std::sqrt(2.0);
}

}  // namespace activedpo
