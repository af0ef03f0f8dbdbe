#include "activedpo/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "activedpo/errors.hpp"
#include "activedpo/io.hpp"

namespace activedpo {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'A', 'D', 'P', 'O', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::string& out, const T& value) {
  out.append(reinterpret_cast<const char*>(&value), sizeof(T));
}

void put_vector(std::string& out, const Eigen::VectorXd& v) {
  out.append(reinterpret_cast<const char*>(v.data()), sizeof(double) * v.size());
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    T value;
    take(&value, sizeof(T));
    return value;
  }

  std::string get_string(std::size_t n) {
    std::string s(n, '\0');
    take(s.data(), n);
    return s;
  }

  Eigen::VectorXd get_vector(std::size_t n) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    take(v.data(), n * sizeof(double));
    return v;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void take(void* dst, std::size_t n) {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint truncated");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::string encode(std::uint32_t kind, const json& descriptor, const Eigen::VectorXd& params,
                   const Eigen::VectorXd& anchor) {
  const std::string text = descriptor.dump();
  std::string out(kMagic, sizeof(kMagic));
  put(out, kCheckpointVersion);
  put(out, kind);
  put(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  put(out, static_cast<std::uint64_t>(params.size()));
  put_vector(out, params);
  put_vector(out, anchor);
  return out;
}

}  // namespace

std::string encode_checkpoint(const PolicyModel& model) {
  const auto& a = model.architecture();
  const json descriptor = {{"type", "policy"},
                           {"vocab_size", a.vocab_size},
                           {"prompt_len", a.prompt_len},
                           {"response_len", a.response_len},
                           {"hidden_widths", a.hidden_widths},
                           {"beta", a.beta}};
  return encode(0, descriptor, model.theta(), model.theta_ref());
}

std::string encode_checkpoint(const DirectRewardNet& model) {
  const auto& a = model.architecture();
  const json descriptor = {{"type", "direct_reward"},
                           {"vocab_size", a.vocab_size},
                           {"width", a.width},
                           {"depth", a.depth},
                           {"mirrored_input", a.mirrored_input}};
  return encode(1, descriptor, model.params(), model.anchor());
}

AnyModel decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.get_string(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw FormatError("not a checkpoint file (bad magic)");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto kind = r.get<std::uint32_t>();
  const auto descriptor_len = r.get<std::uint32_t>();
  json d;
  try {
    d = json::parse(r.get_string(descriptor_len));
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad checkpoint descriptor: ") + e.what());
  }
  const auto count = r.get<std::uint64_t>();
  Eigen::VectorXd params = r.get_vector(count);
  Eigen::VectorXd anchor = r.get_vector(count);
  if (!r.done()) throw FormatError("trailing bytes after checkpoint payload");

  try {
    if (kind == 0) {
      PolicyArchitecture a{d.at("vocab_size").get<int>(), d.at("prompt_len").get<int>(),
                           d.at("response_len").get<int>(),
                           d.at("hidden_widths").get<std::vector<int>>(),
                           d.at("beta").get<double>()};
      return PolicyModel(std::move(a), std::move(params), std::move(anchor));
    }
    if (kind == 1) {
      DirectRewardArchitecture a{d.at("vocab_size").get<int>(), d.at("width").get<int>(),
                                 d.at("depth").get<int>(), d.at("mirrored_input").get<bool>()};
      return DirectRewardNet(a, std::move(params), std::move(anchor));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad checkpoint descriptor: ") + e.what());
  }
  throw FormatError("unknown checkpoint kind " + std::to_string(kind));
}

void save_checkpoint(const std::string& path, const AnyModel& model) {
  const std::string bytes =
      std::visit([](const auto& m) { return encode_checkpoint(m); }, model);
  write_file_atomic(path, bytes);
}

AnyModel load_checkpoint(const std::string& path) { return decode_checkpoint(read_file(path)); }

}  // namespace activedpo
