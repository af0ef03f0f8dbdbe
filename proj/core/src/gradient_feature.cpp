#include "activedpo/gradient_feature.hpp"

#include <cstring>

#include "activedpo/errors.hpp"
#include "activedpo/io.hpp"

namespace activedpo {

using Eigen::VectorXd;

ProjectedGradient project_gradient(const VectorXd& grad, const Projector& projector,
                                   bool normalize) {
  if (!normalize) return {projector.project(grad), false};
  const double norm = grad.norm();
  if (!(norm > 0.0)) return {VectorXd::Zero(projector.proj_dim()), true};
  return {projector.project(grad / norm), false};
}

GradientFeature combine(TripletId triplet_id, const ProjectedGradient& a,
                        const ProjectedGradient& b, bool normalized, int model_iteration) {
  GradientFeature f;
  f.triplet_id = triplet_id;
  f.normalized = normalized;
  f.model_iteration = model_iteration;
  f.degenerate = a.degenerate || b.degenerate;
  if (f.degenerate) {
    f.phi = VectorXd::Zero(a.value.size());
  } else {
    f.phi = a.value - b.value;
  }
  return f;
}

GradientFeature featurize(const Triplet& triplet, const VectorXd& grad_a, const VectorXd& grad_b,
                          const Projector& projector, bool normalize, int model_iteration) {
  if (grad_a.size() != grad_b.size()) throw DimensionError("response gradients differ in size");
  return combine(triplet.id, project_gradient(grad_a, projector, normalize),
                 project_gradient(grad_b, projector, normalize), normalize, model_iteration);
}

VectorXd apply_mask(const VectorXd& grad, const ParamRange& range) {
  if (!range) return grad;
  const auto [begin, end] = *range;
  if (begin > end || end > static_cast<std::size_t>(grad.size())) {
    throw DimensionError("parameter mask out of range");
  }
  return grad.segment(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
}

namespace {

constexpr char kFeatureMagic[8] = {'A', 'D', 'P', 'O', 'F', 'E', 'A', 'T'};
constexpr std::uint32_t kFeatureVersion = 1;

template <typename T>
void put(std::string& out, const T& value) {
  out.append(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(const std::string& bytes, std::size_t& pos) {
  if (bytes.size() - pos < sizeof(T)) throw FormatError("feature cache truncated");
  T value;
  std::memcpy(&value, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

void write_feature_cache(const std::string& path, const FeatureCacheHeader& header,
                         const std::vector<GradientFeature>& features) {
  std::string out(kFeatureMagic, sizeof(kFeatureMagic));
  put(out, kFeatureVersion);
  put(out, header.iteration);
  put(out, header.dim);
  const std::uint32_t flags = (header.normalized ? 1u : 0u) | (header.rademacher ? 2u : 0u);
  put(out, flags);
  put(out, header.projector_seed);
  put(out, static_cast<std::uint64_t>(features.size()));
  for (const auto& f : features) put(out, static_cast<std::uint64_t>(f.triplet_id));
  for (const auto& f : features) put(out, static_cast<std::uint8_t>(f.degenerate ? 1 : 0));
  for (const auto& f : features) {
    if (f.phi.size() != static_cast<Eigen::Index>(header.dim)) {
      throw DimensionError("feature dimension does not match cache header");
    }
    out.append(reinterpret_cast<const char*>(f.phi.data()), sizeof(double) * header.dim);
  }
  write_file_atomic(path, out);
}

std::pair<FeatureCacheHeader, std::vector<GradientFeature>> read_feature_cache(
    const std::string& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < sizeof(kFeatureMagic) ||
      std::memcmp(bytes.data(), kFeatureMagic, sizeof(kFeatureMagic)) != 0) {
    throw FormatError("'" + path + "' is not a feature cache");
  }
  std::size_t pos = sizeof(kFeatureMagic);
  if (take<std::uint32_t>(bytes, pos) != kFeatureVersion) {
    throw FormatError("unsupported feature cache version");
  }
  FeatureCacheHeader header;
  header.iteration = take<std::uint32_t>(bytes, pos);
  header.dim = take<std::uint32_t>(bytes, pos);
  const auto flags = take<std::uint32_t>(bytes, pos);
  header.normalized = (flags & 1u) != 0;
  header.rademacher = (flags & 2u) != 0;
  header.projector_seed = take<std::uint64_t>(bytes, pos);
  const auto rows = take<std::uint64_t>(bytes, pos);
  if (rows > bytes.size()) throw FormatError("feature cache row count is implausible");

  std::vector<GradientFeature> features(rows);
  for (auto& f : features) {
    f.triplet_id = take<std::uint64_t>(bytes, pos);
    f.normalized = header.normalized;
    f.model_iteration = static_cast<int>(header.iteration) - 1;
  }
  for (auto& f : features) f.degenerate = take<std::uint8_t>(bytes, pos) != 0;
  const std::size_t row_bytes = sizeof(double) * header.dim;
  for (auto& f : features) {
    if (bytes.size() - pos < row_bytes) throw FormatError("feature cache truncated");
    f.phi.resize(header.dim);
    std::memcpy(f.phi.data(), bytes.data() + pos, row_bytes);
    pos += row_bytes;
  }
  if (pos != bytes.size()) throw FormatError("trailing bytes in feature cache");
  return {header, std::move(features)};
}

}  // namespace activedpo
