#include "phdiff/sampling.hpp"

#include <span>

#include "phdiff/error.hpp"
#include "phdiff/random.hpp"

namespace phdiff {

Index init_dim(const InitSpec& spec) {
  struct Visitor {
    Index operator()(const NormalInit& s) const { return s.mean.size(); }
    Index operator()(const UniformInit& s) const { return s.low.size(); }
    Index operator()(const PointsInit& s) const {
      return s.points.empty() ? 0 : s.points.front().size();
    }
  };
  return std::visit(Visitor{}, spec);
}

std::vector<Vector> sample_initial(const InitSpec& spec, std::size_t count, std::uint64_t seed) {
  const RandomStream stream(seed, StreamDomain::kInitialCondition);
  const Index n = init_dim(spec);
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Vector x(n);
    std::span<double> view(x.data(), static_cast<std::size_t>(n));
    if (const auto* normal = std::get_if<NormalInit>(&spec)) {
      stream.fill_normal(k, view);
      x = normal->mean + normal->std * x;
    } else if (const auto* uniform = std::get_if<UniformInit>(&spec)) {
      stream.fill_uniform(k, view);
      x = uniform->low.array() + (uniform->high - uniform->low).array() * x.array();
    } else {
      const auto& points = std::get<PointsInit>(spec).points;
      if (points.empty()) throw Error(ErrorCode::kInvalidArgument, "points init is empty");
      x = points[k % points.size()];
    }
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<Vector> sample_box(Index dim, double half_width, std::size_t count,
                               std::uint64_t seed) {
  const RandomStream stream(seed, StreamDomain::kSamplePoints);
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Vector x(dim);
    stream.fill_uniform(k, std::span<double>(x.data(), static_cast<std::size_t>(dim)));
    out.push_back((2.0 * x.array() - 1.0) * half_width);
  }
  return out;
}

}  // namespace phdiff
