#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "phdiff/types.hpp"

namespace phdiff {

// Isotropic Gaussian N(mean, std^2 I).
struct NormalInit {
  Vector mean;
  double std = 1.0;
};

// Independent uniform coordinates on the box [low, high].
struct UniformInit {
  Vector low;
  Vector high;
};

// Explicit list; `count` cycles through the points.
struct PointsInit {
  std::vector<Vector> points;
};

using InitSpec = std::variant<NormalInit, UniformInit, PointsInit>;

Index init_dim(const InitSpec& spec);

// Point k depends only on (seed, k), never on count.
std::vector<Vector> sample_initial(const InitSpec& spec, std::size_t count, std::uint64_t seed);

// `count` seeded points uniform on [-half_width, half_width]^dim.
std::vector<Vector> sample_box(Index dim, double half_width, std::size_t count, std::uint64_t seed);

}  // namespace phdiff
