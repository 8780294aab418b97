#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>

namespace phdiff {

// Philox4x32-10 counter-based generator. Output is a
// pure function of (key, counter), so any draw can be reproduced without
// replaying a sequence.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter counter, Key key) noexcept;
};

// Domains keep unrelated consumers of one seed on disjoint counter ranges.
enum class StreamDomain : std::uint32_t {
  kForwardNoise = 1,
  kInitialCondition = 2,
  kProjection = 3,
  kSamplePoints = 4,
  kReverseNoise = 5,
  kUser = 100,
};

// Deterministic sub-seed for member `index` of a family keyed by `base_seed`.
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) noexcept;

// A random stream addressed by a 64-bit draw index. Two draws with different
// indices are independent; the same index always yields the same value.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, StreamDomain domain, std::uint32_t substream = 0) noexcept;

  // Two uniforms in the open interval (0, 1).
  std::pair<double, double> uniform_pair(std::uint64_t index) const noexcept;
  // Two independent standard normals (Box-Muller on uniform_pair).
  std::pair<double, double> normal_pair(std::uint64_t index) const noexcept;

  double uniform(std::uint64_t index) const noexcept { return uniform_pair(index).first; }

  // Fills `out` with standard normals for logical slot `slot`; each slot
  // consumes ceil(out.size() / 2) indices starting at slot * stride where
  // stride = ceil(out.size() / 2).
  void fill_normal(std::uint64_t slot, std::span<double> out) const noexcept;
  void fill_uniform(std::uint64_t slot, std::span<double> out) const noexcept;

 private:
  Philox4x32::Key key_;
  std::uint32_t domain_;
  std::uint32_t substream_;
};

}  // namespace phdiff
