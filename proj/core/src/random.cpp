#include "phdiff/random.hpp"

#include <cmath>
#include <numbers>

namespace phdiff {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

inline double to_open_unit(std::uint64_t bits) {
  // 53 random bits centred in their bucket: never exactly 0 or 1.
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter c, Key k) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
  return c;
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(base_seed) ^ (index + 0x632BE59BD9B4E019ull));
}

RandomStream::RandomStream(std::uint64_t seed, StreamDomain domain, std::uint32_t substream) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      domain_(static_cast<std::uint32_t>(domain)),
      substream_(substream) {}

std::pair<double, double> RandomStream::uniform_pair(std::uint64_t index) const noexcept {
  const auto out = Philox4x32::generate(
      {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), domain_,
       substream_},
      key_);
  const std::uint64_t a = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
  const std::uint64_t b = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
  return {to_open_unit(a), to_open_unit(b)};
}

std::pair<double, double> RandomStream::normal_pair(std::uint64_t index) const noexcept {
  const auto [u1, u2] = uniform_pair(index);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

void RandomStream::fill_normal(std::uint64_t slot, std::span<double> out) const noexcept {
  const std::uint64_t stride = (out.size() + 1) / 2;
  for (std::size_t i = 0; i < out.size(); i += 2) {
    const auto [z0, z1] = normal_pair(slot * stride + i / 2);
    out[i] = z0;
    if (i + 1 < out.size()) out[i + 1] = z1;
  }
}

void RandomStream::fill_uniform(std::uint64_t slot, std::span<double> out) const noexcept {
  const std::uint64_t stride = (out.size() + 1) / 2;
  for (std::size_t i = 0; i < out.size(); i += 2) {
    const auto [u0, u1] = uniform_pair(slot * stride + i / 2);
    out[i] = u0;
    if (i + 1 < out.size()) out[i + 1] = u1;
  }
}

}  // namespace phdiff
