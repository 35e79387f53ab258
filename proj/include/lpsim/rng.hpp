#pragma once

#include <cstdint>

namespace lpsim {

// Counter-based random stream: the variate for (seed, call, index) is a pure
// function of its arguments, so parallel and sequential evaluation orders
// produce identical results.
struct RngStream {
  std::uint64_t seed = 0;
};

namespace detail {

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// the (seed, call) prefix of the hash; loop-invariant across a tensor pass
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t call) {
  return mix64(mix64(seed) ^ call);
}

constexpr std::uint64_t hash3(std::uint64_t seed, std::uint64_t call,
                              std::uint64_t index) {
  return mix64(stream_key(seed, call) ^ index);
}

constexpr float variate_from_key(std::uint64_t key, std::uint64_t index) {
  return static_cast<float>(mix64(key ^ index) >> 40) * 0x1.0p-24f;
}

} // namespace detail

// Uniform variate in [0, 1) with 24-bit resolution, so every variate is
// exactly representable in single precision (the storage width of all
// simulated tensors).
inline float uniform_variate(RngStream stream, std::uint64_t call,
                             std::uint64_t index) {
  return detail::variate_from_key(detail::stream_key(stream.seed, call), index);
}

} // namespace lpsim
