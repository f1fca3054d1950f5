#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace knnrate {

// Radical inverse of `index` in `base`; the j-th Halton coordinate uses the
// j-th prime.
inline double radical_inverse(std::uint64_t index, std::uint32_t base) noexcept {
  double inv = 1.0 / base, f = inv, out = 0.0;
  while (index > 0) {
    out += static_cast<double>(index % base) * f;
    index /= base;
    f *= inv;
  }
  return out;
}

inline constexpr std::array<std::uint32_t, 32> kHaltonPrimes = {
    2,  3,  5,  7,  11, 13, 17, 19, 23, 29,  31,  37,  41,  43,  47,  53,
    59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};

inline constexpr std::size_t kMaxHaltonDim = kHaltonPrimes.size();

}  // namespace knnrate
