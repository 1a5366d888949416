#pragma once

#include <array>
#include <cstdint>

namespace dmpk {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., "Parallel random numbers: as easy
/// as 1, 2, 3"). A pure function of (counter, key).
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key) noexcept;

/// SplitMix64 finalizer; used to derive per-path keys.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Key for path `path_index` of an ensemble seeded with `master_seed`:
///   key = splitmix64(splitmix64(master_seed) ^ path_index)
/// Paths are independent of the order in which they are generated.
PhiloxKey derive_path_key(std::uint64_t master_seed, std::uint64_t path_index) noexcept;

/// Open-interval uniform in (0, 1) from 64 random bits (52-bit grid, midpoints).
double uniform_open(std::uint32_t hi, std::uint32_t lo) noexcept;

/// Two independent standard normals from one Philox block via Box-Muller.
/// This is the fixed Gaussian sampler behind every bit-reproducibility claim.
std::array<double, 2> box_muller(const PhiloxCounter& block) noexcept;

}  // namespace dmpk
