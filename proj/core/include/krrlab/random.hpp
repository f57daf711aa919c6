#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace krrlab {

using Engine = std::mt19937_64;

/// Mixes a 64-bit value (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Stream seed for trial `trial` of the cell labelled `cell_key`.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view cell_key, std::uint64_t trial) noexcept;

/// Sub-stream `stream` of `seed`; used to separate e.g. design and noise draws.
std::uint64_t substream(std::uint64_t seed, std::uint64_t stream) noexcept;

Engine make_engine(std::uint64_t seed);

}  // namespace krrlab
