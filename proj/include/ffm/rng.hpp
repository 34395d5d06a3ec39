#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ffm {

using Rng = std::mt19937_64;

/// Seed for a named sub-stream of a master seed. Distinct (stream, index)
/// pairs give unrelated generators, so each source of randomness can be
/// varied while the others stay fixed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t master, std::string_view stream, std::uint64_t index = 0)
{
    return Rng(derive_seed(master, stream, index));
}

} // namespace ffm
