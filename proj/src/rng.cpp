#include "ffm/rng.hpp"

#include <array>

namespace ffm {

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index)
{
    // FNV-1a over the stream name.
    std::uint64_t h = 1469598103934665603ULL;
    for (const char c : stream) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

} // namespace ffm
