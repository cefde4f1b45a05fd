#pragma once

#include <cstdint>
#include <random>

namespace a2gnn {

// Named substreams derived from the single run seed.
enum class Stream : std::uint64_t {
    init = 1,
    gumbel = 2,
    dropout = 3,
    shuffle = 4,
    data = 5,
};

inline std::mt19937_64 make_stream(std::uint64_t seed, Stream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), 0xA2u};
    return std::mt19937_64(seq);
}

}  // namespace a2gnn
