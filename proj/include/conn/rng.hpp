#pragma once

#include <cstdint>

namespace conn {

// Counter-based splittable random stream. Output i is a pure function of
// (master_seed, stream_id, i), so independent workers can each own a
// substream and replay it bit-identically on any 64-bit platform.
//
// The generator is the splitmix64 finalizer over a key mixed from the seed
// and stream id; statistical quality is ample for Monte-Carlo estimates.
struct RngStream {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_id = 0;
    std::uint64_t counter = 0;

    std::uint64_t next_u64();

    // Uniform in [0, 1), 53-bit resolution.
    double uniform();

    // Standard normal via Box-Muller (cosine branch; two uniforms per draw).
    double normal();

    // Uniform integer in [0, bound). bound must be >= 1.
    std::uint64_t uniform_int(std::uint64_t bound);

    // Uniform integer in [lo, hi], both ends inclusive.
    std::int64_t uniform_int_range(std::int64_t lo, std::int64_t hi);
};

RngStream rng_substream(std::uint64_t master_seed, std::uint64_t stream_id);

}  // namespace conn
