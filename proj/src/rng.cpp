#include "conn/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace conn {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
}

}  // namespace

std::uint64_t RngStream::next_u64() {
    ++counter;
    const std::uint64_t key = mix64(master_seed + kGolden) ^ mix64(stream_id + 2 * kGolden);
    return mix64(key + counter * kGolden);
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
    // u1 is mapped to (0, 1] so the log is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RngStream::uniform_int(std::uint64_t bound) {
    if (bound == 0) {
        throw std::invalid_argument("uniform_int: bound must be >= 1");
    }
    // Multiply-shift: deterministic, bias < 2^-64 per draw.
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
}

std::int64_t RngStream::uniform_int_range(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) {
        throw std::invalid_argument("uniform_int_range: lo > hi");
    }
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(uniform_int(span));
}

RngStream rng_substream(std::uint64_t master_seed, std::uint64_t stream_id) {
    return RngStream{master_seed, stream_id, 0};
}

}  // namespace conn
