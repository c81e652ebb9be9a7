#pragma once

// Seeded, stream-splittable random number generation. Every source of
// randomness in the simulator owns an RngStream identified by
// (seed, stream_id); identical identifiers replay identical draw
// sequences on every platform, and distinct stream ids give
// statistically independent sequences. The generator is xoshiro256++
// seeded through splitmix64; normal deviates use Box-Muller so the
// draw sequence does not depend on any library's distribution
// internals.

#include <array>
#include <cmath>
#include <cstdint>

namespace bygars {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Order-sensitive combiner for deriving stream ids from several tags.
inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a;
    s ^= b + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
    return splitmix64(s);
}

class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id) {
        std::uint64_t sm = seed ^ mix64(0x5eedULL, stream_id);
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1) with 53 random mantissa bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased integer in [0, bound) by rejection.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    // Standard normal via Box-Muller; consumes exactly two uniforms.
    double normal() {
        double u1 = 1.0 - uniform(); // (0, 1], keeps log finite
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Independent child stream; used for per-trial Monte Carlo streams.
    RngStream substream(std::uint64_t tag) const {
        return RngStream(seed_, mix64(stream_id_, tag));
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::array<std::uint64_t, 4> state_{};
};

// Stream id conventions used by the harness. Worker j owns
// worker_base + j; everything else has a fixed slot.
namespace stream_id {
inline constexpr std::uint64_t data_gen = 0x01;
inline constexpr std::uint64_t partition = 0x02;
inline constexpr std::uint64_t init_w = 0x03;
inline constexpr std::uint64_t aux_server = 0x04;
inline constexpr std::uint64_t worker_base = 0x100;
inline constexpr std::uint64_t check_base = 0x10000;
} // namespace stream_id

} // namespace bygars
