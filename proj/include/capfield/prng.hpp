#pragma once

#include <array>
#include <cstdint>

namespace capfield {

// xoshiro256++ seeded through splitmix64. Pure integer arithmetic, so the
// same seed yields the same stream on every platform. This is the one
// generator used project-wide; nothing draws from std::random.
class Prng {
public:
    explicit Prng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
    }

    std::uint64_t next() {
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

    // Uniform double in [0, 1), 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, bound); bound must be positive.
    std::uint64_t below(std::uint64_t bound) { return next() % bound; }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Stable per-role sub-seed so independently initialized components do not
    // share or perturb each other's streams.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t role) {
        std::uint64_t x = seed ^ (0xA0761D6478BD642FULL * (role + 1));
        splitmix64(x);
        return splitmix64(x);
    }

private:
    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    std::array<std::uint64_t, 4> state_{};
};

}  // namespace capfield
