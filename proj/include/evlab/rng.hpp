#pragma once

#include <array>
#include <cstdint>

namespace evlab {

// splitmix64, used both as a seed scrambler and for stream derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ with explicit stream splitting.
///
/// Streams are derived by hashing (master_seed, stream_id) through
/// splitmix64 before expanding the 256-bit state, so distinct stream ids
/// give statistically independent generators and the whole run is a pure
/// function of the master seed. Doubles are produced from the top 53 bits,
/// which keeps sequences bit-identical across platforms (no dependence on
/// std::uniform_real_distribution).
class Rng {
public:
    explicit Rng(std::uint64_t seed) { seed_state(seed); }

    Rng(std::uint64_t master_seed, std::uint64_t stream_id) {
        std::uint64_t h = master_seed;
        (void)splitmix64(h);
        h ^= 0xd6e8feb86659fd93ULL * (stream_id + 1);
        seed_state(splitmix64(h));
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1), safe for log/log-log transforms.
    double uniform01_open() {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform double in [-1, 1].
    double uniform_pm1() { return 2.0 * uniform01() - 1.0; }

    /// Uniform double in [a, b).
    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next() % n; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    void seed_state(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& s : s_) s = splitmix64(sm);
    }

    std::array<std::uint64_t, 4> s_{};
};

}  // namespace evlab
