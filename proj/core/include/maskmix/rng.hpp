#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace maskmix {

// Deterministic RNG. mt19937_64 is fully specified by the standard, and the
// uniform/normal transforms below are our own, so a seed produces the same
// stream on every platform (std::normal_distribution would not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal via Box-Muller; caches the second draw of each pair.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// splitmix64 finalizer; used to derive independent sub-streams.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Deterministic sub-stream seed for (root seed, stream tag, index).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    return mix_seed(mix_seed(seed ^ stream) + index);
}

namespace streams {
inline constexpr std::uint64_t init = 0x494E495400000000ull;
inline constexpr std::uint64_t train = 0x745241494E000000ull;
inline constexpr std::uint64_t eval_pairs = 0x4556414C00000000ull;
inline constexpr std::uint64_t eval_fresh = 0x4652455348000000ull;
inline constexpr std::uint64_t basis_rotation = 0x4241534953000000ull;
}  // namespace streams

}  // namespace maskmix
