#pragma once

#include <cmath>
#include <cstdint>

namespace apkr {

// Counter-based generator built on the SplitMix64 mixing function:
// output(i) = mix64(seed + i * GAMMA). The state is just (seed, counter),
// so two generators with the same seed always produce the same stream, on
// any platform, regardless of how many values other generators consumed.
//
// Stream splitting: every consumer derives its own seed with
// CounterRng::derive(seed, stream_tag). Tags are listed in rng_streams
// below; nested consumers chain derive() calls. This is the repo-wide
// scheme referenced by the CLI's --seed flag.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64() { return mix64(seed_ + (++counter_) * kGamma); }

    // Uniform in [0, 1) with 53 random bits.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform over {-1.0, +1.0}.
    double next_sign() { return (next_u64() & 1u) ? 1.0 : -1.0; }

    // Uniform in [0, bound) without modulo bias (Lemire's method with
    // rejection). bound must be nonzero.
    std::uint64_t next_below(std::uint64_t bound) {
        while (true) {
            std::uint64_t x = next_u64();
            __uint128_t m = static_cast<__uint128_t>(x) * bound;
            auto lo = static_cast<std::uint64_t>(m);
            if (lo >= bound || lo >= (-bound) % bound) {
                return static_cast<std::uint64_t>(m >> 64);
            }
        }
    }

    // Standard normal via Box-Muller. Bit-exact given a fixed libm.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = next_unit();
        double u2 = next_unit();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    // Derive an independent substream seed. Not invertible back onto the
    // parent stream for any tag, including 0.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream_tag) {
        return mix64(mix64(seed + kGamma * (stream_tag + 1)) ^ 0xbf58476d1ce4e5b9ULL);
    }

private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

    static std::uint64_t mix64(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Fixed stream tags. Every randomized component advances its own derived
// stream, never a shared one.
namespace rng_streams {
constexpr std::uint64_t kSrhtSigns = 1;
constexpr std::uint64_t kSrhtSamples = 2;
constexpr std::uint64_t kTensorSignsLeft = 3;
constexpr std::uint64_t kTensorSignsRight = 4;
constexpr std::uint64_t kTensorSamples = 5;
constexpr std::uint64_t kPreconditioner = 6;
constexpr std::uint64_t kConditionEstimate = 7;
constexpr std::uint64_t kGenLeftFactor = 8;
constexpr std::uint64_t kGenRightFactor = 9;
constexpr std::uint64_t kRhs = 10;
constexpr std::uint64_t kKernelSketch = 11;   // + degree offset
constexpr std::uint64_t kTrialBase = 100;     // + trial index, for batch checks
}  // namespace rng_streams

}  // namespace apkr
