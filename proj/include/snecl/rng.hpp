#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>

namespace snecl {

/// Seeded pseudo-random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Every distribution below is derived from raw 64-bit draws by
/// code in this library, so a given seed yields the same stream on any
/// conforming toolchain. Library distributions such as
/// std::normal_distribution are deliberately not used: their algorithms are
/// implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi);

    /// Uniform integer in [0, n). n must be positive.
    std::size_t index(std::size_t n);

    /// Standard normal (Box-Muller, one variate per call).
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Gamma(shape, 1) via Marsaglia-Tsang.
    double gamma(double shape);
    double beta(double a, double b);

    /// Fisher-Yates shuffle driven by index().
    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = index(i);
            std::swap(items[i - 1], items[j]);
        }
    }

    /// Independent child stream; depends only on the seed and `stream`,
    /// never on how much of this stream has been consumed.
    Rng split(std::uint64_t stream) const;

    /// Text form of the full engine state (bit-exact round trip).
    std::string serialize() const;
    static Rng deserialize(const std::string& text);

    friend bool operator==(const Rng& a, const Rng& b) {
        return a.seed_ == b.seed_ && a.engine_ == b.engine_;
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used for seed derivation.
std::uint64_t mix64(std::uint64_t x);

} // namespace snecl
