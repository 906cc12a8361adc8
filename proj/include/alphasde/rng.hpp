#pragma once

#include <array>
#include <cstdint>

namespace alphasde {

/**
 * Philox4x32-10 counter-based generator (Salmon et al., SC'11).
 *
 * block(counter, key) is a pure function, so the n-th draw of any stream
 * can be computed without touching the others. Streams are keyed by the
 * 64-bit master seed; the upper counter half carries the stream (path)
 * index and the lower half the block index within the stream.
 */
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter counter, Key key) noexcept;
};

/// SplitMix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) noexcept;

/// Standard normal variates from one Philox stream via Box-Muller.
/// Each Philox block yields two 53-bit uniforms and thus two normals.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t stream) noexcept;

    double next() noexcept;
    // Uniform in the open interval (0, 1).
    double uniform() noexcept;

private:
    void refill() noexcept;

    Philox4x32::Key key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> bits_{};
    int bits_left_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace alphasde
