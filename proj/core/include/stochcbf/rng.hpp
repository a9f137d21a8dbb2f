#pragma once

#include <array>
#include <cstdint>

namespace stochcbf {

/// Philox4x32-10 block function (Salmon et al., SC'11). Pure: the same
/// (counter, key) always maps to the same 128 output bits.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

/// Counter-based generator. The key is the 64-bit seed, the upper half of
/// the counter is the stream id and the lower half counts blocks, so every
/// (seed, stream) pair is an independent, reproducible sequence and
/// replicates never share state.
///
/// Gaussian draws use the Box-Muller transform on two 53-bit uniforms; the
/// sine branch is cached and returned by the following call.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

    std::uint64_t next_u64() noexcept;

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept;

    /// Standard normal.
    double normal() noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }
    std::uint64_t blocks_consumed() const noexcept { return block_; }

private:
    void refill() noexcept;

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int buffered_words_ = 0;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

}  // namespace stochcbf
