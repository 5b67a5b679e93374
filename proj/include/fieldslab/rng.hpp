#pragma once
// Counter-based Philox4x32-10 generator.  A stream is keyed by a 64-bit seed
// and addressed by (stream, substream); the block counter walks within it.
// Streams never overlap, so trajectory i sees the same numbers whatever the
// thread count.

#include <array>
#include <cstdint>
#include <limits>

namespace fieldslab {

using Philox4x32Block = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

Philox4x32Block philox4x32_10(Philox4x32Block ctr, Philox4x32Key key);

class Philox {
public:
    using result_type = std::uint64_t;

    Philox(std::uint64_t seed, std::uint64_t stream = 0, std::uint32_t substream = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

    // Uniform double in [0,1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
    // Uniform double in (0,1].
    double uniform_pos() { return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53; }

    // Independent generator for a labelled purpose within this stream.
    Philox split(std::uint32_t substream) const { return Philox(seed_, stream_, substream); }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint32_t sub_;
    std::uint64_t block_ = 0;
    Philox4x32Block buf_{};
    int pos_ = 2;
};

// Substream tags used by the library so that different consumers of one
// trajectory stream never share numbers.
namespace substream {
inline constexpr std::uint32_t dynamics = 1;
inline constexpr std::uint32_t labels = 2;
inline constexpr std::uint32_t sampling_base = 0x10000000u;  // + site index
}  // namespace substream

}  // namespace fieldslab
