#include "fieldslab/rng.hpp"

namespace fieldslab {

namespace {
constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}
}  // namespace

Philox4x32Block philox4x32_10(Philox4x32Block c, Philox4x32Key k) {
    for (int r = 0; r < 10; ++r) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kM0, c[0], hi0, lo0);
        mulhilo(kM1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kW0;
        k[1] += kW1;
    }
    return c;
}

Philox::Philox(std::uint64_t seed, std::uint64_t stream, std::uint32_t substream)
    : seed_(seed), stream_(stream), sub_(substream) {}

void Philox::refill() {
    // Counter words: block (64 bits), low stream word, substream. The high
    // stream word is folded into the key.
    const Philox4x32Block ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                              static_cast<std::uint32_t>(stream_), sub_};
    const Philox4x32Key key{static_cast<std::uint32_t>(seed_) ^ static_cast<std::uint32_t>(stream_ >> 32),
                            static_cast<std::uint32_t>(seed_ >> 32)};
    buf_ = philox4x32_10(ctr, key);
    ++block_;
    pos_ = 0;
}

Philox::result_type Philox::operator()() {
    if (pos_ >= 2) refill();
    const result_type v = (static_cast<result_type>(buf_[2 * pos_]) << 32) | buf_[2 * pos_ + 1];
    ++pos_;
    return v;
}

}  // namespace fieldslab
