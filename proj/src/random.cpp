#include "logdesign/random.hpp"

#include <array>

namespace logdesign {

namespace {

std::seed_seq make_seq(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return std::seed_seq{
        static_cast<std::uint32_t>(seed),   static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
        static_cast<std::uint32_t>(index),  static_cast<std::uint32_t>(index >> 32)};
}

}  // namespace

Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    auto seq = make_seq(seed, stream, index);
    return Rng(seq);
}

std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t index) {
    auto seq = make_seq(seed, static_cast<std::uint64_t>(stream), index);
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace logdesign
