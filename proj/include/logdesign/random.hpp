#pragma once

#include <cstdint>
#include <random>

namespace logdesign {

using Rng = std::mt19937_64;

// Sub-stream identifiers. Every random quantity in a trial is drawn from its
// own stream so that adding a consumer never shifts another consumer's draws.
enum class Stream : std::uint64_t {
    Environment = 1,
    TargetModel = 2,
    LoggingModel = 3,
    AuxiliaryData = 4,
    MonteCarlo = 5,
};

/// Seeds a generator from (seed, stream, index) through std::seed_seq.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t index = 0);

/// Derives a 64-bit child seed from (seed, stream, index).
std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t index = 0);

/// Uniform draw on [0, 1) built from the top 53 bits of one engine output.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace logdesign
