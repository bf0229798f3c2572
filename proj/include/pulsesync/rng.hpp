#pragma once

#include <cstdint>

namespace pulsesync {

/// SplitMix64. State advances by 0x9e3779b97f4a7c15 per draw, output is
/// mixed with the constants 0xbf58476d1ce4e5b9 and 0x94d049bb133111eb
/// (shifts 30, 27, 31). Uniform doubles take the top 53 bits times 2^-53.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept;
    /// Uniform in [0, 1).
    double uniform() noexcept;

private:
    std::uint64_t state_;
};

}  // namespace pulsesync
