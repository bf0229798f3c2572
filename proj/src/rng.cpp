#include "pulsesync/rng.hpp"

namespace pulsesync {

std::uint64_t SplitMix64::next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double SplitMix64::uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

}  // namespace pulsesync
