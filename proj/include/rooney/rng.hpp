#pragma once

#include <cstdint>
#include <random>

namespace rooney::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Generator for one trial of one run. Mixing the master seed with the trial
// index gives every trial its own stream, so any subset of trials can be
// reproduced without replaying the rest and results do not depend on how
// trials are scheduled across threads.
inline std::mt19937_64 trial_rng(std::uint64_t master_seed, std::uint64_t trial_index) {
    return std::mt19937_64(splitmix64(splitmix64(master_seed) ^ trial_index));
}

// Uniform variate in the open interval (0,1): 53-bit grid offset by half a step
// so neither endpoint is reachable. Identical across platforms for a given
// generator state, unlike std::uniform_real_distribution.
inline double uniform_open(std::mt19937_64& g) {
    return (double(g() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace rooney::rng
