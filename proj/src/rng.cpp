#include "rsam/rng.hpp"

namespace rsam {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t path, std::uint64_t substream) {
    std::uint64_t s = seed;
    (void)splitmix64(s);
    s ^= 0x632be59bd9b4e019ULL * (path + 1);
    (void)splitmix64(s);
    s ^= 0x9e3779b97f4a7c15ULL * (substream + 1);
    eng_.seed(splitmix64(s));
}

}  // namespace rsam
