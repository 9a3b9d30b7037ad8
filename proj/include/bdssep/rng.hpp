#pragma once

#include <cmath>
#include <cstdint>

namespace bdssep {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& s) noexcept {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace detail

// xoshiro256++ seeded through splitmix64 from (seed, stream). Streams with
// distinct ids are independent for all practical purposes, and a given
// (seed, stream) pair reproduces the same draws on every run.
class RngStream {
  public:
    RngStream() : RngStream(0, 0) {}
    RngStream(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t mix = seed;
        s_[0] = detail::splitmix64(mix);
        s_[1] = detail::splitmix64(mix);
        mix ^= 0x6a09e667f3bcc909ULL + stream * 0x3c6ef372fe94f82bULL;
        s_[2] = detail::splitmix64(mix);
        s_[3] = detail::splitmix64(mix);
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0,1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double exponential(double rate) noexcept { return -std::log1p(-uniform()) / rate; }

    bool bernoulli(double p) noexcept { return uniform() < p; }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

}  // namespace bdssep
