#pragma once

#include <cstdint>
#include <limits>

namespace ldexpand {

inline std::uint64_t splitmix64(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// xoshiro256** seeded through splitmix64. Satisfies UniformRandomBitGenerator.
class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256(std::uint64_t seed = 0) {
        for (auto& w : s_) w = splitmix64(seed);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        const std::uint64_t r = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return r;
    }

    /// Uniform on (0, 1), never exactly 0.
    double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

/// What a random stream is used for; part of the stream key.
enum class Purpose : std::uint64_t { Path = 1, LimitPath = 2, Jumps = 3, Start = 4, FeynmanKac = 5 };

/// Independent stream for (root seed, index, purpose), order-independent.
inline Xoshiro256 stream(std::uint64_t root, std::uint64_t index, Purpose purpose) {
    std::uint64_t s = root;
    std::uint64_t key = splitmix64(s);
    s = key ^ (index * 0xd1342543de82ef95ULL);
    key = splitmix64(s);
    s = key ^ (static_cast<std::uint64_t>(purpose) * 0x9e3779b97f4a7c15ULL);
    return Xoshiro256(splitmix64(s));
}

}  // namespace ldexpand
