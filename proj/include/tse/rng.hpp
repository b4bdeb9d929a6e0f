#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace tse {

// splitmix64; used to derive independent stream seeds from one base seed.
inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t tag) {
    std::uint64_t x = base ^ (0x9e3779b97f4a7c15ull * (tag + 1));
    std::uint64_t h = splitmix64(x);
    return splitmix64(x) ^ h;
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t tag, std::uint64_t tag2) {
    return mix_seed(mix_seed(base, tag), tag2);
}

// mt19937_64 with hand-pinned uniform/normal transforms, so that streams do
// not depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // uniform in [0, 1)
    double u01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return u01() < p; }

    // uniform integer in [0, n)
    std::uint32_t below(std::uint32_t n) {
        return static_cast<std::uint32_t>(static_cast<double>(n) * u01());
    }

    // Box-Muller; two uniforms per draw, no cached spare.
    double normal(double mu, double sigma) {
        double u1 = u01();
        double u2 = u01();
        while (u1 <= 0.0) u1 = u01();
        double r = std::sqrt(-2.0 * std::log(u1));
        return mu + sigma * r * std::cos(2.0 * M_PI * u2);
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace tse
