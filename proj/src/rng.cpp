#include "bilayer/rng.hpp"

#include <bit>
#include <cmath>
#include <numbers>

namespace bilayer {

std::uint64_t splitmix64(std::uint64_t& x)
{
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words)
{
    std::uint64_t h = 0x6a09e667f3bcc909ULL;
    for (auto w : words) {
        std::uint64_t x = h ^ w;
        h = splitmix64(x);
    }
    return h;
}

std::uint64_t double_bits(double v)
{
    return std::bit_cast<std::uint64_t>(v);
}

Rng::Rng(std::uint64_t seed)
{
    std::uint64_t x = seed;
    for (auto& w : s_) w = splitmix64(x);
}

Rng::result_type Rng::operator()()
{
    const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
}

std::uint64_t Rng::below(std::uint64_t n)
{
    // Lemire's nearly-divisionless bounded draw.
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            m = static_cast<unsigned __int128>((*this)()) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double Rng::normal()
{
    // Box-Muller, one value per call so the stream position stays simple.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace bilayer
