#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace bilayer {

/// xoshiro256** with splitmix64 seeding. The full state is four words so it
/// can be checkpointed and restored bit-exactly.
class Rng {
public:
    using result_type = std::uint64_t;
    using State = std::array<std::uint64_t, 4>;

    explicit Rng(std::uint64_t seed = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
    /// Uniform integer in [0, n), n > 0.
    std::uint64_t below(std::uint64_t n);
    bool coin() { return ((*this)() >> 63) != 0; }
    double normal();

    const State& state() const { return s_; }
    void set_state(const State& s) { s_ = s; }

    friend bool operator==(const Rng&, const Rng&) = default;

private:
    State s_;
};

std::uint64_t splitmix64(std::uint64_t& x);

/// Order-sensitive hash of a list of words; used to derive per-chain seeds.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words);

std::uint64_t double_bits(double v);

}  // namespace bilayer
