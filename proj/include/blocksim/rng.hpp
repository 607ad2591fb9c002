#pragma once

#include <cstdint>
#include <random>

namespace blocksim {

// Seeded PRNG wrapper. All variate generation in the library draws canonical
// uniforms from here rather than from std:: distributions, so a given seed
// produces bit-identical streams regardless of standard library version.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), gen_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return gen_(); }

    // uniform double in [0, 1), 53-bit resolution
    double next_double() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // uniform double in (0, 1]
    double next_double_pos() { return 1.0 - next_double(); }

    // uniform integer in [0, n), n > 0; rejection avoids modulo bias
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return next_double() < p; }

    // Independent stream i of this generator's seed (seed XOR stream index).
    Rng stream(std::uint64_t index) const { return Rng(seed_ ^ index); }

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

}  // namespace blocksim
