#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace mocnn {

/// Source of uniform variates for the stochastic operators.
///
/// Every random decision in the search funnels through `uniform01()`, so a
/// scripted subclass can pin exact coefficient values in tests and a seeded
/// `Rng` makes whole runs bit-reproducible across platforms.
class RandomSource {
public:
    virtual ~RandomSource() = default;

    /// Draw in [0, 1].
    virtual double uniform01() = 0;

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform index in [0, n). n must be positive.
    std::size_t index(std::size_t n);

    bool bernoulli(double p) { return uniform01() < p; }
};

/// Seeded Mersenne-Twister source. The mapping from engine output to doubles
/// is done by hand (53 high bits) rather than through std::uniform_real_distribution,
/// whose output is implementation-defined.
class Rng final : public RandomSource {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform01() override;

private:
    std::mt19937_64 engine_;
};

} // namespace mocnn
