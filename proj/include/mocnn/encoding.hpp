#pragma once

#include "mocnn/random.hpp"

#include <compare>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace mocnn {

/// Inclusive integer range of one encoded hyperparameter.
struct IntRange {
    int min = 1;
    int max = 1;

    friend bool operator==(const IntRange&, const IntRange&) = default;
};

/// Per-dimension box constraints of a continuous search space.
struct Bounds {
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t size() const { return lower.size(); }
    static Bounds unitCube(std::size_t dimensions);
};

/// Ranges of the dense-block hyperparameters plus the image/task shape.
///
/// The genotype layout is (layers_1, growth_1, layers_2, growth_2, ...), so
/// dimension 2b holds block b's layer count and 2b+1 its growth rate.
struct SearchSpace {
    std::vector<IntRange> layerRange;
    std::vector<IntRange> growthRange;
    int inputHeight = 32;
    int inputWidth = 32;
    int inputChannels = 3;
    int numClasses = 10;

    std::size_t numBlocks() const { return layerRange.size(); }
    std::size_t dimensions() const { return 2 * numBlocks(); }
    IntRange range(std::size_t dimension) const;
    Bounds bounds() const;

    /// Throws std::invalid_argument describing the first violated invariant.
    void validate() const;

    /// Four blocks, growth 8-32 everywhere, layers 4-6 / 4-12 / 4-24 / 4-16,
    /// CIFAR-10 shaped input.
    static SearchSpace defaultSpace();

    friend bool operator==(const SearchSpace&, const SearchSpace&) = default;
};

/// Continuous particle position over a SearchSpace (or any Bounds).
using Genotype = std::vector<double>;

struct BlockShape {
    int layers = 0;
    int growth = 0;

    friend auto operator<=>(const BlockShape&, const BlockShape&) = default;
};

/// Integer hyperparameters a genotype stands for.
struct DecodedGenotype {
    std::vector<BlockShape> blocks;

    /// Flattened (layers, growth) integers; the memoization key.
    std::vector<int> key() const;
    static DecodedGenotype fromKey(std::span<const int> key);

    friend auto operator<=>(const DecodedGenotype&, const DecodedGenotype&) = default;
};

Genotype randomGenotype(const Bounds& bounds, RandomSource& rng);
Genotype randomGenotype(const SearchSpace& space, RandomSource& rng);

/// Throws std::invalid_argument when popSize is zero.
std::vector<Genotype> initPopulation(const SearchSpace& space, std::size_t popSize, RandomSource& rng);
std::vector<Genotype> initPopulation(const Bounds& bounds, std::size_t popSize, RandomSource& rng);

/// Projects each coordinate onto its [min, max]; throws on length mismatch.
Genotype clamp(const Genotype& g, const Bounds& bounds);
Genotype clamp(const Genotype& g, const SearchSpace& space);

/// Rounds half-up and clamps to the integer ranges. Rejects coordinates
/// outside the space (decode expects a clamped position).
DecodedGenotype decode(const Genotype& g, const SearchSpace& space);

/// Throws std::invalid_argument if any integer is outside its range.
void validate(const DecodedGenotype& d, const SearchSpace& space);

} // namespace mocnn
