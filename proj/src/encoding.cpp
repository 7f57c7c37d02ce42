#include "mocnn/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mocnn {

namespace {

void checkRange(const IntRange& r, const char* what, std::size_t block)
{
    if (r.min < 1) {
        throw std::invalid_argument(std::string(what) + " range of block " + std::to_string(block + 1)
                                    + " has minimum < 1");
    }
    if (r.min > r.max) {
        throw std::invalid_argument(std::string(what) + " range of block " + std::to_string(block + 1)
                                    + " has min > max");
    }
}

void checkLength(std::size_t got, std::size_t want)
{
    if (got != want) {
        throw std::invalid_argument("genotype has " + std::to_string(got) + " values, expected "
                                    + std::to_string(want));
    }
}

} // namespace

Bounds Bounds::unitCube(std::size_t dimensions)
{
    return Bounds{std::vector<double>(dimensions, 0.0), std::vector<double>(dimensions, 1.0)};
}

IntRange SearchSpace::range(std::size_t dimension) const
{
    const auto block = dimension / 2;
    return dimension % 2 == 0 ? layerRange.at(block) : growthRange.at(block);
}

Bounds SearchSpace::bounds() const
{
    Bounds b;
    b.lower.reserve(dimensions());
    b.upper.reserve(dimensions());
    for (std::size_t d = 0; d < dimensions(); ++d) {
        const auto r = range(d);
        b.lower.push_back(r.min);
        b.upper.push_back(r.max);
    }
    return b;
}

void SearchSpace::validate() const
{
    if (layerRange.empty()) {
        throw std::invalid_argument("search space needs at least one block");
    }
    if (layerRange.size() != growthRange.size()) {
        throw std::invalid_argument("layer and growth ranges disagree on the number of blocks");
    }
    for (std::size_t b = 0; b < layerRange.size(); ++b) {
        checkRange(layerRange[b], "layer", b);
        checkRange(growthRange[b], "growth", b);
    }
    if (inputHeight < 1 || inputWidth < 1 || inputChannels < 1) {
        throw std::invalid_argument("input shape must be positive");
    }
    if (numClasses < 1) {
        throw std::invalid_argument("number of classes must be positive");
    }
}

SearchSpace SearchSpace::defaultSpace()
{
    SearchSpace s;
    s.layerRange = {{4, 6}, {4, 12}, {4, 24}, {4, 16}};
    s.growthRange = {{8, 32}, {8, 32}, {8, 32}, {8, 32}};
    return s;
}

std::vector<int> DecodedGenotype::key() const
{
    std::vector<int> k;
    k.reserve(2 * blocks.size());
    for (const auto& b : blocks) {
        k.push_back(b.layers);
        k.push_back(b.growth);
    }
    return k;
}

DecodedGenotype DecodedGenotype::fromKey(std::span<const int> key)
{
    if (key.empty() || key.size() % 2 != 0) {
        throw std::invalid_argument("genotype key must hold an even, non-zero number of integers");
    }
    DecodedGenotype d;
    for (std::size_t i = 0; i < key.size(); i += 2) {
        d.blocks.push_back({key[i], key[i + 1]});
    }
    return d;
}

Genotype randomGenotype(const Bounds& bounds, RandomSource& rng)
{
    Genotype g(bounds.size());
    for (std::size_t d = 0; d < g.size(); ++d) {
        g[d] = rng.uniform(bounds.lower[d], bounds.upper[d]);
    }
    return g;
}

Genotype randomGenotype(const SearchSpace& space, RandomSource& rng)
{
    return randomGenotype(space.bounds(), rng);
}

std::vector<Genotype> initPopulation(const Bounds& bounds, std::size_t popSize, RandomSource& rng)
{
    if (popSize == 0) {
        throw std::invalid_argument("population size must be at least 1");
    }
    std::vector<Genotype> population;
    population.reserve(popSize);
    for (std::size_t i = 0; i < popSize; ++i) {
        population.push_back(randomGenotype(bounds, rng));
    }
    return population;
}

std::vector<Genotype> initPopulation(const SearchSpace& space, std::size_t popSize, RandomSource& rng)
{
    return initPopulation(space.bounds(), popSize, rng);
}

Genotype clamp(const Genotype& g, const Bounds& bounds)
{
    checkLength(g.size(), bounds.size());
    Genotype out(g.size());
    for (std::size_t d = 0; d < g.size(); ++d) {
        out[d] = std::clamp(g[d], bounds.lower[d], bounds.upper[d]);
    }
    return out;
}

Genotype clamp(const Genotype& g, const SearchSpace& space)
{
    return clamp(g, space.bounds());
}

DecodedGenotype decode(const Genotype& g, const SearchSpace& space)
{
    checkLength(g.size(), space.dimensions());
    DecodedGenotype d;
    d.blocks.resize(space.numBlocks());
    for (std::size_t dim = 0; dim < g.size(); ++dim) {
        const auto r = space.range(dim);
        if (!(g[dim] >= r.min && g[dim] <= r.max)) {
            throw std::invalid_argument("dimension " + std::to_string(dim) + " is outside ["
                                        + std::to_string(r.min) + ", " + std::to_string(r.max)
                                        + "]; clamp before decoding");
        }
        const int v = std::clamp(static_cast<int>(std::floor(g[dim] + 0.5)), r.min, r.max);
        auto& block = d.blocks[dim / 2];
        (dim % 2 == 0 ? block.layers : block.growth) = v;
    }
    return d;
}

void validate(const DecodedGenotype& d, const SearchSpace& space)
{
    if (d.blocks.size() != space.numBlocks()) {
        throw std::invalid_argument("decoded genotype has " + std::to_string(d.blocks.size())
                                    + " blocks, space has " + std::to_string(space.numBlocks()));
    }
    for (std::size_t b = 0; b < d.blocks.size(); ++b) {
        const auto& lr = space.layerRange[b];
        const auto& gr = space.growthRange[b];
        if (d.blocks[b].layers < lr.min || d.blocks[b].layers > lr.max || d.blocks[b].growth < gr.min
            || d.blocks[b].growth > gr.max) {
            throw std::invalid_argument("block " + std::to_string(b + 1) + " is outside the search space");
        }
    }
}

} // namespace mocnn
