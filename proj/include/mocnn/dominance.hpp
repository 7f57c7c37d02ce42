#pragma once

#include "mocnn/encoding.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mocnn {

/// Two maximized objectives. For architecture search these are
/// (accuracy, -FLOPs / flopsScale); benchmarks store negated minimization
/// objectives in the same slots.
struct ObjectiveVector {
    static constexpr std::size_t kSize = 2;

    std::array<double, kSize> values{};

    ObjectiveVector() = default;
    ObjectiveVector(double first, double second) : values{first, second} {}

    double accuracy() const { return values[0]; }
    double negFlops() const { return values[1]; }

    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
    static constexpr std::size_t size() { return kSize; }

    friend bool operator==(const ObjectiveVector&, const ObjectiveVector&) = default;
};

using EpsilonVector = std::array<double, ObjectiveVector::kSize>;
using EpsilonBox = std::array<std::int64_t, ObjectiveVector::kSize>;

/// Pareto dominance under maximization: a >= b everywhere, a > b somewhere.
bool dominates(const ObjectiveVector& a, const ObjectiveVector& b);

/// Indices of the non-dominated points, ascending. Equal points do not
/// dominate each other, so duplicates on the front are all kept.
std::vector<std::size_t> paretoFilter(std::span<const ObjectiveVector> points);

/// floor(x_i / eps_i) per objective. Throws std::invalid_argument on eps <= 0.
EpsilonBox epsilonBox(const ObjectiveVector& x, const EpsilonVector& eps);

/// Box dominance: box(a) >= box(b) componentwise and the boxes differ.
/// Points sharing a box never epsilon-dominate each other; EpsilonArchive
/// settles that case by distance to the box's upper corner.
bool epsilonDominates(const ObjectiveVector& a, const ObjectiveVector& b, const EpsilonVector& eps);

/// Euclidean distance from x to the upper corner of its epsilon box.
double cornerDistance(const ObjectiveVector& x, const EpsilonVector& eps);

/// NSGA-II crowding distance. Per objective the points are ordered by
/// (value, index); the first and last get +inf, interior points accumulate
/// (next - prev) / (max - min), and a zero range contributes nothing.
std::vector<double> crowdingDistances(std::span<const ObjectiveVector> front);

struct ArchiveEntry {
    Genotype genotype;
    ObjectiveVector objectives;
};

struct InsertOutcome {
    bool accepted = false;
    std::size_t evicted = 0;
};

/// Final-solution archive: entries are pairwise epsilon-non-dominated and at
/// most one entry occupies any epsilon box.
class EpsilonArchive {
public:
    explicit EpsilonArchive(EpsilonVector epsilon = {0.01, 0.05});

    /// Rejects the candidate when an entry epsilon-dominates it, or shares its
    /// box and is at least as close to the box corner. Otherwise evicts every
    /// entry the candidate beats and appends the candidate.
    InsertOutcome insert(ArchiveEntry candidate);

    const std::vector<ArchiveEntry>& entries() const { return entries_; }
    const EpsilonVector& epsilon() const { return epsilon_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

private:
    EpsilonVector epsilon_;
    std::vector<ArchiveEntry> entries_;
};

struct LeaderEntry {
    Genotype genotype;
    ObjectiveVector objectives;
    double crowding = 0.0;
};

/// Leaders used as social attractors; bounded by maxSize via crowding.
struct LeaderArchive {
    std::vector<LeaderEntry> entries;
    std::size_t maxSize = 0;

    void recomputeCrowding();
};

/// While over capacity, drop the entry with the smallest crowding distance
/// (the lowest index among ties) and recompute. Crowding is fresh on return.
LeaderArchive truncateLeaders(LeaderArchive archive);

} // namespace mocnn
