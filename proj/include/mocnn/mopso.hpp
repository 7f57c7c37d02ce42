#pragma once

#include "mocnn/dominance.hpp"
#include "mocnn/encoding.hpp"
#include "mocnn/random.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace mocnn {

struct Particle {
    Genotype position;
    Genotype velocity;
    Genotype pbestPosition;
    ObjectiveVector pbestObjectives;
    ObjectiveVector currentObjectives;
};

/// Evaluates one generation's positions as a single batch; the result is
/// index-aligned with the input.
using BatchObjective = std::function<std::vector<ObjectiveVector>(std::span<const Genotype>)>;

struct MopsoConfig {
    std::size_t populationSize = 20;
    std::size_t maxGenerations = 20;
    /// Leader archive capacity; 0 means populationSize.
    std::size_t maxLeaders = 0;
    EpsilonVector epsilon{0.01, 0.05};
    std::uint64_t seed = 0;

    double inertiaMin = 0.1;
    double inertiaMax = 0.5;
    double accelerationMin = 1.5;
    double accelerationMax = 2.0;
    /// Exponent b of the non-uniform mutation decay.
    double nonUniformShape = 5.0;

    std::size_t leaderCapacity() const { return maxLeaders == 0 ? populationSize : maxLeaders; }
    void validate() const;
};

struct VelocityCoefficients {
    double inertia = 0.0;
    double cognitive = 0.0;
    double social = 0.0;
    double r1 = 0.0;
    double r2 = 0.0;
};

class NoLeaders : public std::runtime_error {
public:
    NoLeaders() : std::runtime_error("leader archive is empty") {}
};

/// Error raised out of a generation, carrying which one failed.
class SearchError : public std::runtime_error {
public:
    SearchError(std::size_t generation, const std::string& what);
    std::size_t generation() const { return generation_; }

private:
    std::size_t generation_;
};

/// Binary tournament on crowding distance: two uniform draws with
/// replacement, the larger crowding wins, ties go to a fair coin.
const LeaderEntry& selectLeader(const LeaderArchive& leaders, RandomSource& rng);

/// Draws r1, r2, c1, c2, w in that order.
VelocityCoefficients drawCoefficients(const MopsoConfig& config, RandomSource& rng);

/// v' = w v + c1 r1 (pbest - x) + c2 r2 (leader - x);  x' = clamp(x + v').
/// The velocity is kept as computed even when the position is clamped.
Particle updateParticle(Particle p, const Genotype& leader, const VelocityCoefficients& k, const Bounds& bounds);
Particle updateParticle(Particle p, const Genotype& leader, RandomSource& rng, const Bounds& bounds,
                        const MopsoConfig& config = {});

/// Splits particles into thirds by index: the first floor(n/3) are left alone,
/// the next floor(n/3) get uniform mutation and the rest non-uniform mutation.
/// Each coordinate mutates with probability 1/d.
void mutateByThirds(std::vector<Particle>& particles, std::size_t generation, std::size_t maxGenerations,
                    RandomSource& rng, const Bounds& bounds, double nonUniformShape = 5.0);

/// Michalewicz decay y * (1 - r^((1 - t/T)^b)); zero once t reaches T.
double nonUniformDelta(double y, double r, std::size_t generation, std::size_t maxGenerations, double shape);

/// Current replaces pbest if it dominates, is kept out if dominated, and
/// replaces it on a fair coin when the two are incomparable.
Particle updatePbest(Particle p, RandomSource& rng);

struct SwarmState {
    std::vector<Particle> particles;
    LeaderArchive leaders;
    EpsilonArchive finalArchive;
    /// Swarms evaluated so far; the initial swarm is generation 1.
    std::size_t generation = 0;
    std::uint64_t rngSeed = 0;
};

struct GenerationSnapshot {
    std::size_t generation = 0;
    std::vector<ArchiveEntry> archive;
};

struct RunResult {
    EpsilonArchive archive;
    std::vector<GenerationSnapshot> history;
    std::size_t evaluations = 0;
};

/// OMOPSO driver. Owns the random stream, so two instances with the same
/// config, bounds and deterministic objective produce identical runs.
class Omopso {
public:
    Omopso(MopsoConfig config, Bounds bounds, BatchObjective objective);

    /// Random swarm, zero velocities, one evaluation, leaders from the
    /// non-dominated particles, leaders sent to the epsilon archive.
    void initialize();

    /// One pass of leader selection, flight, mutation, batch evaluation,
    /// pbest update and leader/archive maintenance.
    void runGeneration();

    /// Evaluates maxGenerations swarms in total: the initial one, then
    /// maxGenerations - 1 updates, so the evaluation budget is
    /// populationSize * maxGenerations. The epsilon archive is snapshotted
    /// after each. With maxGenerations = 0 only the initial archive is built.
    RunResult run();

    const SwarmState& state() const { return state_; }
    const MopsoConfig& config() const { return config_; }
    std::size_t evaluations() const { return evaluations_; }

private:
    std::vector<ObjectiveVector> evaluate(std::span<const Genotype> positions);
    void refreshLeaders(std::vector<LeaderEntry> candidates);

    MopsoConfig config_;
    Bounds bounds_;
    BatchObjective objective_;
    Rng rng_;
    SwarmState state_;
    std::size_t evaluations_ = 0;
    bool initialized_ = false;
};

} // namespace mocnn
