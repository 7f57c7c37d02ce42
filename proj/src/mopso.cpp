#include "mocnn/mopso.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace mocnn {

void MopsoConfig::validate() const
{
    if (populationSize == 0) {
        throw std::invalid_argument("population size must be at least 1");
    }
    for (double e : epsilon) {
        if (!(e > 0.0)) {
            throw std::invalid_argument("epsilon components must be positive");
        }
    }
    if (inertiaMin > inertiaMax || accelerationMin > accelerationMax) {
        throw std::invalid_argument("coefficient ranges must satisfy min <= max");
    }
}

SearchError::SearchError(std::size_t generation, const std::string& what)
    : std::runtime_error("generation " + std::to_string(generation) + ": " + what), generation_(generation)
{
}

const LeaderEntry& selectLeader(const LeaderArchive& leaders, RandomSource& rng)
{
    if (leaders.entries.empty()) {
        throw NoLeaders();
    }
    const auto& a = leaders.entries[rng.index(leaders.entries.size())];
    const auto& b = leaders.entries[rng.index(leaders.entries.size())];
    if (a.crowding > b.crowding) {
        return a;
    }
    if (b.crowding > a.crowding) {
        return b;
    }
    return rng.bernoulli(0.5) ? a : b;
}

VelocityCoefficients drawCoefficients(const MopsoConfig& config, RandomSource& rng)
{
    VelocityCoefficients k;
    k.r1 = rng.uniform01();
    k.r2 = rng.uniform01();
    k.cognitive = rng.uniform(config.accelerationMin, config.accelerationMax);
    k.social = rng.uniform(config.accelerationMin, config.accelerationMax);
    k.inertia = rng.uniform(config.inertiaMin, config.inertiaMax);
    return k;
}

Particle updateParticle(Particle p, const Genotype& leader, const VelocityCoefficients& k, const Bounds& bounds)
{
    const auto n = p.position.size();
    if (p.velocity.size() != n || p.pbestPosition.size() != n || leader.size() != n || bounds.size() != n) {
        throw std::invalid_argument("particle, leader and bounds dimensions disagree");
    }
    for (std::size_t d = 0; d < n; ++d) {
        const double x = p.position[d];
        p.velocity[d] = k.inertia * p.velocity[d] + k.cognitive * k.r1 * (p.pbestPosition[d] - x)
                        + k.social * k.r2 * (leader[d] - x);
        p.position[d] = x + p.velocity[d];
    }
    p.position = clamp(p.position, bounds);
    return p;
}

Particle updateParticle(Particle p, const Genotype& leader, RandomSource& rng, const Bounds& bounds,
                        const MopsoConfig& config)
{
    return updateParticle(std::move(p), leader, drawCoefficients(config, rng), bounds);
}

double nonUniformDelta(double y, double r, std::size_t generation, std::size_t maxGenerations, double shape)
{
    if (maxGenerations == 0 || generation >= maxGenerations) {
        return 0.0;
    }
    const double progress = static_cast<double>(generation) / static_cast<double>(maxGenerations);
    return y * (1.0 - std::pow(r, std::pow(1.0 - progress, shape)));
}

void mutateByThirds(std::vector<Particle>& particles, std::size_t generation, std::size_t maxGenerations,
                    RandomSource& rng, const Bounds& bounds, double nonUniformShape)
{
    const std::size_t n = particles.size();
    const std::size_t third = n / 3;
    const std::size_t dims = bounds.size();
    if (dims == 0) {
        return;
    }
    const double rate = 1.0 / static_cast<double>(dims);

    for (std::size_t i = third; i < 2 * third; ++i) {
        auto& x = particles[i].position;
        for (std::size_t d = 0; d < dims; ++d) {
            if (rng.bernoulli(rate)) {
                x[d] = rng.uniform(bounds.lower[d], bounds.upper[d]);
            }
        }
        x = clamp(x, bounds);
    }

    for (std::size_t i = 2 * third; i < n; ++i) {
        auto& x = particles[i].position;
        for (std::size_t d = 0; d < dims; ++d) {
            if (!rng.bernoulli(rate)) {
                continue;
            }
            const bool up = rng.bernoulli(0.5);
            const double r = rng.uniform01();
            if (up) {
                x[d] += nonUniformDelta(bounds.upper[d] - x[d], r, generation, maxGenerations, nonUniformShape);
            } else {
                x[d] -= nonUniformDelta(x[d] - bounds.lower[d], r, generation, maxGenerations, nonUniformShape);
            }
        }
        x = clamp(x, bounds);
    }
}

Particle updatePbest(Particle p, RandomSource& rng)
{
    if (dominates(p.currentObjectives, p.pbestObjectives)) {
        p.pbestPosition = p.position;
        p.pbestObjectives = p.currentObjectives;
    } else if (!dominates(p.pbestObjectives, p.currentObjectives) && p.currentObjectives != p.pbestObjectives) {
        if (rng.bernoulli(0.5)) {
            p.pbestPosition = p.position;
            p.pbestObjectives = p.currentObjectives;
        }
    }
    return p;
}

Omopso::Omopso(MopsoConfig config, Bounds bounds, BatchObjective objective)
    : config_(config), bounds_(std::move(bounds)), objective_(std::move(objective)), rng_(config.seed)
{
    config_.validate();
    if (bounds_.size() == 0 || bounds_.lower.size() != bounds_.upper.size()) {
        throw std::invalid_argument("bounds must be non-empty with matching lower/upper lengths");
    }
    state_.finalArchive = EpsilonArchive(config_.epsilon);
    state_.rngSeed = config_.seed;
    state_.leaders.maxSize = config_.leaderCapacity();
}

std::vector<ObjectiveVector> Omopso::evaluate(std::span<const Genotype> positions)
{
    std::vector<ObjectiveVector> out;
    try {
        out = objective_(positions);
    } catch (const std::exception& e) {
        throw SearchError(state_.generation + 1, e.what());
    }
    if (out.size() != positions.size()) {
        throw SearchError(state_.generation + 1, "objective returned " + std::to_string(out.size())
                                                 + " results for " + std::to_string(positions.size())
                                                 + " positions");
    }
    evaluations_ += positions.size();
    return out;
}

void Omopso::refreshLeaders(std::vector<LeaderEntry> candidates)
{
    // Candidates with identical objectives add nothing but crowding noise;
    // keep the first (old leaders come first).
    std::vector<LeaderEntry> unique;
    unique.reserve(candidates.size());
    for (auto& c : candidates) {
        const bool seen = std::any_of(unique.begin(), unique.end(),
                                      [&](const LeaderEntry& u) { return u.objectives == c.objectives; });
        if (!seen) {
            unique.push_back(std::move(c));
        }
    }

    std::vector<ObjectiveVector> objs;
    objs.reserve(unique.size());
    for (const auto& u : unique) {
        objs.push_back(u.objectives);
    }

    LeaderArchive next;
    next.maxSize = config_.leaderCapacity();
    for (auto i : paretoFilter(objs)) {
        next.entries.push_back(std::move(unique[i]));
    }
    state_.leaders = truncateLeaders(std::move(next));

    for (const auto& l : state_.leaders.entries) {
        state_.finalArchive.insert({l.genotype, l.objectives});
    }
}

void Omopso::initialize()
{
    state_.particles.clear();
    state_.generation = 0;
    const auto positions = initPopulation(bounds_, config_.populationSize, rng_);
    const auto objectives = evaluate(positions);

    std::vector<LeaderEntry> candidates;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        Particle p;
        p.position = positions[i];
        p.velocity.assign(positions[i].size(), 0.0);
        p.pbestPosition = positions[i];
        p.currentObjectives = objectives[i];
        p.pbestObjectives = objectives[i];
        candidates.push_back({p.position, p.currentObjectives, 0.0});
        state_.particles.push_back(std::move(p));
    }
    refreshLeaders(std::move(candidates));
    state_.generation = 1;
    initialized_ = true;
}

void Omopso::runGeneration()
{
    if (!initialized_) {
        initialize();
    }
    auto& particles = state_.particles;

    for (auto& p : particles) {
        const auto& leader = selectLeader(state_.leaders, rng_);
        p = updateParticle(std::move(p), leader.genotype, rng_, bounds_, config_);
    }
    mutateByThirds(particles, state_.generation, config_.maxGenerations, rng_, bounds_, config_.nonUniformShape);

    std::vector<Genotype> positions;
    positions.reserve(particles.size());
    for (const auto& p : particles) {
        positions.push_back(p.position);
    }
    const auto objectives = evaluate(positions);

    for (std::size_t i = 0; i < particles.size(); ++i) {
        particles[i].currentObjectives = objectives[i];
        particles[i] = updatePbest(std::move(particles[i]), rng_);
    }

    std::vector<LeaderEntry> candidates = state_.leaders.entries;
    for (const auto& p : particles) {
        candidates.push_back({p.position, p.currentObjectives, 0.0});
    }
    refreshLeaders(std::move(candidates));
    ++state_.generation;
}

RunResult Omopso::run()
{
    if (!initialized_) {
        initialize();
    }
    RunResult result;
    if (config_.maxGenerations > 0) {
        result.history.push_back({state_.generation, state_.finalArchive.entries()});
    }
    while (state_.generation < config_.maxGenerations) {
        runGeneration();
        result.history.push_back({state_.generation, state_.finalArchive.entries()});
    }
    result.archive = state_.finalArchive;
    result.evaluations = evaluations_;
    return result;
}

} // namespace mocnn
