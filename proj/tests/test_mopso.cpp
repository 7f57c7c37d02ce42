#include "mocnn/evaluation.hpp"
#include "mocnn/mopso.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace mocnn;
using testing::ScriptedRandom;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Particle particleAt(Genotype x, Genotype v, Genotype pbest)
{
    Particle p;
    p.position = std::move(x);
    p.velocity = std::move(v);
    p.pbestPosition = std::move(pbest);
    return p;
}

BatchObjective zdt1Batch()
{
    return [](std::span<const Genotype> xs) {
        std::vector<ObjectiveVector> out;
        for (const auto& x : xs) {
            out.push_back(zdt1(x));
        }
        return out;
    };
}

Bounds box1(double lo, double hi)
{
    return Bounds{{lo}, {hi}};
}

} // namespace

TEST_CASE("selectLeader from a single entry and an empty archive")
{
    Rng rng(1);
    LeaderArchive one;
    one.entries.push_back({{1.0}, {0.5, 0.5}, 0.3});
    CHECK(&selectLeader(one, rng) == &one.entries[0]);

    LeaderArchive none;
    CHECK_THROWS_AS(selectLeader(none, rng), NoLeaders);
}

TEST_CASE("selectLeader tournament favours crowding")
{
    Rng rng(12);
    LeaderArchive l;
    l.entries.push_back({{0.0}, {0.1, 0.9}, kInf});
    l.entries.push_back({{1.0}, {0.9, 0.1}, 0.1});
    const int n = 10000;
    int wins = 0;
    for (int i = 0; i < n; ++i) {
        wins += &selectLeader(l, rng) == &l.entries[0] ? 1 : 0;
    }
    CHECK(std::abs(wins / double(n) - 0.75) <= 0.03);

    // the infinite entry wins every tournament it enters
    ScriptedRandom both({0.0, 0.99});
    CHECK(&selectLeader(l, both) == &l.entries[0]);
    ScriptedRandom reversed({0.99, 0.0});
    CHECK(&selectLeader(l, reversed) == &l.entries[0]);

    l.entries[1].crowding = kInf;
    wins = 0;
    for (int i = 0; i < n; ++i) {
        wins += &selectLeader(l, rng) == &l.entries[0] ? 1 : 0;
    }
    CHECK(std::abs(wins / double(n) - 0.5) <= 0.03);
}

TEST_CASE("coefficient draw order")
{
    ScriptedRandom rng({0.1, 0.2, 0.3, 0.4, 0.5});
    const auto k = drawCoefficients(MopsoConfig{}, rng);
    CHECK(k.r1 == doctest::Approx(0.1));
    CHECK(k.r2 == doctest::Approx(0.2));
    CHECK(k.cognitive == doctest::Approx(1.5 + 0.5 * 0.3));
    CHECK(k.social == doctest::Approx(1.5 + 0.5 * 0.4));
    CHECK(k.inertia == doctest::Approx(0.1 + 0.4 * 0.5));
    CHECK(rng.draws() == 5);
}

TEST_CASE("velocity update with scripted coefficients")
{
    // r1 = r2 = 1, c1 = c2 = 1.5, w = 0.2
    ScriptedRandom rng({1.0, 1.0, 0.0, 0.0, 0.25});
    const auto p = updateParticle(particleAt({10.0}, {1.0}, {12.0}), {14.0}, rng, box1(0, 100));
    CHECK(p.velocity[0] == doctest::Approx(9.2));
    CHECK(p.position[0] == doctest::Approx(19.2));

    ScriptedRandom again({1.0, 1.0, 0.0, 0.0, 0.25});
    const auto clamped = updateParticle(particleAt({10.0}, {1.0}, {12.0}), {14.0}, again, box1(0, 16));
    CHECK(clamped.position[0] == 16.0);
    CHECK(clamped.velocity[0] == doctest::Approx(9.2));
}

TEST_CASE("velocity update fixed points")
{
    Rng rng(3);
    const auto still = updateParticle(particleAt({5.0, 7.0}, {0.0, 0.0}, {5.0, 7.0}), {5.0, 7.0}, rng,
                                      Bounds{{0, 0}, {10, 10}});
    CHECK(still.position == Genotype{5.0, 7.0});

    const VelocityCoefficients k{0.3, 1.7, 1.9, 0.4, 0.6};
    const auto drift = updateParticle(particleAt({5.0, 7.0}, {1.0, -2.0}, {5.0, 7.0}), {5.0, 7.0}, k,
                                      Bounds{{0, 0}, {10, 10}});
    CHECK(drift.position[0] == doctest::Approx(5.3));
    CHECK(drift.position[1] == doctest::Approx(6.4));
}

TEST_CASE("velocity update rejects mismatched dimensions")
{
    Rng rng(3);
    CHECK_THROWS_AS(updateParticle(particleAt({1.0, 2.0}, {0.0, 0.0}, {1.0, 2.0}), {1.0}, rng, Bounds{{0, 0}, {5, 5}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(updateParticle(particleAt({1.0, 2.0}, {0.0}, {1.0, 2.0}), {1.0, 2.0}, rng, Bounds{{0, 0}, {5, 5}}),
                    std::invalid_argument);
}

TEST_CASE("mutation by thirds")
{
    const Bounds b{{0, 0}, {10, 10}};
    std::vector<Particle> ps;
    for (int i = 0; i < 3; ++i) {
        ps.push_back(particleAt({4.0, 6.0}, {0, 0}, {4.0, 6.0}));
    }
    // every coordinate mutates, uniform resets to the lower bound,
    // non-uniform moves up by the full distance
    ScriptedRandom always({0.0});
    auto mutated = ps;
    mutateByThirds(mutated, 0, 10, always, b);
    CHECK(mutated[0].position == Genotype{4.0, 6.0});
    CHECK(mutated[1].position == Genotype{0.0, 0.0});
    CHECK(mutated[2].position == Genotype{10.0, 10.0});

    ScriptedRandom atEnd({0.0});
    auto late = ps;
    mutateByThirds(late, 10, 10, atEnd, b);
    CHECK(late[2].position[0] == doctest::Approx(4.0).epsilon(1e-9));
    CHECK(late[2].position[1] == doctest::Approx(6.0).epsilon(1e-9));
}

TEST_CASE("mutation partition with remainders")
{
    const Bounds b{{0}, {1}};
    Rng rng(21);
    for (std::size_t n : {1u, 2u, 4u, 5u, 7u, 20u}) {
        std::vector<Particle> ps(n, particleAt({0.5}, {0}, {0.5}));
        ScriptedRandom always({0.0});
        mutateByThirds(ps, 0, 10, always, b);
        const std::size_t third = n / 3;
        for (std::size_t i = 0; i < n; ++i) {
            const double want = i < third ? 0.5 : (i < 2 * third ? 0.0 : 1.0);
            CHECK(ps[i].position[0] == want);
        }
    }
}

TEST_CASE("non-uniform decay")
{
    CHECK(nonUniformDelta(3.0, 0.3, 10, 10, 5.0) == 0.0);
    CHECK(nonUniformDelta(3.0, 0.0, 0, 10, 5.0) == doctest::Approx(3.0));
    const double mid = nonUniformDelta(3.0, 0.5, 5, 10, 5.0);
    CHECK(mid == doctest::Approx(3.0 * (1.0 - std::pow(0.5, std::pow(0.5, 5.0)))));
    double prev = kInf;
    for (std::size_t t = 0; t <= 10; ++t) {
        const double d = nonUniformDelta(1.0, 0.4, t, 10, 5.0);
        CHECK(d <= prev);
        prev = d;
    }
}

TEST_CASE("personal best update")
{
    Rng rng(9);
    auto p = particleAt({1.0}, {0}, {0.0});
    p.pbestObjectives = {0.8, -2.0};
    p.currentObjectives = {0.9, -1.0};
    auto q = updatePbest(p, rng);
    CHECK(q.pbestObjectives == ObjectiveVector{0.9, -1.0});
    CHECK(q.pbestPosition == Genotype{1.0});

    p.currentObjectives = {0.7, -3.0};
    q = updatePbest(p, rng);
    CHECK(q.pbestPosition == Genotype{0.0});

    p.currentObjectives = p.pbestObjectives;
    for (int i = 0; i < 100; ++i) {
        CHECK(updatePbest(p, rng).pbestPosition == Genotype{0.0});
    }

    p.currentObjectives = {0.9, -3.0};
    const int n = 10000;
    int replaced = 0;
    for (int i = 0; i < n; ++i) {
        replaced += updatePbest(p, rng).pbestPosition == Genotype{1.0} ? 1 : 0;
    }
    CHECK(std::abs(replaced / double(n) - 0.5) <= 0.03);
}

TEST_CASE("config validation")
{
    MopsoConfig c;
    c.populationSize = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.epsilon = {0.0, 0.05};
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    CHECK(c.leaderCapacity() == 20);
    c.maxLeaders = 7;
    CHECK(c.leaderCapacity() == 7);
}

TEST_CASE("generation budget: population times generations")
{
    MopsoConfig c;
    c.populationSize = 20;
    c.maxGenerations = 20;
    c.seed = 5;
    std::size_t requests = 0;
    std::size_t batches = 0;
    auto inner = zdt1Batch();
    Omopso search(c, Bounds::unitCube(6), [&](std::span<const Genotype> xs) {
        ++batches;
        requests += xs.size();
        CHECK(xs.size() == 20);
        return inner(xs);
    });
    const auto r = search.run();
    CHECK(batches == 20);
    CHECK(requests == 400);
    CHECK(r.evaluations == 400);
    REQUIRE(r.history.size() == 20);
    for (std::size_t g = 0; g < r.history.size(); ++g) {
        CHECK(r.history[g].generation == g + 1);
    }
    CHECK(search.state().generation == 20);

    c.populationSize = 50;
    c.maxGenerations = 10;
    Omopso wide(c, Bounds::unitCube(6), zdt1Batch());
    const auto w = wide.run();
    CHECK(w.history.size() == 10);
    CHECK(w.evaluations == 500);
}

TEST_CASE("zero generations reports the initial archive")
{
    MopsoConfig c;
    c.populationSize = 6;
    c.maxGenerations = 0;
    c.seed = 3;
    Omopso search(c, Bounds::unitCube(4), zdt1Batch());
    search.initialize();
    const auto initial = search.state().finalArchive.entries();
    const auto r = search.run();
    CHECK(r.history.empty());
    REQUIRE(r.archive.size() == initial.size());
    for (std::size_t i = 0; i < initial.size(); ++i) {
        CHECK(r.archive.entries()[i].objectives == initial[i].objectives);
    }
    CHECK(r.evaluations == 6);
}

TEST_CASE("runs are reproducible for a fixed seed")
{
    MopsoConfig c;
    c.populationSize = 4;
    c.maxGenerations = 2;
    c.seed = 77;
    const auto a = Omopso(c, Bounds::unitCube(5), zdt1Batch()).run();
    const auto b = Omopso(c, Bounds::unitCube(5), zdt1Batch()).run();
    REQUIRE(a.archive.size() == b.archive.size());
    for (std::size_t i = 0; i < a.archive.size(); ++i) {
        CHECK(a.archive.entries()[i].genotype == b.archive.entries()[i].genotype);
        CHECK(a.archive.entries()[i].objectives == b.archive.entries()[i].objectives);
    }

    c.populationSize = 20;
    c.maxGenerations = 15;
    const auto x = Omopso(c, Bounds::unitCube(10), zdt1Batch()).run();
    const auto y = Omopso(c, Bounds::unitCube(10), zdt1Batch()).run();
    REQUIRE(x.history.size() == y.history.size());
    for (std::size_t g = 0; g < x.history.size(); ++g) {
        REQUIRE(x.history[g].archive.size() == y.history[g].archive.size());
        for (std::size_t i = 0; i < x.history[g].archive.size(); ++i) {
            CHECK(x.history[g].archive[i].genotype == y.history[g].archive[i].genotype);
        }
    }
}

TEST_CASE("swarm invariants hold every generation")
{
    MopsoConfig c;
    c.populationSize = 12;
    c.maxGenerations = 30;
    c.seed = 101;
    const auto bounds = Bounds::unitCube(8);
    Omopso search(c, bounds, zdt1Batch());
    search.initialize();
    std::vector<ObjectiveVector> presented;
    for (const auto& l : search.state().leaders.entries) {
        presented.push_back(l.objectives);
    }
    while (search.state().generation < c.maxGenerations) {
        std::vector<ObjectiveVector> oldPbest;
        for (const auto& p : search.state().particles) {
            oldPbest.push_back(p.pbestObjectives);
        }
        search.runGeneration();
        const auto& s = search.state();
        for (std::size_t i = 0; i < s.particles.size(); ++i) {
            const auto& p = s.particles[i];
            CHECK(p.velocity.size() == p.position.size());
            for (std::size_t d = 0; d < p.position.size(); ++d) {
                CHECK(p.position[d] >= bounds.lower[d]);
                CHECK(p.position[d] <= bounds.upper[d]);
            }
            CHECK_FALSE(dominates(oldPbest[i], p.pbestObjectives));
        }
        CHECK(s.leaders.entries.size() <= c.leaderCapacity());
        CHECK_FALSE(s.leaders.entries.empty());
        for (const auto& a : s.leaders.entries) {
            for (const auto& b : s.leaders.entries) {
                CHECK_FALSE(dominates(a.objectives, b.objectives));
            }
        }
        for (const auto& l : s.leaders.entries) {
            presented.push_back(l.objectives);
        }
        for (const auto& e : s.finalArchive.entries()) {
            for (const auto& q : presented) {
                CHECK_FALSE(dominates(q, e.objectives));
            }
        }
    }
}

TEST_CASE("objective failures carry the generation")
{
    MopsoConfig c;
    c.populationSize = 5;
    c.maxGenerations = 4;
    int calls = 0;
    auto inner = zdt1Batch();
    Omopso search(c, Bounds::unitCube(3), [&](std::span<const Genotype> xs) {
        if (++calls == 3) {
            throw std::runtime_error("backend down");
        }
        return inner(xs);
    });
    try {
        search.run();
        FAIL("expected SearchError");
    } catch (const SearchError& e) {
        CHECK(e.generation() == 3);
        CHECK(std::string(e.what()).find("backend down") != std::string::npos);
    }

    Omopso shortReply(c, Bounds::unitCube(3), [](std::span<const Genotype>) { return std::vector<ObjectiveVector>{}; });
    CHECK_THROWS_AS(shortReply.run(), SearchError);
}
