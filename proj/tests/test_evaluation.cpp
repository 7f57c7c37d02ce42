#include "mocnn/densenet.hpp"
#include "mocnn/evaluation.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

using namespace mocnn;

namespace {

const std::vector<int> kDenseNet121{6, 32, 12, 32, 24, 32, 16, 32};

class CountingEvaluator final : public Evaluator {
public:
    AccuracyResult evaluate(const DecodedGenotype& d, const SearchSpace& space) override
    {
        ++invocations;
        if (failOn && d.key() == *failOn) {
            throw std::runtime_error("training diverged");
        }
        if (pause.count() > 0) {
            std::this_thread::sleep_for(pause);
        }
        return inner.evaluate(d, space);
    }
    std::string id() const override { return "counting"; }

    SurrogateEvaluator inner;
    std::atomic<int> invocations{0};
    std::optional<std::vector<int>> failOn;
    std::chrono::milliseconds pause{0};
};

std::filesystem::path tempPath(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("mocnn_eval_" + name);
}

TrainingCurve peakAt(int peak, int length)
{
    TrainingCurve c;
    for (int e = 1; e <= length; ++e) {
        c.perEpochAccuracy.push_back(0.5 + 0.4 * std::min(e, peak) / double(peak));
    }
    return c;
}

} // namespace

TEST_CASE("early stop on a curve peaking at 42")
{
    const auto curve = peakAt(42, 300);
    const auto r = earlyStopTrain(curve, 300, 10);
    CHECK(r.stopEpoch == 53);
    CHECK(r.bestEpoch == 42);
    CHECK(r.bestAccuracy == curve.perEpochAccuracy[41]);
}

TEST_CASE("early stop on monotone and flat curves")
{
    TrainingCurve rising;
    for (int e = 1; e <= 300; ++e) {
        rising.perEpochAccuracy.push_back(e / 301.0);
    }
    const auto r = earlyStopTrain(rising, 300);
    CHECK(r.stopEpoch == 300);
    CHECK(r.bestAccuracy == rising.perEpochAccuracy.back());

    TrainingCurve flat{std::vector<double>(300, 0.7)};
    const auto f = earlyStopTrain(flat, 300);
    CHECK(f.stopEpoch == 12);
    CHECK(f.bestEpoch == 1);
    CHECK(f.bestAccuracy == 0.7);
}

TEST_CASE("early stop errors")
{
    CHECK_THROWS_AS(earlyStopTrain(TrainingCurve{}, 300), std::invalid_argument);
    CHECK_THROWS_AS(earlyStopTrain(TrainingCurve{{0.1, 0.2}}, 3), std::invalid_argument);
}

TEST_CASE("early stop best equals the scanned maximum")
{
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int round = 0; round < 500; ++round) {
        TrainingCurve c;
        double level = 0.1;
        for (int e = 0; e < 120; ++e) {
            level = std::clamp(level + (u(gen) - 0.45) * 0.05, 0.0, 1.0);
            c.perEpochAccuracy.push_back(level);
        }
        const auto r = earlyStopTrain(c, 120, 10);
        const auto stop = static_cast<std::size_t>(r.stopEpoch);
        const double best = *std::max_element(c.perEpochAccuracy.begin(), c.perEpochAccuracy.begin() + stop);
        CHECK(r.bestAccuracy == best);
        CHECK(r.stopEpoch - r.bestEpoch <= 11);
    }
}

TEST_CASE("layer imbalance")
{
    CHECK(layerImbalance(DecodedGenotype::fromKey(kDenseNet121)) == doctest::Approx(0.0));
    const std::vector<int> even{4, 8, 4, 8, 4, 8, 4, 8};
    CHECK(layerImbalance(DecodedGenotype::fromKey(even)) == doctest::Approx(11.0 / 58.0));
    const std::vector<int> two{3, 8, 3, 8};
    CHECK(layerImbalance(DecodedGenotype::fromKey(two)) == doctest::Approx(0.0));
}

TEST_CASE("surrogate accuracy formula")
{
    const auto space = SearchSpace::defaultSpace();
    const auto d = DecodedGenotype::fromKey(kDenseNet121);
    SurrogateParams p;
    p.flopsScale = static_cast<double>(flops(expand(d, space)).total);
    CHECK(surrogateAccuracy(d, space, p) == doctest::Approx(0.60 + 0.38 * (1.0 - std::exp(-1.0))).epsilon(1e-12));
    CHECK(surrogateAccuracy(d, space, p) == doctest::Approx(0.840205812).epsilon(1e-9));

    SurrogateParams huge;
    huge.flopsScale = 1e-3;
    CHECK(surrogateAccuracy(d, space, huge) == doctest::Approx(0.98));

    SurrogateParams tiny;
    tiny.flopsScale = 1e300;
    const std::vector<int> even{4, 8, 4, 8, 4, 8, 4, 8};
    const auto e = DecodedGenotype::fromKey(even);
    CHECK(surrogateAccuracy(e, space, tiny) == doctest::Approx(0.60 - 0.04 * 11.0 / 58.0));

    SurrogateParams hot;
    hot.base = 0.9;
    hot.gain = 0.5;
    hot.flopsScale = 1e-3;
    CHECK(surrogateAccuracy(d, space, hot) == 1.0);
}

TEST_CASE("surrogate accuracy grows with cost at fixed imbalance")
{
    const auto space = SearchSpace::defaultSpace();
    double prev = 0.0;
    for (int k = 8; k <= 32; ++k) {
        const std::vector<int> key{5, k, 8, k, 16, k, 10, k};
        const double acc = surrogateAccuracy(DecodedGenotype::fromKey(key), space);
        CHECK(acc >= prev);
        prev = acc;
    }
}

TEST_CASE("surrogate evaluator returns the formula value")
{
    const auto space = SearchSpace::defaultSpace();
    SurrogateEvaluator ev;
    const auto d = DecodedGenotype::fromKey(kDenseNet121);
    const auto r = ev.evaluate(d, space);
    CHECK(r.accuracy == surrogateAccuracy(d, space));
    CHECK(r.bestEpoch >= 1);
    CHECK(r.bestEpoch <= 300);
    CHECK(ev.id() == "surrogate");

    const auto curve = surrogateTrainingCurve(d, space);
    CHECK(curve.perEpochAccuracy.size() == 300);
    CHECK(*std::max_element(curve.perEpochAccuracy.begin(), curve.perEpochAccuracy.end()) == r.accuracy);

    const std::vector<int> small{4, 8, 4, 8, 4, 8, 4, 8};
    CHECK(ev.evaluate(DecodedGenotype::fromKey(small), space).bestEpoch < r.bestEpoch);
}

TEST_CASE("zdt1")
{
    std::vector<double> x(30, 0.0);
    CHECK(zdt1(x) == ObjectiveVector{-0.0, -1.0});
    x[0] = 1.0;
    CHECK(zdt1(x)[0] == -1.0);
    CHECK(zdt1(x)[1] == doctest::Approx(0.0));
    x[0] = 0.25;
    CHECK(zdt1(x)[1] == doctest::Approx(-0.5));

    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        x[0] = u(gen);
        const auto f = zdt1(x);
        CHECK(-f[1] == doctest::Approx(1.0 - std::sqrt(-f[0])).epsilon(1e-15));
    }
    x[5] = 0.5;
    CHECK(-zdt1(x)[1] > 1.0 - std::sqrt(x[0]));

    x[3] = 1.5;
    CHECK_THROWS_AS(zdt1(x), std::invalid_argument);
    CHECK_THROWS_AS(zdt1(std::vector<double>{0.5}), std::invalid_argument);
}

TEST_CASE("cache record text")
{
    const EvaluationRecord r{{6, 32, 12, 32}, 0.1 + 0.2, 41, "surrogate"};
    const auto line = formatRecord(r);
    CHECK(line == "6,32,12,32\t0.30000000000000004\t41\tsurrogate");
    CHECK(parseRecord(line) == r);
    CHECK_THROWS_AS(parseRecord("6,32\tnot-a-number\t4\tx"), std::invalid_argument);
    CHECK_THROWS_AS(parseRecord("6,32\t0.5\t4"), std::invalid_argument);
    CHECK_THROWS_AS(parseRecord("6,x\t0.5\t4\ts"), std::invalid_argument);
}

TEST_CASE("cache save and load")
{
    const auto path = tempPath("roundtrip.tsv");
    std::filesystem::remove(path);
    CHECK(loadCache(path).size() == 0);

    EvaluationCache cache;
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        cache.insert({{i, i % 7 + 8, i * 3, 32}, u(gen), i + 1, i % 2 ? "surrogate" : "remote"});
    }
    saveCache(cache, path);
    const auto back = loadCache(path);
    CHECK(back.records() == cache.records());
    CHECK(back.size() == 100);
    std::filesystem::remove(path);
}

TEST_CASE("corrupt cache names the line")
{
    const auto path = tempPath("corrupt.tsv");
    {
        std::ofstream out(path);
        out << "4,8\t0.5\t3\tsurrogate\n";
        out << "5,8\t0.6\t3\tsurrogate\n";
        out << "garbage line\n";
    }
    try {
        loadCache(path);
        FAIL("expected CacheCorrupt");
    } catch (const CacheCorrupt& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("objective consults the cache before the evaluator")
{
    auto ev = std::make_shared<CountingEvaluator>();
    LocalBackend backend(ev);
    EvaluationCache cache;
    const auto space = SearchSpace::defaultSpace();
    CnnObjective objective(space, backend, cache);

    const Genotype g{6, 32, 12, 32, 24, 32, 16, 32};
    const auto first = objective.evaluate(g);
    const auto second = objective.evaluate(g);
    CHECK(ev->invocations == 1);
    CHECK(first == second);
    const auto d = DecodedGenotype::fromKey(kDenseNet121);
    CHECK(first.accuracy() == surrogateAccuracy(d, space));
    CHECK(first.negFlops() == doctest::Approx(-3.01010688));

    // (5.4, ...) and (4.6, ...) both decode to 5 layers
    const Genotype a{5.4, 20.2, 8, 16, 10, 16, 8, 16};
    const Genotype b{4.6, 19.6, 8, 16, 10, 16, 8, 16};
    objective.evaluate(a);
    objective.evaluate(b);
    CHECK(ev->invocations == 2);

    const auto c = objective.counters();
    CHECK(c.calls == 4);
    CHECK(c.cacheHits == 2);
    CHECK(c.evaluatorInvocations == 2);
    CHECK(c.calls == c.cacheHits + c.evaluatorInvocations);
    CHECK(cache.find(kDenseNet121)->evaluatorId == "counting");
}

TEST_CASE("batch with duplicates evaluates each key once")
{
    auto ev = std::make_shared<CountingEvaluator>();
    LocalBackend backend(ev, 3);
    EvaluationCache cache;
    CnnObjective objective(SearchSpace::defaultSpace(), backend, cache);

    std::vector<Genotype> batch;
    for (int i = 0; i < 20; ++i) {
        batch.push_back({4.0 + i % 3, 8.0 + (i % 5), 4, 8, 4, 8, 4, 8});
    }
    const auto out = objective.evaluateBatch(batch);
    CHECK(ev->invocations == 15);
    REQUIRE(out.size() == 20);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        CHECK(out[i] == objective.evaluate(batch[i]));
    }
    CHECK(ev->invocations == 15);
    const auto c = objective.counters();
    CHECK(c.calls == c.cacheHits + c.evaluatorInvocations);
}

TEST_CASE("evaluator failure is reported with its genotype")
{
    auto ev = std::make_shared<CountingEvaluator>();
    const std::vector<int> bad{5, 9, 4, 8, 4, 8, 4, 8};
    ev->failOn = bad;
    LocalBackend backend(ev);
    EvaluationCache cache;
    CnnObjective objective(SearchSpace::defaultSpace(), backend, cache);
    try {
        objective.evaluate({5, 9, 4, 8, 4, 8, 4, 8});
        FAIL("expected EvaluationFailed");
    } catch (const EvaluationFailed& e) {
        CHECK(e.key() == bad);
        CHECK(std::string(e.what()).find("training diverged") != std::string::npos);
    }
    CHECK_FALSE(cache.find(bad).has_value());
    ev->failOn.reset();
    CHECK_NOTHROW(objective.evaluate({5, 9, 4, 8, 4, 8, 4, 8}));
    CHECK(cache.find(bad).has_value());
}

TEST_CASE("concurrent requests for one key evaluate it once")
{
    auto ev = std::make_shared<CountingEvaluator>();
    ev->pause = std::chrono::milliseconds(20);
    LocalBackend backend(ev);
    EvaluationCache cache;
    CnnObjective objective(SearchSpace::defaultSpace(), backend, cache);
    std::vector<std::thread> threads;
    std::vector<ObjectiveVector> results(8);
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] { results[static_cast<std::size_t>(t)] = objective.evaluate({6, 20, 9, 20, 12, 20, 8, 20}); });
    }
    for (auto& t : threads) {
        t.join();
    }
    CHECK(ev->invocations == 1);
    for (const auto& r : results) {
        CHECK(r == results.front());
    }
}

TEST_CASE("free evaluate function")
{
    auto ev = std::make_shared<CountingEvaluator>();
    LocalBackend backend(ev);
    EvaluationCache cache;
    const auto space = SearchSpace::defaultSpace();
    const auto v = evaluate({6, 32, 12, 32, 24, 32, 16, 32}, space, backend, cache);
    evaluate({6, 32, 12, 32, 24, 32, 16, 32}, space, backend, cache);
    CHECK(ev->invocations == 1);
    CHECK(v.negFlops() == doctest::Approx(-3.01010688));
}
