#include "mocnn/experiment.hpp"

#include "mocnn/history.hpp"
#include "mocnn/worker.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

namespace mocnn {

MopsoConfig mopsoConfig(const ExperimentConfig& config)
{
    MopsoConfig m;
    m.populationSize = config.population;
    m.maxGenerations = config.generations;
    m.maxLeaders = config.leaders;
    m.epsilon = config.epsilon;
    m.seed = config.seed.value_or(0);
    return m;
}

namespace {

ExperimentResult runBenchmark(const ExperimentConfig& config)
{
    Omopso search(mopsoConfig(config), Bounds::unitCube(config.zdt1Dimensions),
                  [](std::span<const Genotype> xs) {
                      std::vector<ObjectiveVector> out;
                      out.reserve(xs.size());
                      for (const auto& x : xs) {
                          out.push_back(zdt1(x));
                      }
                      return out;
                  });
    ExperimentResult result{search.run(), {}, std::nullopt, 0};
    return result;
}

ExperimentResult runCnn(const ExperimentConfig& config)
{
    auto cache = config.cache.empty() ? EvaluationCache{} : loadCache(config.cache);
    auto evaluator = std::make_shared<SurrogateEvaluator>(config.surrogate);

    std::unique_ptr<Dispatcher> dispatcher;
    std::unique_ptr<AccuracyBackend> backend;
    if (config.evaluator == "remote" || config.inProcessWorkers > 0) {
        std::vector<std::shared_ptr<WorkerLink>> links;
        if (config.evaluator == "remote") {
            for (const auto& address : config.workers) {
                links.push_back(std::make_shared<TcpWorkerLink>(address));
            }
        } else {
            for (std::size_t i = 0; i < config.inProcessWorkers; ++i) {
                links.push_back(std::make_shared<InProcessWorker>(evaluator, WorkerOptions{},
                                                                  "in-process-" + std::to_string(i)));
            }
        }
        DispatchOptions options;
        options.probeTimeout = config.probeTimeout;
        options.resultTimeout = config.resultTimeout;
        dispatcher = std::make_unique<Dispatcher>(std::move(links), options);
        backend = std::make_unique<DispatchBackend>(*dispatcher);
    } else {
        backend = std::make_unique<LocalBackend>(evaluator);
    }

    DenseNetOptions architecture;
    architecture.bottleneck = config.bottleneck;
    CnnObjective objective(config.space, *backend, cache, config.flopsScale, architecture);
    Omopso search(mopsoConfig(config), config.space.bounds(),
                  [&](std::span<const Genotype> xs) { return objective.evaluateBatch(xs); });

    ExperimentResult result{search.run(), {}, std::nullopt, 0};
    result.counters = objective.counters();
    if (dispatcher) {
        dispatcher->shutdown();
        result.dispatch = dispatcher->stats();
    }
    result.cacheSize = cache.size();
    if (!config.cache.empty()) {
        saveCache(cache, config.cache);
    }
    return result;
}

} // namespace

ExperimentResult runExperiment(const ExperimentConfig& config)
{
    config.validate();
    auto result = config.evaluator == "zdt1" ? runBenchmark(config) : runCnn(config);
    if (!config.history.empty()) {
        exportHistory(result.run.history, config.history);
    }
    if (!config.archive.empty()) {
        exportHistory({GenerationSnapshot{config.generations, result.run.archive.entries()}}, config.archive);
    }
    return result;
}

void printArchive(std::ostream& out, const EpsilonArchive& archive, const ExperimentConfig& config)
{
    auto entries = archive.entries();
    std::sort(entries.begin(), entries.end(), [](const ArchiveEntry& a, const ArchiveEntry& b) {
        return a.objectives.negFlops() > b.objectives.negFlops();
    });
    char buf[128];
    if (config.evaluator == "zdt1") {
        out << "       f1          f2\n";
        for (const auto& e : entries) {
            std::snprintf(buf, sizeof buf, "%10.6f  %10.6f\n", -e.objectives[0], -e.objectives[1]);
            out << buf;
        }
        return;
    }
    out << "accuracy   GFLOPs      blocks (layers x growth)\n";
    for (const auto& e : entries) {
        std::snprintf(buf, sizeof buf, "%8.4f  %9.4f   ", e.objectives.accuracy(),
                      -e.objectives.negFlops() * config.flopsScale / 1e9);
        out << buf;
        const auto d = decode(e.genotype, config.space);
        for (std::size_t i = 0; i < d.blocks.size(); ++i) {
            out << (i ? " " : "") << d.blocks[i].layers << 'x' << d.blocks[i].growth;
        }
        out << '\n';
    }
}

} // namespace mocnn
