#include "mocnn/config.hpp"
#include "mocnn/densenet.hpp"
#include "mocnn/experiment.hpp"
#include "mocnn/history.hpp"
#include "mocnn/worker.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

namespace {

std::atomic<bool> g_stop{false};

void onSignal(int)
{
    g_stop = true;
}

int runSearch(const std::string& configPath, bool quiet)
{
    mocnn::ExperimentConfig config;
    try {
        config = mocnn::loadConfig(configPath);
        mocnn::applyEnvironment(config);
        config.validate();
    } catch (const mocnn::ConfigError& e) {
        std::cerr << "invalid config: " << e.what() << '\n';
        return 2;
    }
    const auto result = mocnn::runExperiment(config);
    std::cout << "generations " << result.run.history.size() << ", evaluations " << result.run.evaluations;
    if (config.evaluator != "zdt1") {
        std::cout << ", evaluator invocations " << result.counters.evaluatorInvocations << ", cache hits "
                  << result.counters.cacheHits;
    }
    std::cout << "\nfinal epsilon archive (" << result.run.archive.size() << " members)\n";
    if (!quiet) {
        mocnn::printArchive(std::cout, result.run.archive, config);
    }
    return 0;
}

int runWorker(const std::string& bind, const std::string& evaluatorName, long delayMs, const std::string& configPath)
{
    mocnn::SurrogateParams params;
    if (!configPath.empty()) {
        try {
            params = mocnn::loadConfig(configPath).surrogate;
        } catch (const mocnn::ConfigError& e) {
            std::cerr << "invalid config: " << e.what() << '\n';
            return 2;
        }
    }
    if (evaluatorName != "surrogate") {
        std::cerr << "unknown evaluator '" << evaluatorName << "'\n";
        return 2;
    }
    mocnn::WorkerOptions options;
    options.delay = std::chrono::milliseconds(delayMs);
    mocnn::WorkerServer server(bind, std::make_shared<mocnn::SurrogateEvaluator>(params), options);
    server.start();
    std::cout << "worker listening on " << server.address() << std::endl;

    std::signal(SIGINT, onSignal);
    std::signal(SIGTERM, onSignal);
    while (!g_stop) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    server.stop();
    return 0;
}

int runFlops(const std::vector<int>& key, const std::string& input, int classes, bool bottleneck, bool perLayer)
{
    if (key.empty() || key.size() % 2 != 0) {
        std::cerr << "genotype must be layers,growth pairs\n";
        return 2;
    }
    auto config = mocnn::parseConfig("seed = 0\ninput = " + input + "\n");
    auto space = config.space;
    space.numClasses = classes;
    space.layerRange.clear();
    space.growthRange.clear();
    for (std::size_t i = 0; i < key.size(); i += 2) {
        space.layerRange.push_back({key[i], key[i]});
        space.growthRange.push_back({key[i + 1], key[i + 1]});
    }
    mocnn::DenseNetOptions options;
    options.bottleneck = bottleneck;
    const auto arch = mocnn::expand(mocnn::DecodedGenotype::fromKey(key), space, options);
    const auto breakdown = mocnn::flops(arch);

    if (perLayer) {
        std::printf("%-5s %-16s %6s %6s %3s %9s %16s\n", "idx", "kind", "in", "out", "k", "HxW", "flops");
        for (const auto& lf : breakdown.perLayer) {
            const auto& l = arch.layers[lf.layerIndex];
            const auto hw = std::to_string(l.inHeight) + "x" + std::to_string(l.inWidth);
            std::printf("%-5zu %-16s %6d %6d %3d %9s %16llu\n", lf.layerIndex, std::string(mocnn::layerKindName(l.kind)).c_str(),
                        l.inChannels, l.outChannels, l.kernel, hw.c_str(),
                        static_cast<unsigned long long>(lf.flops));
        }
    }
    std::printf("layers %zu\nflops %llu\nparams %llu\n", arch.layers.size(),
                static_cast<unsigned long long>(breakdown.total), static_cast<unsigned long long>(breakdown.params));
    return 0;
}

int runFront(const std::string& historyPath, long generation, const std::string& outPath)
{
    const auto rows = mocnn::loadHistory(historyPath);
    std::vector<mocnn::HistoryRow> selected;
    if (generation < 0) {
        selected = mocnn::lastGeneration(rows);
    } else {
        for (const auto& r : rows) {
            if (r.generation == static_cast<std::size_t>(generation)) {
                selected.push_back(r);
            }
        }
    }
    if (outPath.empty() || outPath == "-") {
        mocnn::writeRows(std::cout, selected);
        return 0;
    }
    std::ofstream out(outPath);
    if (!out) {
        std::cerr << "cannot write " << outPath << '\n';
        return 1;
    }
    mocnn::writeRows(out, selected);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multi-objective particle-swarm search over DenseNet-style architectures"};
    app.require_subcommand(1);

    auto* search = app.add_subcommand("search", "run a search experiment from a config file");
    std::string configPath;
    bool quiet = false;
    search->add_option("config", configPath, "config file")->required();
    search->add_flag("-q,--quiet", quiet, "do not print the archive");

    auto* worker = app.add_subcommand("worker", "serve evaluations over TCP");
    std::string bind = "127.0.0.1:5555";
    std::string evaluatorName = "surrogate";
    long delayMs = 0;
    std::string workerConfig;
    worker->add_option("--bind", bind, "host:port to listen on (port 0 picks one)")->capture_default_str();
    worker->add_option("--evaluator", evaluatorName, "evaluator to run")->capture_default_str();
    worker->add_option("--delay-ms", delayMs, "artificial delay per evaluation")->check(CLI::NonNegativeNumber);
    worker->add_option("--config", workerConfig, "config file supplying surrogate parameters");

    auto* flopsCmd = app.add_subcommand("flops", "print FLOPs and parameters of a genotype");
    std::vector<int> key;
    std::string input = "32x32x3";
    int classes = 10;
    bool bottleneck = false;
    bool perLayer = false;
    flopsCmd->add_option("genotype", key, "layers,growth per block, e.g. 6,32,12,32,24,32,16,32")
        ->required()
        ->delimiter(',');
    flopsCmd->add_option("--input", input, "HxWxC")->capture_default_str();
    flopsCmd->add_option("--classes", classes)->capture_default_str();
    flopsCmd->add_flag("--bottleneck", bottleneck, "1x1 bottleneck before each 3x3 layer");
    flopsCmd->add_flag("--per-layer", perLayer, "print every layer");

    auto* front = app.add_subcommand("front", "re-export one generation of a history file");
    std::string historyPath;
    long generation = -1;
    std::string outPath;
    front->add_option("history", historyPath, "history file")->required()->check(CLI::ExistingFile);
    front->add_option("-g,--generation", generation, "generation to export (default: last)");
    front->add_option("-o,--output", outPath, "output file (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*search) {
            return runSearch(configPath, quiet);
        }
        if (*worker) {
            return runWorker(bind, evaluatorName, delayMs, workerConfig);
        }
        if (*flopsCmd) {
            return runFlops(key, input, classes, bottleneck, perLayer);
        }
        if (*front) {
            return runFront(historyPath, generation, outPath);
        }
    } catch (const mocnn::ConfigError& e) {
        std::cerr << "invalid config: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
