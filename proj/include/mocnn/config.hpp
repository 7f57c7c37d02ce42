#pragma once

#include "mocnn/dominance.hpp"
#include "mocnn/encoding.hpp"
#include "mocnn/evaluation.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mocnn {

/// Invalid configuration; field() names the offending key.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& why);
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Everything one search run needs. Defaults reproduce the reference setup:
/// 4 blocks, growth 8-32, layers 4-6/4-12/4-24/4-16, eps [0.01, 0.05],
/// 300 training epochs, 20 particles for 20 generations.
struct ExperimentConfig {
    std::optional<std::uint64_t> seed;
    std::size_t population = 20;
    std::size_t generations = 20;
    std::size_t leaders = 0;
    EpsilonVector epsilon{0.01, 0.05};

    /// surrogate | zdt1 | remote
    std::string evaluator = "surrogate";
    SearchSpace space = SearchSpace::defaultSpace();
    bool bottleneck = false;
    double flopsScale = 1e9;
    SurrogateParams surrogate;
    std::size_t zdt1Dimensions = 30;

    /// Surrogate runs through this many in-process workers when > 0.
    std::size_t inProcessWorkers = 0;
    std::vector<std::string> workers;
    std::chrono::milliseconds probeTimeout{2000};
    std::chrono::milliseconds resultTimeout{24 * 3600 * 1000};

    std::filesystem::path cache;
    std::filesystem::path history;
    std::filesystem::path archive;

    /// Throws ConfigError.
    void validate() const;
};

/// Parses `key = value` lines; `#` starts a comment. Unknown keys and
/// unparsable values raise ConfigError. Call validate() on the result.
ExperimentConfig parseConfig(std::string_view text);
ExperimentConfig loadConfig(const std::filesystem::path& path);

/// MOCNN_WORKERS (comma-separated host:port list) replaces `workers`.
void applyEnvironment(ExperimentConfig& config);

/// "4-6,4-12" style list of inclusive ranges.
std::vector<IntRange> parseRanges(std::string_view text);

} // namespace mocnn
