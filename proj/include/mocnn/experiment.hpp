#pragma once

#include "mocnn/config.hpp"
#include "mocnn/dispatch.hpp"
#include "mocnn/evaluation.hpp"
#include "mocnn/mopso.hpp"

#include <iosfwd>
#include <optional>

namespace mocnn {

struct ExperimentResult {
    RunResult run;
    /// Zero for benchmark runs.
    EvaluationCounters counters;
    std::optional<DispatchStats> dispatch;
    std::size_t cacheSize = 0;
};

MopsoConfig mopsoConfig(const ExperimentConfig& config);

/// Runs the configured search end to end: loads the cache, evaluates via
/// the configured backend, then writes cache, history and archive files
/// for every path that is set.
ExperimentResult runExperiment(const ExperimentConfig& config);

/// Archive as an aligned table sorted by FLOPs ascending. CNN runs show
/// FLOPs and the decoded blocks; benchmark runs show both objectives.
void printArchive(std::ostream& out, const EpsilonArchive& archive, const ExperimentConfig& config);

} // namespace mocnn
