#pragma once

#include "mocnn/densenet.hpp"
#include "mocnn/dominance.hpp"
#include "mocnn/encoding.hpp"

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mocnn {

struct AccuracyResult {
    double accuracy = 0.0;
    int bestEpoch = 0;
};

/// Produces the accuracy of one architecture. Implementations must be pure
/// in the genotype: the cache relies on it.
class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual AccuracyResult evaluate(const DecodedGenotype& d, const SearchSpace& space) = 0;
    virtual std::string id() const = 0;
};

// ---------------------------------------------------------------------------
// Training curves

struct TrainingCurve {
    /// perEpochAccuracy[e - 1] is the test accuracy after epoch e.
    std::vector<double> perEpochAccuracy;
};

struct EarlyStopResult {
    double bestAccuracy = 0.0;
    int bestEpoch = 1;
    int stopEpoch = 0;
};

/// Replays a curve under the patience rule: the best accuracy and its epoch
/// are tracked, and training stops once an epoch trails the best by more
/// than `patience` epochs, or at maxEpochs. Epochs are 1-based.
EarlyStopResult earlyStopTrain(const TrainingCurve& curve, int maxEpochs, int patience = 10);

// ---------------------------------------------------------------------------
// Surrogate accuracy

struct SurrogateParams {
    double base = 0.60;
    double gain = 0.38;
    double penalty = 0.04;
    /// FLOPs at which the saturating term reaches 1 - 1/e.
    double flopsScale = 1e9;
    /// Target layer-count proportions per block. Empty means the DenseNet-121
    /// proportions 6:12:24:16 for four blocks, uniform otherwise.
    std::vector<double> referenceProportions;
    /// Epoch budget of the simulated training curve.
    int maxEpochs = 300;
    int patience = 10;
    DenseNetOptions architecture;
};

/// Total-variation distance between the genotype's layer proportions and
/// the reference proportions; lies in [0, 1].
double layerImbalance(const DecodedGenotype& d, const SurrogateParams& params = {});

/// base + gain * (1 - exp(-flops / flopsScale)) - penalty * imbalance, clipped to [0, 1].
double surrogateAccuracy(const DecodedGenotype& d, const SearchSpace& space, const SurrogateParams& params = {});

/// Synthetic training curve that climbs linearly to the surrogate accuracy
/// and then plateaus. Larger networks take longer to converge.
TrainingCurve surrogateTrainingCurve(const DecodedGenotype& d, const SearchSpace& space,
                                     const SurrogateParams& params = {});

/// Desk-scale stand-in for training: returns surrogateAccuracy exactly, with
/// bestEpoch taken from early-stopping the synthetic curve.
class SurrogateEvaluator final : public Evaluator {
public:
    explicit SurrogateEvaluator(SurrogateParams params = {}) : params_(std::move(params)) {}

    AccuracyResult evaluate(const DecodedGenotype& d, const SearchSpace& space) override;
    std::string id() const override { return "surrogate"; }
    const SurrogateParams& params() const { return params_; }

private:
    SurrogateParams params_;
};

// ---------------------------------------------------------------------------
// Benchmarks

/// ZDT1 on [0,1]^n, returned as (-f1, -f2) so both slots are maximized.
/// Throws std::invalid_argument for coordinates outside [0, 1].
ObjectiveVector zdt1(std::span<const double> x);

// ---------------------------------------------------------------------------
// Memoization

struct EvaluationRecord {
    std::vector<int> key;
    double accuracy = 0.0;
    int bestEpoch = 0;
    std::string evaluatorId;

    friend bool operator==(const EvaluationRecord&, const EvaluationRecord&) = default;
};

class CacheCorrupt : public std::runtime_error {
public:
    CacheCorrupt(const std::filesystem::path& path, std::size_t line, const std::string& why);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class EvaluationFailed : public std::runtime_error {
public:
    EvaluationFailed(std::vector<int> key, const std::string& why);
    const std::vector<int>& key() const { return key_; }

private:
    std::vector<int> key_;
};

/// Accuracy records keyed by decoded genotype.
///
/// Thread-safe. A key may be claimed by one caller at a time; other callers
/// asking for the same key block until the claim is fulfilled or abandoned,
/// so each key is evaluated at most once.
class EvaluationCache {
public:
    EvaluationCache() = default;
    EvaluationCache(const EvaluationCache& other);
    EvaluationCache& operator=(const EvaluationCache& other);

    std::optional<EvaluationRecord> find(const std::vector<int>& key) const;

    /// Returns the record if present (waiting out any in-flight claim);
    /// otherwise claims the key and returns nullopt. A claimant must call
    /// fulfill() or abandon().
    std::optional<EvaluationRecord> findOrClaim(const std::vector<int>& key);
    void fulfill(EvaluationRecord record);
    void abandon(const std::vector<int>& key);

    void insert(EvaluationRecord record);
    std::vector<EvaluationRecord> records() const;
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::condition_variable released_;
    std::map<std::vector<int>, EvaluationRecord> records_;
    std::set<std::vector<int>> inFlight_;
};

/// One record per line: comma-joined key, accuracy, bestEpoch, evaluator id,
/// tab separated. A missing file loads as an empty cache.
EvaluationCache loadCache(const std::filesystem::path& path);
void saveCache(const EvaluationCache& cache, const std::filesystem::path& path);

std::string formatRecord(const EvaluationRecord& record);
EvaluationRecord parseRecord(std::string_view line);

// ---------------------------------------------------------------------------
// Accuracy backends

/// Evaluates a batch of distinct architectures; results are index-aligned.
class AccuracyBackend {
public:
    virtual ~AccuracyBackend() = default;
    virtual std::vector<AccuracyResult> evaluateBatch(std::span<const DecodedGenotype> batch,
                                                      const SearchSpace& space) = 0;
    virtual std::string id() const = 0;
};

/// Runs an Evaluator in-process, optionally across a few threads.
class LocalBackend final : public AccuracyBackend {
public:
    explicit LocalBackend(std::shared_ptr<Evaluator> evaluator, std::size_t threads = 1);

    std::vector<AccuracyResult> evaluateBatch(std::span<const DecodedGenotype> batch,
                                              const SearchSpace& space) override;
    std::string id() const override { return evaluator_->id(); }

private:
    std::shared_ptr<Evaluator> evaluator_;
    std::size_t threads_;
};

struct EvaluationCounters {
    std::size_t calls = 0;
    std::size_t cacheHits = 0;
    std::size_t evaluatorInvocations = 0;
};

/// Architecture-search objective: memoized accuracy plus analytic FLOPs.
///
/// A batch is decoded, served from the cache where possible, and every
/// distinct missing key goes to the backend in a single call.
class CnnObjective {
public:
    CnnObjective(SearchSpace space, AccuracyBackend& backend, EvaluationCache& cache, double flopsScale = 1e9,
                 DenseNetOptions architecture = {});

    ObjectiveVector evaluate(const Genotype& g);
    std::vector<ObjectiveVector> evaluateBatch(std::span<const Genotype> positions);

    /// negFlops for a decoded genotype: -(FLOPs / flopsScale).
    double negFlops(const DecodedGenotype& d) const;

    EvaluationCounters counters() const;
    const SearchSpace& space() const { return space_; }

private:
    SearchSpace space_;
    AccuracyBackend& backend_;
    EvaluationCache& cache_;
    double flopsScale_;
    DenseNetOptions architecture_;
    std::atomic<std::size_t> calls_{0};
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> invocations_{0};
};

/// Single-genotype convenience over CnnObjective's contract.
ObjectiveVector evaluate(const Genotype& g, const SearchSpace& space, AccuracyBackend& backend,
                         EvaluationCache& cache, double flopsScale = 1e9);

} // namespace mocnn
