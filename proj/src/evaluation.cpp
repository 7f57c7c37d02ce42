#include "mocnn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

namespace mocnn {

namespace {

std::string keyText(const std::vector<int>& key)
{
    std::string s = "[";
    for (std::size_t i = 0; i < key.size(); ++i) {
        s += (i ? "," : "") + std::to_string(key[i]);
    }
    return s + "]";
}

std::vector<double> referenceFor(const DecodedGenotype& d, const SurrogateParams& params)
{
    const auto blocks = d.blocks.size();
    if (!params.referenceProportions.empty()) {
        if (params.referenceProportions.size() != blocks) {
            throw std::invalid_argument("reference proportions do not match the number of blocks");
        }
        return params.referenceProportions;
    }
    if (blocks == 4) {
        return {6.0, 12.0, 24.0, 16.0};
    }
    return std::vector<double>(blocks, 1.0);
}

} // namespace

EarlyStopResult earlyStopTrain(const TrainingCurve& curve, int maxEpochs, int patience)
{
    const auto& acc = curve.perEpochAccuracy;
    if (acc.empty()) {
        throw std::invalid_argument("training curve is empty");
    }
    if (maxEpochs < 1 || static_cast<std::size_t>(maxEpochs) > acc.size()) {
        throw std::invalid_argument("maxEpochs must lie in [1, curve length]");
    }

    EarlyStopResult r;
    for (int epoch = 1; epoch <= maxEpochs; ++epoch) {
        const double a = acc[static_cast<std::size_t>(epoch - 1)];
        if (a > r.bestAccuracy) {
            r.bestAccuracy = a;
            r.bestEpoch = epoch;
        } else if (epoch - r.bestEpoch > patience) {
            r.stopEpoch = epoch;
            return r;
        }
    }
    r.stopEpoch = maxEpochs;
    return r;
}

double layerImbalance(const DecodedGenotype& d, const SurrogateParams& params)
{
    const auto ref = referenceFor(d, params);
    const double refTotal = std::accumulate(ref.begin(), ref.end(), 0.0);
    double total = 0.0;
    for (const auto& b : d.blocks) {
        total += b.layers;
    }
    if (total <= 0.0 || refTotal <= 0.0) {
        return 0.0;
    }
    double distance = 0.0;
    for (std::size_t b = 0; b < d.blocks.size(); ++b) {
        distance += std::abs(d.blocks[b].layers / total - ref[b] / refTotal);
    }
    return std::clamp(0.5 * distance, 0.0, 1.0);
}

double surrogateAccuracy(const DecodedGenotype& d, const SearchSpace& space, const SurrogateParams& params)
{
    const auto f = static_cast<double>(flops(expand(d, space, params.architecture)).total);
    const double acc = params.base + params.gain * (1.0 - std::exp(-f / params.flopsScale))
                       - params.penalty * layerImbalance(d, params);
    return std::clamp(acc, 0.0, 1.0);
}

TrainingCurve surrogateTrainingCurve(const DecodedGenotype& d, const SearchSpace& space,
                                     const SurrogateParams& params)
{
    const double target = surrogateAccuracy(d, space, params);
    const auto f = static_cast<double>(flops(expand(d, space, params.architecture)).total);
    const int epochs = std::max(params.maxEpochs, 1);
    const double share = 0.1 + 0.6 * (1.0 - std::exp(-f / params.flopsScale));
    const int converge = std::clamp(static_cast<int>(std::lround(share * epochs)), 1, epochs);

    TrainingCurve curve;
    curve.perEpochAccuracy.resize(static_cast<std::size_t>(epochs));
    for (int e = 1; e <= epochs; ++e) {
        curve.perEpochAccuracy[static_cast<std::size_t>(e - 1)]
            = e >= converge ? target : target * static_cast<double>(e) / converge;
    }
    return curve;
}

AccuracyResult SurrogateEvaluator::evaluate(const DecodedGenotype& d, const SearchSpace& space)
{
    const auto curve = surrogateTrainingCurve(d, space, params_);
    const auto stop = earlyStopTrain(curve, static_cast<int>(curve.perEpochAccuracy.size()), params_.patience);
    return {surrogateAccuracy(d, space, params_), stop.bestEpoch};
}

ObjectiveVector zdt1(std::span<const double> x)
{
    if (x.size() < 2) {
        throw std::invalid_argument("zdt1 needs at least two variables");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] >= 0.0 && x[i] <= 1.0)) {
            throw std::invalid_argument("zdt1 coordinate " + std::to_string(i) + " is outside [0, 1]");
        }
    }
    const double f1 = x[0];
    const double tail = std::accumulate(x.begin() + 1, x.end(), 0.0);
    const double g = 1.0 + 9.0 * tail / static_cast<double>(x.size() - 1);
    const double f2 = g * (1.0 - std::sqrt(f1 / g));
    return {-f1, -f2};
}

CacheCorrupt::CacheCorrupt(const std::filesystem::path& path, std::size_t line, const std::string& why)
    : std::runtime_error(path.string() + ":" + std::to_string(line) + ": corrupt cache record: " + why), line_(line)
{
}

EvaluationFailed::EvaluationFailed(std::vector<int> key, const std::string& why)
    : std::runtime_error("evaluation of " + keyText(key) + " failed: " + why), key_(std::move(key))
{
}

LocalBackend::LocalBackend(std::shared_ptr<Evaluator> evaluator, std::size_t threads)
    : evaluator_(std::move(evaluator)), threads_(std::max<std::size_t>(threads, 1))
{
    if (!evaluator_) {
        throw std::invalid_argument("local backend needs an evaluator");
    }
}

std::vector<AccuracyResult> LocalBackend::evaluateBatch(std::span<const DecodedGenotype> batch,
                                                        const SearchSpace& space)
{
    std::vector<AccuracyResult> out(batch.size());
    const auto workers = std::min(threads_, batch.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < batch.size(); ++i) {
            out[i] = evaluator_->evaluate(batch[i], space);
        }
        return out;
    }

    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < batch.size(); i += workers) {
                        out[i] = evaluator_->evaluate(batch[i], space);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return out;
}

CnnObjective::CnnObjective(SearchSpace space, AccuracyBackend& backend, EvaluationCache& cache, double flopsScale,
                           DenseNetOptions architecture)
    : space_(std::move(space)), backend_(backend), cache_(cache), flopsScale_(flopsScale),
      architecture_(architecture)
{
    space_.validate();
    if (!(flopsScale_ > 0.0)) {
        throw std::invalid_argument("FLOPs scale must be positive");
    }
}

double CnnObjective::negFlops(const DecodedGenotype& d) const
{
    return -(static_cast<double>(flops(expand(d, space_, architecture_)).total) / flopsScale_);
}

ObjectiveVector CnnObjective::evaluate(const Genotype& g)
{
    return evaluateBatch(std::span<const Genotype>(&g, 1)).front();
}

std::vector<ObjectiveVector> CnnObjective::evaluateBatch(std::span<const Genotype> positions)
{
    std::vector<DecodedGenotype> decoded;
    decoded.reserve(positions.size());
    for (const auto& g : positions) {
        decoded.push_back(decode(g, space_));
    }

    std::map<std::vector<int>, std::optional<EvaluationRecord>> known;
    std::vector<DecodedGenotype> missing;
    std::vector<std::vector<int>> claimed;
    for (const auto& d : decoded) {
        auto key = d.key();
        if (known.contains(key)) {
            continue;
        }
        auto record = cache_.findOrClaim(key);
        if (!record) {
            claimed.push_back(key);
            missing.push_back(d);
        }
        known.emplace(std::move(key), std::move(record));
    }

    std::vector<AccuracyResult> fresh;
    if (!missing.empty()) {
        try {
            fresh = backend_.evaluateBatch(missing, space_);
            if (fresh.size() != missing.size()) {
                throw std::runtime_error("backend returned " + std::to_string(fresh.size()) + " results for "
                                         + std::to_string(missing.size()) + " requests");
            }
        } catch (const std::exception& e) {
            for (const auto& k : claimed) {
                cache_.abandon(k);
            }
            throw EvaluationFailed(claimed.front(), e.what());
        }
    }
    for (std::size_t i = 0; i < missing.size(); ++i) {
        EvaluationRecord rec{claimed[i], fresh[i].accuracy, fresh[i].bestEpoch, backend_.id()};
        cache_.fulfill(rec);
        known[claimed[i]] = std::move(rec);
    }

    calls_ += positions.size();
    invocations_ += missing.size();
    hits_ += positions.size() - missing.size();

    std::vector<ObjectiveVector> out;
    out.reserve(decoded.size());
    for (const auto& d : decoded) {
        out.push_back({known.at(d.key())->accuracy, negFlops(d)});
    }
    return out;
}

EvaluationCounters CnnObjective::counters() const
{
    return {calls_.load(), hits_.load(), invocations_.load()};
}

ObjectiveVector evaluate(const Genotype& g, const SearchSpace& space, AccuracyBackend& backend,
                         EvaluationCache& cache, double flopsScale)
{
    CnnObjective objective(space, backend, cache, flopsScale);
    return objective.evaluate(g);
}

} // namespace mocnn
