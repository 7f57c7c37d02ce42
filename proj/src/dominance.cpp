#include "mocnn/dominance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mocnn {

bool dominates(const ObjectiveVector& a, const ObjectiveVector& b)
{
    bool strictly = false;
    for (std::size_t i = 0; i < ObjectiveVector::size(); ++i) {
        if (a[i] < b[i]) {
            return false;
        }
        strictly = strictly || a[i] > b[i];
    }
    return strictly;
}

std::vector<std::size_t> paretoFilter(std::span<const ObjectiveVector> points)
{
    // Sweep in decreasing first objective. A point survives iff it has the
    // largest second objective among points tied on the first, and that value
    // beats everything seen at a strictly larger first objective.
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        if (points[l][0] != points[r][0]) {
            return points[l][0] > points[r][0];
        }
        return points[l][1] > points[r][1];
    });

    std::vector<std::size_t> kept;
    double bestSecond = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        const double first = points[order[i]][0];
        while (j < order.size() && points[order[j]][0] == first) {
            ++j;
        }
        const double groupBest = points[order[i]][1];
        if (groupBest > bestSecond) {
            for (std::size_t k = i; k < j && points[order[k]][1] == groupBest; ++k) {
                kept.push_back(order[k]);
            }
        }
        bestSecond = std::max(bestSecond, groupBest);
        i = j;
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

EpsilonBox epsilonBox(const ObjectiveVector& x, const EpsilonVector& eps)
{
    EpsilonBox box{};
    for (std::size_t i = 0; i < ObjectiveVector::size(); ++i) {
        if (!(eps[i] > 0.0)) {
            throw std::invalid_argument("epsilon components must be positive");
        }
        box[i] = static_cast<std::int64_t>(std::floor(x[i] / eps[i]));
    }
    return box;
}

bool epsilonDominates(const ObjectiveVector& a, const ObjectiveVector& b, const EpsilonVector& eps)
{
    const auto ba = epsilonBox(a, eps);
    const auto bb = epsilonBox(b, eps);
    bool differs = false;
    for (std::size_t i = 0; i < ba.size(); ++i) {
        if (ba[i] < bb[i]) {
            return false;
        }
        differs = differs || ba[i] != bb[i];
    }
    return differs;
}

double cornerDistance(const ObjectiveVector& x, const EpsilonVector& eps)
{
    const auto box = epsilonBox(x, eps);
    double sum = 0.0;
    for (std::size_t i = 0; i < box.size(); ++i) {
        const double gap = static_cast<double>(box[i] + 1) * eps[i] - x[i];
        sum += gap * gap;
    }
    return std::sqrt(sum);
}

std::vector<double> crowdingDistances(std::span<const ObjectiveVector> front)
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    const std::size_t n = front.size();
    std::vector<double> distance(n, 0.0);
    if (n <= 2) {
        std::fill(distance.begin(), distance.end(), inf);
        return distance;
    }

    std::vector<std::size_t> order(n);
    for (std::size_t m = 0; m < ObjectiveVector::size(); ++m) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t l, std::size_t r) { return front[l][m] < front[r][m]; });
        distance[order.front()] = inf;
        distance[order.back()] = inf;
        const double range = front[order.back()][m] - front[order.front()][m];
        if (range <= 0.0) {
            continue;
        }
        for (std::size_t k = 1; k + 1 < n; ++k) {
            distance[order[k]] += (front[order[k + 1]][m] - front[order[k - 1]][m]) / range;
        }
    }
    return distance;
}

EpsilonArchive::EpsilonArchive(EpsilonVector epsilon) : epsilon_(epsilon)
{
    for (double e : epsilon_) {
        if (!(e > 0.0)) {
            throw std::invalid_argument("epsilon components must be positive");
        }
    }
}

InsertOutcome EpsilonArchive::insert(ArchiveEntry candidate)
{
    const auto candBox = epsilonBox(candidate.objectives, epsilon_);
    const double candDist = cornerDistance(candidate.objectives, epsilon_);

    for (const auto& e : entries_) {
        if (epsilonDominates(e.objectives, candidate.objectives, epsilon_)) {
            return {};
        }
        if (epsilonBox(e.objectives, epsilon_) == candBox && cornerDistance(e.objectives, epsilon_) <= candDist) {
            return {};
        }
    }

    const auto before = entries_.size();
    std::erase_if(entries_, [&](const ArchiveEntry& e) {
        return epsilonDominates(candidate.objectives, e.objectives, epsilon_)
               || epsilonBox(e.objectives, epsilon_) == candBox;
    });
    const auto evicted = before - entries_.size();
    entries_.push_back(std::move(candidate));
    return {true, evicted};
}

void LeaderArchive::recomputeCrowding()
{
    std::vector<ObjectiveVector> objs;
    objs.reserve(entries.size());
    for (const auto& e : entries) {
        objs.push_back(e.objectives);
    }
    const auto crowding = crowdingDistances(objs);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        entries[i].crowding = crowding[i];
    }
}

LeaderArchive truncateLeaders(LeaderArchive archive)
{
    archive.recomputeCrowding();
    while (archive.entries.size() > archive.maxSize) {
        const auto worst = std::min_element(archive.entries.begin(), archive.entries.end(),
                                            [](const LeaderEntry& l, const LeaderEntry& r) {
                                                return l.crowding < r.crowding;
                                            });
        archive.entries.erase(worst);
        archive.recomputeCrowding();
    }
    return archive;
}

} // namespace mocnn
