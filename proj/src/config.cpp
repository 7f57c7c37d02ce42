#include "mocnn/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace mocnn {

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> splitList(std::string_view s, char sep = ',')
{
    std::vector<std::string_view> parts;
    while (true) {
        const auto at = s.find(sep);
        parts.push_back(trim(s.substr(0, at)));
        if (at == std::string_view::npos) {
            return parts;
        }
        s.remove_prefix(at + 1);
    }
}

template <typename T>
std::optional<T> parseNumber(std::string_view s)
{
    s = trim(s);
    T value{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty()) {
        return std::nullopt;
    }
    return value;
}

template <typename T>
T number(const std::string& key, std::string_view s)
{
    const auto v = parseNumber<T>(s);
    if (!v) {
        throw ConfigError(key, "'" + std::string(s) + "' is not a valid number");
    }
    return *v;
}

bool boolean(const std::string& key, std::string_view s)
{
    if (s == "true" || s == "yes" || s == "on" || s == "1") {
        return true;
    }
    if (s == "false" || s == "no" || s == "off" || s == "0") {
        return false;
    }
    throw ConfigError(key, "'" + std::string(s) + "' is not a boolean");
}

std::vector<IntRange> ranges(const std::string& key, std::string_view s)
{
    try {
        return parseRanges(s);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(key, e.what());
    }
}

} // namespace

ConfigError::ConfigError(std::string field, const std::string& why)
    : std::invalid_argument(field + ": " + why), field_(std::move(field))
{
}

std::vector<IntRange> parseRanges(std::string_view text)
{
    std::vector<IntRange> out;
    for (auto part : splitList(text)) {
        const auto dash = part.find('-', 1);
        const auto lo = parseNumber<int>(part.substr(0, dash));
        const auto hi = dash == std::string_view::npos ? lo : parseNumber<int>(part.substr(dash + 1));
        if (!lo || !hi) {
            throw std::invalid_argument("'" + std::string(part) + "' is not a range like 4-12");
        }
        out.push_back({*lo, *hi});
    }
    return out;
}

void ExperimentConfig::validate() const
{
    if (!seed) {
        throw ConfigError("seed", "missing; runs must be seeded explicitly");
    }
    if (population == 0) {
        throw ConfigError("population", "must be at least 1");
    }
    if (!(epsilon[0] > 0.0) || !(epsilon[1] > 0.0)) {
        throw ConfigError("epsilon", "both values must be positive");
    }
    if (evaluator != "surrogate" && evaluator != "zdt1" && evaluator != "remote") {
        throw ConfigError("evaluator", "'" + evaluator + "' is not one of surrogate, zdt1, remote");
    }
    if (evaluator == "zdt1") {
        if (zdt1Dimensions < 2) {
            throw ConfigError("zdt1.dimensions", "must be at least 2");
        }
        return;
    }
    try {
        space.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("layers", e.what());
    }
    if (!(flopsScale > 0.0)) {
        throw ConfigError("flops_scale", "must be positive");
    }
    if (surrogate.maxEpochs < 1) {
        throw ConfigError("max_epochs", "must be at least 1");
    }
    if (surrogate.patience < 0) {
        throw ConfigError("patience", "must not be negative");
    }
    if (evaluator == "remote" && workers.empty()) {
        throw ConfigError("workers", "remote evaluation needs at least one worker address");
    }
}

ExperimentConfig parseConfig(std::string_view text)
{
    ExperimentConfig c;
    std::vector<IntRange> growth;
    std::optional<std::size_t> blocks;

    using Setter = std::function<void(const std::string&, std::string_view)>;
    const std::map<std::string, Setter, std::less<>> setters{
        {"seed", [&](auto& k, auto v) { c.seed = number<std::uint64_t>(k, v); }},
        {"population", [&](auto& k, auto v) { c.population = number<std::size_t>(k, v); }},
        {"generations", [&](auto& k, auto v) { c.generations = number<std::size_t>(k, v); }},
        {"leaders", [&](auto& k, auto v) { c.leaders = number<std::size_t>(k, v); }},
        {"epsilon",
         [&](auto& k, auto v) {
             const auto parts = splitList(v);
             if (parts.size() != 2) {
                 throw ConfigError(k, "expected two values: accuracy, flops");
             }
             c.epsilon = {number<double>(k, parts[0]), number<double>(k, parts[1])};
         }},
        {"evaluator", [&](auto&, auto v) { c.evaluator = std::string(v); }},
        {"blocks", [&](auto& k, auto v) { blocks = number<std::size_t>(k, v); }},
        {"layers", [&](auto& k, auto v) { c.space.layerRange = ranges(k, v); }},
        {"growth", [&](auto& k, auto v) { growth = ranges(k, v); }},
        {"input",
         [&](auto& k, auto v) {
             const auto parts = splitList(v, 'x');
             if (parts.size() != 3) {
                 throw ConfigError(k, "expected HxWxC such as 32x32x3");
             }
             c.space.inputHeight = number<int>(k, parts[0]);
             c.space.inputWidth = number<int>(k, parts[1]);
             c.space.inputChannels = number<int>(k, parts[2]);
         }},
        {"classes", [&](auto& k, auto v) { c.space.numClasses = number<int>(k, v); }},
        {"bottleneck", [&](auto& k, auto v) { c.bottleneck = boolean(k, v); }},
        {"flops_scale", [&](auto& k, auto v) { c.flopsScale = number<double>(k, v); }},
        {"max_epochs", [&](auto& k, auto v) { c.surrogate.maxEpochs = number<int>(k, v); }},
        {"patience", [&](auto& k, auto v) { c.surrogate.patience = number<int>(k, v); }},
        {"surrogate.f0", [&](auto& k, auto v) { c.surrogate.flopsScale = number<double>(k, v); }},
        {"surrogate.base", [&](auto& k, auto v) { c.surrogate.base = number<double>(k, v); }},
        {"surrogate.gain", [&](auto& k, auto v) { c.surrogate.gain = number<double>(k, v); }},
        {"surrogate.penalty", [&](auto& k, auto v) { c.surrogate.penalty = number<double>(k, v); }},
        {"zdt1.dimensions", [&](auto& k, auto v) { c.zdt1Dimensions = number<std::size_t>(k, v); }},
        {"in_process_workers", [&](auto& k, auto v) { c.inProcessWorkers = number<std::size_t>(k, v); }},
        {"workers",
         [&](auto&, auto v) {
             c.workers.clear();
             for (auto w : splitList(v)) {
                 if (!w.empty()) {
                     c.workers.emplace_back(w);
                 }
             }
         }},
        {"probe_timeout_ms",
         [&](auto& k, auto v) { c.probeTimeout = std::chrono::milliseconds(number<long>(k, v)); }},
        {"result_timeout_ms",
         [&](auto& k, auto v) { c.resultTimeout = std::chrono::milliseconds(number<long>(k, v)); }},
        {"cache", [&](auto&, auto v) { c.cache = std::string(v); }},
        {"history", [&](auto&, auto v) { c.history = std::string(v); }},
        {"archive", [&](auto&, auto v) { c.archive = std::string(v); }},
    };

    std::size_t lineNo = 0;
    std::istringstream in{std::string(text)};
    for (std::string raw; std::getline(in, raw);) {
        ++lineNo;
        auto line = std::string_view(raw);
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(lineNo), "expected key = value");
        }
        const std::string key(trim(line.substr(0, eq)));
        const auto value = trim(line.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) {
            throw ConfigError(key, "unknown key");
        }
        it->second(key, value);
    }

    if (blocks && *blocks != c.space.layerRange.size()) {
        throw ConfigError("blocks", std::to_string(*blocks) + " blocks but " + std::to_string(c.space.layerRange.size())
                                        + " layer ranges");
    }
    if (!growth.empty()) {
        if (growth.size() == 1) {
            growth.assign(c.space.layerRange.size(), growth.front());
        }
        if (growth.size() != c.space.layerRange.size()) {
            throw ConfigError("growth", "needs one range, or one per block");
        }
        c.space.growthRange = growth;
    } else if (c.space.growthRange.size() != c.space.layerRange.size()) {
        c.space.growthRange.assign(c.space.layerRange.size(), {8, 32});
    }
    c.surrogate.architecture.bottleneck = c.bottleneck;
    return c;
}

ExperimentConfig loadConfig(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config", "cannot read " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parseConfig(text.str());
}

void applyEnvironment(ExperimentConfig& config)
{
    if (const char* env = std::getenv("MOCNN_WORKERS"); env != nullptr && *env != '\0') {
        config.workers.clear();
        for (auto w : splitList(env)) {
            if (!w.empty()) {
                config.workers.emplace_back(w);
            }
        }
    }
}

} // namespace mocnn
