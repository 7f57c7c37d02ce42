#include "mocnn/evaluation.hpp"

#include <charconv>
#include <fstream>
#include <system_error>

namespace mocnn {

namespace {

std::string formatDouble(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <typename T>
bool parseNumber(std::string_view text, T& out)
{
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, out);
    return res.ec == std::errc{} && res.ptr == end;
}

std::vector<std::string_view> split(std::string_view text, char sep)
{
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) {
            return parts;
        }
        start = pos + 1;
    }
}

} // namespace

EvaluationCache::EvaluationCache(const EvaluationCache& other)
{
    std::lock_guard lock(other.mutex_);
    records_ = other.records_;
}

EvaluationCache& EvaluationCache::operator=(const EvaluationCache& other)
{
    if (this != &other) {
        std::scoped_lock lock(mutex_, other.mutex_);
        records_ = other.records_;
        inFlight_.clear();
    }
    return *this;
}

std::optional<EvaluationRecord> EvaluationCache::find(const std::vector<int>& key) const
{
    std::lock_guard lock(mutex_);
    const auto it = records_.find(key);
    if (it == records_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<EvaluationRecord> EvaluationCache::findOrClaim(const std::vector<int>& key)
{
    std::unique_lock lock(mutex_);
    released_.wait(lock, [&] { return !inFlight_.contains(key); });
    if (const auto it = records_.find(key); it != records_.end()) {
        return it->second;
    }
    inFlight_.insert(key);
    return std::nullopt;
}

void EvaluationCache::fulfill(EvaluationRecord record)
{
    {
        std::lock_guard lock(mutex_);
        inFlight_.erase(record.key);
        auto key = record.key;
        records_.insert_or_assign(std::move(key), std::move(record));
    }
    released_.notify_all();
}

void EvaluationCache::abandon(const std::vector<int>& key)
{
    {
        std::lock_guard lock(mutex_);
        inFlight_.erase(key);
    }
    released_.notify_all();
}

void EvaluationCache::insert(EvaluationRecord record)
{
    std::lock_guard lock(mutex_);
    auto key = record.key;
    records_.insert_or_assign(std::move(key), std::move(record));
}

std::vector<EvaluationRecord> EvaluationCache::records() const
{
    std::lock_guard lock(mutex_);
    std::vector<EvaluationRecord> out;
    out.reserve(records_.size());
    for (const auto& [key, rec] : records_) {
        out.push_back(rec);
    }
    return out;
}

std::size_t EvaluationCache::size() const
{
    std::lock_guard lock(mutex_);
    return records_.size();
}

std::string formatRecord(const EvaluationRecord& record)
{
    std::string line;
    for (std::size_t i = 0; i < record.key.size(); ++i) {
        line += (i ? "," : "") + std::to_string(record.key[i]);
    }
    line += '\t' + formatDouble(record.accuracy);
    line += '\t' + std::to_string(record.bestEpoch);
    line += '\t' + record.evaluatorId;
    return line;
}

EvaluationRecord parseRecord(std::string_view line)
{
    const auto fields = split(line, '\t');
    if (fields.size() != 4) {
        throw std::invalid_argument("expected 4 tab-separated fields, found " + std::to_string(fields.size()));
    }
    EvaluationRecord rec;
    for (auto part : split(fields[0], ',')) {
        int v = 0;
        if (!parseNumber(part, v)) {
            throw std::invalid_argument("bad key component '" + std::string(part) + "'");
        }
        rec.key.push_back(v);
    }
    if (!parseNumber(fields[1], rec.accuracy)) {
        throw std::invalid_argument("bad accuracy '" + std::string(fields[1]) + "'");
    }
    if (!parseNumber(fields[2], rec.bestEpoch)) {
        throw std::invalid_argument("bad epoch '" + std::string(fields[2]) + "'");
    }
    if (fields[3].empty()) {
        throw std::invalid_argument("missing evaluator id");
    }
    rec.evaluatorId = std::string(fields[3]);
    return rec;
}

EvaluationCache loadCache(const std::filesystem::path& path)
{
    EvaluationCache cache;
    std::ifstream in(path);
    if (!in) {
        if (!std::filesystem::exists(path)) {
            return cache;
        }
        throw std::runtime_error("cannot read cache " + path.string());
    }
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        try {
            cache.insert(parseRecord(line));
        } catch (const std::invalid_argument& e) {
            throw CacheCorrupt(path, lineNo, e.what());
        }
    }
    return cache;
}

void saveCache(const EvaluationCache& cache, const std::filesystem::path& path)
{
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write cache " + tmp.string());
        }
        for (const auto& rec : cache.records()) {
            out << formatRecord(rec) << '\n';
        }
        if (!out.flush()) {
            throw std::runtime_error("failed writing cache " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

} // namespace mocnn
