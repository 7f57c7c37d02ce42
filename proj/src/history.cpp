#include "mocnn/history.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace mocnn {

namespace {

constexpr const char* kHeader = "generation\taccuracy\tnegFlops\tgenotype";

std::string shortest(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <typename T>
T parseField(std::string_view text, std::size_t line)
{
    T value{};
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, value);
    if (text.empty() || res.ec != std::errc{} || res.ptr != end) {
        throw std::runtime_error("history line " + std::to_string(line) + ": bad number '" + std::string(text) + "'");
    }
    return value;
}

std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> parts;
    while (true) {
        const auto at = s.find(sep);
        parts.push_back(s.substr(0, at));
        if (at == std::string_view::npos) {
            return parts;
        }
        s.remove_prefix(at + 1);
    }
}

} // namespace

std::vector<HistoryRow> flatten(const std::vector<GenerationSnapshot>& history)
{
    std::vector<HistoryRow> rows;
    for (const auto& snap : history) {
        for (const auto& e : snap.archive) {
            rows.push_back({snap.generation, e.objectives.accuracy(), e.objectives.negFlops(), e.genotype});
        }
    }
    return rows;
}

void writeRows(std::ostream& out, const std::vector<HistoryRow>& rows)
{
    out << kHeader << '\n';
    for (const auto& r : rows) {
        out << r.generation << '\t' << shortest(r.accuracy) << '\t' << shortest(r.negFlops) << '\t';
        for (std::size_t i = 0; i < r.genotype.size(); ++i) {
            out << (i ? "," : "") << shortest(r.genotype[i]);
        }
        out << '\n';
    }
}

void writeHistory(std::ostream& out, const std::vector<GenerationSnapshot>& history)
{
    writeRows(out, flatten(history));
}

void exportHistory(const std::vector<GenerationSnapshot>& history, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write history to " + path.string());
    }
    writeHistory(out, history);
    out.flush();
    if (!out) {
        throw std::runtime_error("error while writing " + path.string());
    }
}

std::vector<HistoryRow> readHistory(std::istream& in)
{
    std::vector<HistoryRow> rows;
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || (lineNo == 1 && line == kHeader)) {
            continue;
        }
        const auto cols = split(line, '\t');
        if (cols.size() != 4) {
            throw std::runtime_error("history line " + std::to_string(lineNo) + ": expected 4 columns");
        }
        HistoryRow r;
        r.generation = parseField<std::size_t>(cols[0], lineNo);
        r.accuracy = parseField<double>(cols[1], lineNo);
        r.negFlops = parseField<double>(cols[2], lineNo);
        if (!cols[3].empty()) {
            for (auto v : split(cols[3], ',')) {
                r.genotype.push_back(parseField<double>(v, lineNo));
            }
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<HistoryRow> loadHistory(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read history " + path.string());
    }
    return readHistory(in);
}

std::vector<HistoryRow> lastGeneration(const std::vector<HistoryRow>& rows)
{
    std::vector<HistoryRow> out;
    if (rows.empty()) {
        return out;
    }
    std::size_t last = 0;
    for (const auto& r : rows) {
        last = std::max(last, r.generation);
    }
    for (const auto& r : rows) {
        if (r.generation == last) {
            out.push_back(r);
        }
    }
    return out;
}

} // namespace mocnn
