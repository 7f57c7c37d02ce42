#pragma once

#include "mocnn/mopso.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace mocnn {

/// One archive member at one generation.
struct HistoryRow {
    std::size_t generation = 0;
    double accuracy = 0.0;
    double negFlops = 0.0;
    Genotype genotype;

    friend bool operator==(const HistoryRow&, const HistoryRow&) = default;
};

/// Tab-separated table with a header line and columns generation, accuracy,
/// negFlops, genotype (comma-joined). Numbers use the shortest text that
/// reads back to the same double.
void writeHistory(std::ostream& out, const std::vector<GenerationSnapshot>& history);
void writeRows(std::ostream& out, const std::vector<HistoryRow>& rows);

/// Throws std::runtime_error if the file cannot be written.
void exportHistory(const std::vector<GenerationSnapshot>& history, const std::filesystem::path& path);

/// Throws std::runtime_error naming the line on malformed input.
std::vector<HistoryRow> readHistory(std::istream& in);
std::vector<HistoryRow> loadHistory(const std::filesystem::path& path);

std::vector<HistoryRow> flatten(const std::vector<GenerationSnapshot>& history);

/// Rows belonging to the last generation present.
std::vector<HistoryRow> lastGeneration(const std::vector<HistoryRow>& rows);

} // namespace mocnn
