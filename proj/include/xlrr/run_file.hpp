#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace xlrr {

struct RankedEntry {
    std::string doc_id;
    double score = 0.0;
};

// Ordered candidates for one query: score-descending, ties by ascending doc_id.
struct RankedList {
    std::string query_id;
    std::vector<RankedEntry> entries;
    std::string stage_tag;
};

// Per-query ranked lists in query first-appearance order.
struct RunFile {
    std::vector<RankedList> lists;
    std::string tag;

    const RankedList* find(const std::string& query_id) const;
};

// TREC 6-column lines: qid Q0 docid rank score tag (score with 6 decimals).
std::string format_run(const std::vector<RankedList>& lists);
void write_run_file(const std::filesystem::path& path, const std::vector<RankedList>& lists);
RunFile load_run_file(const std::filesystem::path& path);

} // namespace xlrr
