#pragma once

#include <string>
#include <vector>

#include "xlrr/backend.hpp"
#include "xlrr/corpus.hpp"
#include "xlrr/prompt.hpp"
#include "xlrr/run_file.hpp"

namespace xlrr {

struct WindowPlan {
    int window_size = 20;
    int stride = 10;
    int passes = 1;

    void validate() const;
};

// A parsed (and possibly repaired) model ordering of one window.
// `order` holds 1-based window positions; after repair it is always a total
// permutation of 1..num. `repairs` counts the out-of-range values dropped
// plus the missing positions appended; duplicates collapse into their first
// occurrence without counting as a repair action.
struct Permutation {
    std::vector<int> order;
    int num = 0;
    int repairs = 0;
};

// Total parser: never throws on malformed completions. Extracts every integer
// in order of occurrence (bracketed or bare), drops values outside 1..num,
// keeps the first occurrence of duplicates, then appends the missing
// positions in ascending order. A completion with no usable integers yields
// the identity permutation with repairs = num.
Permutation parse_permutation(const std::string& completion, int num);

// output[i] = segment[perm.order[i] - 1]; a bijection of the segment.
std::vector<std::string> apply_permutation(const std::vector<std::string>& segment,
                                           const Permutation& perm);

// Build a RankedList over the given ordering with synthetic scores 1/rank.
RankedList assign_run_scores(const std::vector<std::string>& doc_ids,
                             const std::string& query_id, const std::string& tag);

struct WindowRecord {
    std::string query_id;
    int window_start = 0;  // 1-based rank of the first window slot
    int window_end = 0;    // 1-based rank of the last window slot, inclusive
    std::string completion;
    std::vector<int> order;
    int repairs = 0;
    bool cached = false;
};

struct RerankTrace {
    std::vector<WindowRecord> windows;
};

// One JSON record per executed window, newline-delimited.
std::string format_trace(const RerankTrace& trace);
void write_trace(const std::string& path, const RerankTrace& trace);

// Single back-to-front sliding-window pass over the candidate list: windows
// cover [max(0, L-w) .. L) and shift left by `stride` until the window that
// contains position 0 has been processed. Each window is prompted against
// the backend, parsed, repaired and applied in place before the next window
// is formed. Appends one record per window to `trace`, so a transport error
// mid-query leaves the already-executed windows on record.
RankedList sliding_window_rerank(const RankedList& candidates, const Collection& coll,
                                 const Query& query, const WindowPlan& plan,
                                 CompletionClient& client, const TokenBudget& budget,
                                 const std::string& tag, RerankTrace& trace);

}  // namespace xlrr
