#include "xlrr/reranker.hpp"

#include <algorithm>
#include <unordered_set>

#include <json.hpp>

#include "xlrr/errors.hpp"
#include "xlrr/util.hpp"

namespace xlrr {

void WindowPlan::validate() const {
    if (stride < 1) throw ValidationError("window stride must be >= 1");
    if (window_size < stride) throw ValidationError("window size must be >= stride");
    if (window_size > 100) throw ValidationError("window size must be <= 100");
    if (passes != 1) throw ValidationError("only single-pass reranking is supported");
}

Permutation parse_permutation(const std::string& completion, int num) {
    if (num < 1) throw ValidationError("permutation size must be >= 1");
    Permutation perm;
    perm.num = num;
    perm.order.reserve(static_cast<std::size_t>(num));
    std::vector<char> seen(static_cast<std::size_t>(num) + 1, 0);
    int repairs = 0;
    std::size_t i = 0;
    while (i < completion.size()) {
        char c = completion[i];
        if (c < '0' || c > '9') {
            ++i;
            continue;
        }
        long value = 0;
        bool oversized = false;
        while (i < completion.size() && completion[i] >= '0' && completion[i] <= '9') {
            if (!oversized) {
                value = value * 10 + (completion[i] - '0');
                // Anything beyond the window cap cannot be a position; stop
                // accumulating so absurdly long digit runs cannot overflow.
                if (value > 1000) oversized = true;
            }
            ++i;
        }
        if (oversized || value < 1 || value > num) {
            ++repairs;  // out-of-range value dropped
        } else if (!seen[static_cast<std::size_t>(value)]) {
            seen[static_cast<std::size_t>(value)] = 1;
            perm.order.push_back(static_cast<int>(value));
        }
        // duplicates collapse into their first occurrence
    }
    for (int v = 1; v <= num; ++v) {
        if (!seen[static_cast<std::size_t>(v)]) {
            perm.order.push_back(v);
            ++repairs;
        }
    }
    perm.repairs = repairs;
    return perm;
}

std::vector<std::string> apply_permutation(const std::vector<std::string>& segment,
                                           const Permutation& perm) {
    if (segment.size() != static_cast<std::size_t>(perm.num) ||
        perm.order.size() != segment.size()) {
        throw ValidationError("permutation of size " + std::to_string(perm.num) +
                              " cannot reorder a segment of " + std::to_string(segment.size()) +
                              " candidates");
    }
    std::vector<char> seen(segment.size() + 1, 0);
    std::vector<std::string> out;
    out.reserve(segment.size());
    for (int position : perm.order) {
        if (position < 1 || position > perm.num || seen[static_cast<std::size_t>(position)]) {
            throw ValidationError("order is not a permutation of 1.." + std::to_string(perm.num));
        }
        seen[static_cast<std::size_t>(position)] = 1;
        out.push_back(segment[static_cast<std::size_t>(position) - 1]);
    }
    return out;
}

RankedList assign_run_scores(const std::vector<std::string>& doc_ids,
                             const std::string& query_id, const std::string& tag) {
    RankedList list;
    list.query_id = query_id;
    list.stage_tag = tag;
    std::unordered_set<std::string> seen;
    list.entries.reserve(doc_ids.size());
    for (std::size_t i = 0; i < doc_ids.size(); ++i) {
        if (!seen.insert(doc_ids[i]).second) {
            throw ValidationError("duplicate doc_id \"" + doc_ids[i] + "\" in ranking for query " +
                                  query_id);
        }
        list.entries.push_back({doc_ids[i], 1.0 / static_cast<double>(i + 1)});
    }
    return list;
}

std::string format_trace(const RerankTrace& trace) {
    std::string out;
    for (const auto& record : trace.windows) {
        nlohmann::json j;
        j["cached"] = record.cached;
        j["completion"] = record.completion;
        j["order"] = record.order;
        j["query_id"] = record.query_id;
        j["repairs"] = record.repairs;
        j["window_end"] = record.window_end;
        j["window_start"] = record.window_start;
        out += j.dump();
        out += '\n';
    }
    return out;
}

void write_trace(const std::string& path, const RerankTrace& trace) {
    write_text_file_atomic(path, format_trace(trace));
}

RankedList sliding_window_rerank(const RankedList& candidates, const Collection& coll,
                                 const Query& query, const WindowPlan& plan,
                                 CompletionClient& client, const TokenBudget& budget,
                                 const std::string& tag, RerankTrace& trace) {
    plan.validate();
    const int total = static_cast<int>(candidates.entries.size());
    if (total > 100) {
        throw ValidationError("reranker accepts at most 100 candidates, got " +
                              std::to_string(total));
    }
    std::vector<std::string> working;
    working.reserve(candidates.entries.size());
    for (const auto& entry : candidates.entries) working.push_back(entry.doc_id);
    if (total == 0) return assign_run_scores(working, query.query_id, tag);

    int start = std::max(0, total - plan.window_size);
    int end = total;
    for (;;) {
        std::vector<std::string> window_ids(working.begin() + start, working.begin() + end);
        std::vector<const Passage*> window_passages;
        window_passages.reserve(window_ids.size());
        for (const auto& doc_id : window_ids) window_passages.push_back(&coll.at(doc_id));

        RerankPrompt prompt = build_rerank_prompt(query, window_passages, budget);
        CompletionRequest request;
        request.system_text = prompt.system_text;
        request.user_text = prompt.user_text;
        request.request_tag = make_window_tag(query.query_id, window_ids);
        CompletionResponse response = client.complete(request);

        Permutation perm = parse_permutation(response.text, prompt.num);
        std::vector<std::string> reordered = apply_permutation(window_ids, perm);
        std::copy(reordered.begin(), reordered.end(), working.begin() + start);

        WindowRecord record;
        record.query_id = query.query_id;
        record.window_start = start + 1;
        record.window_end = end;
        record.completion = response.text;
        record.order = perm.order;
        record.repairs = perm.repairs;
        record.cached = response.cached;
        trace.windows.push_back(std::move(record));

        if (start == 0) break;
        start = std::max(0, start - plan.stride);
        end = std::min(total, start + plan.window_size);
    }
    return assign_run_scores(working, query.query_id, tag);
}

}  // namespace xlrr
