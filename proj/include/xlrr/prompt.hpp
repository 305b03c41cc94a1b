#pragma once

#include "xlrr/corpus.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace xlrr {

struct TokenBudget {
    int context_limit = 4096;
    int per_passage_cap = 300;
    int reserved_completion = 512;
};

struct RerankPrompt {
    std::string system_text;
    std::string user_text;
    std::vector<std::string> window_ids; // doc_ids in numbered order
    int num = 0;
};

// Deterministic upper-bound estimate: ceil(byte_count / 4).
int estimate_tokens(std::string_view text);

// Longest whitespace-safe prefix within `cap` estimator tokens. Falls back to
// a hard cut (at a UTF-8 boundary) when the prefix is a single word.
std::string truncate_to_tokens(std::string_view text, int cap);

// Text the reranker sees: the translation when present, else the original.
const std::string& rerank_text(const Passage& passage);

RerankPrompt build_rerank_prompt(const Query& query,
                                 const std::vector<const Passage*>& window,
                                 const TokenBudget& budget);

std::string build_translation_prompt(const Passage& doc, Language target_language);

} // namespace xlrr
