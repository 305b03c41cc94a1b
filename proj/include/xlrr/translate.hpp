#pragma once

#include <string>
#include <utility>
#include <vector>

#include "xlrr/backend.hpp"
#include "xlrr/corpus.hpp"

namespace xlrr {

// Zero-shot translation of every passage in a native collection. Completions
// are stripped of leading/trailing whitespace and stored as translated_text;
// the returned collection has provenance llm_translated. Fully cache-backed:
// an interrupted run resumes with one backend call per untranslated passage.
// workers > 1 translates passages concurrently (output order is unaffected,
// but scripted mocks consume their responses in a nondeterministic order).
Collection translate_collection(const Collection& coll, CompletionClient& client,
                                Language target, int workers = 1);

struct TranslationReport {
    std::size_t passage_count = 0;
    std::size_t empty_translations = 0;
    // Per-passage translated/original length ratio in Unicode code points,
    // in collection order; the mean skips passages with empty translations.
    std::vector<std::pair<std::string, double>> ratios;
    double mean_ratio = 0.0;
    ModelUsage usage;  // ledger totals, zero when no ledger was supplied
};

TranslationReport translation_report(const Collection& coll, const CostLedger* ledger);

std::string format_translation_report(const TranslationReport& report);

}  // namespace xlrr
