#pragma once

#include "xlrr/corpus.hpp"
#include "xlrr/run_file.hpp"
#include "xlrr/tokenizer.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace xlrr {

struct BM25Params {
    double k1 = 0.9;
    double b = 0.4;
    int top_k = 100;

    void validate() const;
};

struct Posting {
    uint32_t doc = 0; // internal id
    uint32_t tf = 0;

    bool operator==(const Posting&) const = default;
};

// Immutable after build; safe for concurrent readers.
class InvertedIndex {
public:
    static InvertedIndex build(const Collection& coll, const TokenizerConfig& cfg,
                               bool use_translation);

    uint32_t doc_count() const { return static_cast<uint32_t>(doc_ids_.size()); }
    double avg_doc_length() const { return avg_doc_length_; }
    uint32_t doc_length(uint32_t internal_id) const;
    const std::string& doc_id(uint32_t internal_id) const;
    bool has_doc(const std::string& doc_id) const { return id_of_.count(doc_id) > 0; }
    uint32_t internal_id(const std::string& doc_id) const;

    const std::vector<Posting>* postings(const std::string& term) const;
    const std::map<std::string, std::vector<Posting>>& all_postings() const { return postings_; }

    const TokenizerConfig& tokenizer() const { return cfg_; }
    bool built_on_translation() const { return on_translation_; }

    void save(const std::filesystem::path& path) const;
    static InvertedIndex load(const std::filesystem::path& path);

private:
    TokenizerConfig cfg_;
    bool on_translation_ = false;
    std::vector<std::string> doc_ids_;
    std::unordered_map<std::string, uint32_t> id_of_;
    std::vector<uint32_t> doc_lengths_;
    double avg_doc_length_ = 0.0;
    std::map<std::string, std::vector<Posting>> postings_;
};

// Sum over query terms of idf(t) * tf / (tf + k1 * (1 - b + b * len/avg_len)),
// idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)). Each query term occurrence
// contributes separately.
double bm25_score(const InvertedIndex& index, const BM25Params& params,
                  const std::vector<std::string>& query_terms, uint32_t doc);

// Top-k candidates sorted by score descending, ties by ascending doc_id.
// Zero-score documents are excluded.
RankedList retrieve_topk(const InvertedIndex& index, const BM25Params& params,
                         const Query& query, const TokenizerConfig& cfg,
                         const std::string& stage_tag = "bm25");

} // namespace xlrr
