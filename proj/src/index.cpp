#include "xlrr/index.hpp"

#include "xlrr/errors.hpp"
#include "xlrr/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace xlrr {

void BM25Params::validate() const {
    if (!(k1 > 0.0)) {
        throw ValidationError("k1 must be > 0");
    }
    if (b < 0.0 || b > 1.0) {
        throw ValidationError("b must be in [0, 1]");
    }
    if (top_k < 1) {
        throw ValidationError("top_k must be >= 1");
    }
}

InvertedIndex InvertedIndex::build(const Collection& coll, const TokenizerConfig& cfg,
                                   bool use_translation) {
    InvertedIndex index;
    index.cfg_ = cfg;
    index.on_translation_ = use_translation;

    uint64_t total_len = 0;
    for (const auto& passage : coll.passages()) {
        const std::string* body = &passage.text;
        if (use_translation) {
            if (!passage.translated_text) {
                throw ValidationError("passage \"" + passage.doc_id +
                                      "\" has no translated_text");
            }
            body = &*passage.translated_text;
        }
        auto internal = static_cast<uint32_t>(index.doc_ids_.size());
        index.id_of_.emplace(passage.doc_id, internal);
        index.doc_ids_.push_back(passage.doc_id);

        auto terms = tokenize(*body, cfg);
        index.doc_lengths_.push_back(static_cast<uint32_t>(terms.size()));
        total_len += terms.size();

        std::map<std::string, uint32_t> freqs;
        for (auto& term : terms) {
            ++freqs[std::move(term)];
        }
        for (auto& [term, tf] : freqs) {
            index.postings_[term].push_back(Posting{internal, tf});
        }
    }
    index.avg_doc_length_ = index.doc_ids_.empty()
                                ? 0.0
                                : static_cast<double>(total_len) / index.doc_ids_.size();
    return index;
}

uint32_t InvertedIndex::doc_length(uint32_t internal_id) const {
    if (internal_id >= doc_lengths_.size()) {
        throw ValidationError("unknown internal doc id " + std::to_string(internal_id));
    }
    return doc_lengths_[internal_id];
}

const std::string& InvertedIndex::doc_id(uint32_t internal_id) const {
    if (internal_id >= doc_ids_.size()) {
        throw ValidationError("unknown internal doc id " + std::to_string(internal_id));
    }
    return doc_ids_[internal_id];
}

uint32_t InvertedIndex::internal_id(const std::string& doc_id) const {
    auto it = id_of_.find(doc_id);
    if (it == id_of_.end()) {
        throw ValidationError("unknown doc_id \"" + doc_id + "\"");
    }
    return it->second;
}

const std::vector<Posting>* InvertedIndex::postings(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? nullptr : &it->second;
}

double bm25_score(const InvertedIndex& index, const BM25Params& params,
                  const std::vector<std::string>& query_terms, uint32_t doc) {
    params.validate();
    const uint32_t n = index.doc_count();
    if (doc >= n) {
        throw ValidationError("unknown internal doc id " + std::to_string(doc));
    }
    const double len = index.doc_length(doc);
    const double avg = index.avg_doc_length();
    double score = 0.0;
    for (const auto& term : query_terms) {
        const auto* postings = index.postings(term);
        if (!postings) {
            continue;
        }
        auto it = std::lower_bound(postings->begin(), postings->end(), doc,
                                   [](const Posting& p, uint32_t d) { return p.doc < d; });
        if (it == postings->end() || it->doc != doc) {
            continue;
        }
        const double df = static_cast<double>(postings->size());
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        const double tf = it->tf;
        score += idf * tf / (tf + params.k1 * (1.0 - params.b + params.b * len / avg));
    }
    return score;
}

RankedList retrieve_topk(const InvertedIndex& index, const BM25Params& params,
                         const Query& query, const TokenizerConfig& cfg,
                         const std::string& stage_tag) {
    params.validate();
    RankedList result;
    result.query_id = query.query_id;
    result.stage_tag = stage_tag;
    const uint32_t n = index.doc_count();
    if (n == 0) {
        return result;
    }

    auto query_terms = tokenize(query.text, cfg);
    std::vector<double> scores(n, 0.0);
    const double avg = index.avg_doc_length();
    for (const auto& term : query_terms) {
        const auto* postings = index.postings(term);
        if (!postings) {
            continue;
        }
        const double df = static_cast<double>(postings->size());
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        for (const auto& posting : *postings) {
            const double len = index.doc_length(posting.doc);
            const double tf = posting.tf;
            scores[posting.doc] +=
                idf * tf / (tf + params.k1 * (1.0 - params.b + params.b * len / avg));
        }
    }

    std::vector<uint32_t> matched;
    for (uint32_t d = 0; d < n; ++d) {
        if (scores[d] > 0.0) {
            matched.push_back(d);
        }
    }
    std::sort(matched.begin(), matched.end(), [&](uint32_t a, uint32_t b) {
        if (scores[a] != scores[b]) {
            return scores[a] > scores[b];
        }
        return index.doc_id(a) < index.doc_id(b);
    });
    if (matched.size() > static_cast<size_t>(params.top_k)) {
        matched.resize(static_cast<size_t>(params.top_k));
    }
    result.entries.reserve(matched.size());
    for (uint32_t d : matched) {
        result.entries.push_back(RankedEntry{index.doc_id(d), scores[d]});
    }
    return result;
}

namespace {

// Index artifact layout: magic, tokenizer mode, translation flag, doc table,
// then the term dictionary in sorted order. Little-endian throughout.
constexpr char kMagic[8] = {'X', 'L', 'R', 'R', 'I', 'D', 'X', '1'};

void put_u32(std::string& out, uint32_t v) {
    char buf[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                   static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.append(buf, 4);
}

void put_str(std::string& out, const std::string& s) {
    put_u32(out, static_cast<uint32_t>(s.size()));
    out += s;
}

class Reader {
public:
    Reader(std::string data, std::string path)
        : data_(std::move(data)), path_(std::move(path)) {}

    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 3; i >= 0; --i) {
            v = (v << 8) | static_cast<unsigned char>(data_[pos_ + i]);
        }
        pos_ += 4;
        return v;
    }

    std::string str() {
        uint32_t len = u32();
        need(len);
        std::string s = data_.substr(pos_, len);
        pos_ += len;
        return s;
    }

    void raw(void* dst, size_t len) {
        need(len);
        std::memcpy(dst, data_.data() + pos_, len);
        pos_ += len;
    }

    bool done() const { return pos_ == data_.size(); }

private:
    void need(size_t len) {
        if (pos_ + len > data_.size()) {
            throw ParseError("truncated index artifact: " + path_);
        }
    }

    std::string data_;
    std::string path_;
    size_t pos_ = 0;
};

} // namespace

void InvertedIndex::save(const std::filesystem::path& path) const {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    out.push_back(cfg_.mode == TokenizerMode::english ? 0 : 1);
    out.push_back(on_translation_ ? 1 : 0);
    put_u32(out, doc_count());
    for (uint32_t d = 0; d < doc_count(); ++d) {
        put_str(out, doc_ids_[d]);
        put_u32(out, doc_lengths_[d]);
    }
    put_u32(out, static_cast<uint32_t>(postings_.size()));
    for (const auto& [term, postings] : postings_) {
        put_str(out, term);
        put_u32(out, static_cast<uint32_t>(postings.size()));
        for (const auto& p : postings) {
            put_u32(out, p.doc);
            put_u32(out, p.tf);
        }
    }
    write_text_file_atomic(path, out);
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path) {
    Reader in(read_text_file(path), path.string());
    char magic[sizeof(kMagic)];
    in.raw(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw ParseError("not an index artifact: " + path.string());
    }
    char mode_byte = 0;
    char translation_byte = 0;
    in.raw(&mode_byte, 1);
    in.raw(&translation_byte, 1);

    InvertedIndex index;
    index.cfg_.mode = mode_byte == 0 ? TokenizerMode::english : TokenizerMode::whitespace;
    index.on_translation_ = translation_byte != 0;

    uint32_t n = in.u32();
    uint64_t total_len = 0;
    for (uint32_t d = 0; d < n; ++d) {
        std::string doc_id = in.str();
        uint32_t len = in.u32();
        index.id_of_.emplace(doc_id, d);
        index.doc_ids_.push_back(std::move(doc_id));
        index.doc_lengths_.push_back(len);
        total_len += len;
    }
    index.avg_doc_length_ = n == 0 ? 0.0 : static_cast<double>(total_len) / n;

    uint32_t term_count = in.u32();
    for (uint32_t t = 0; t < term_count; ++t) {
        std::string term = in.str();
        uint32_t posting_count = in.u32();
        std::vector<Posting> postings;
        postings.reserve(posting_count);
        for (uint32_t p = 0; p < posting_count; ++p) {
            uint32_t doc = in.u32();
            uint32_t tf = in.u32();
            if (doc >= n || tf < 1) {
                throw ParseError("corrupt posting in index artifact: " + path.string());
            }
            postings.push_back(Posting{doc, tf});
        }
        index.postings_.emplace(std::move(term), std::move(postings));
    }
    if (!in.done()) {
        throw ParseError("trailing bytes in index artifact: " + path.string());
    }
    return index;
}

} // namespace xlrr
