#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace xlrr {

enum class Language { ha, so, sw, yo, en };

Language language_from_code(std::string_view code);
std::string_view language_code(Language lang);
std::string_view language_name(Language lang); // "Hausa", "Somali", ...

enum class Provenance { native, translated, llm_translated };

Provenance provenance_from_string(std::string_view s);
std::string_view provenance_string(Provenance p);

struct Passage {
    std::string doc_id;
    std::string text;
    Language language = Language::en;
    std::optional<std::string> translated_text;
};

struct Query {
    std::string query_id;
    std::string text;
    Language language = Language::en;
};

// Graded relevance judgments keyed by (query_id, doc_id).
class QrelSet {
public:
    explicit QrelSet(int relevance_threshold = 1);

    void add(const std::string& query_id, const std::string& doc_id, int grade);
    int grade(const std::string& query_id, const std::string& doc_id) const; // 0 if unjudged
    bool has_query(const std::string& query_id) const;

    const std::map<std::string, std::map<std::string, int>>& judgments() const { return judgments_; }
    int relevance_threshold() const { return relevance_threshold_; }
    size_t size() const;

private:
    std::map<std::string, std::map<std::string, int>> judgments_; // qid -> docid -> grade
    int relevance_threshold_;
};

class Collection {
public:
    Collection() = default;
    Collection(std::string name, Language language, Provenance provenance);

    void add(Passage passage); // rejects duplicate doc_id
    const Passage* find(const std::string& doc_id) const;
    const Passage& at(const std::string& doc_id) const;

    const std::vector<Passage>& passages() const { return passages_; }
    size_t size() const { return passages_.size(); }
    const std::string& name() const { return name_; }
    Language language() const { return language_; }
    Provenance provenance() const { return provenance_; }
    void set_provenance(Provenance p) { provenance_ = p; }

private:
    std::string name_;
    Language language_ = Language::en;
    Provenance provenance_ = Provenance::native;
    std::vector<Passage> passages_;
    std::unordered_map<std::string, size_t> index_;
};

// Line-delimited records with fields `docid`, `text`, optional `translated_text`.
Collection load_passages(const std::filesystem::path& path, Provenance provenance,
                         Language language, const std::string& name = "");
void save_passages(const Collection& coll, const std::filesystem::path& path);

// Tab-separated: query_id<TAB>text.
std::vector<Query> load_queries(const std::filesystem::path& path, Language language);

// TREC 4-column whitespace format: qid Q0 docid grade.
QrelSet load_qrels(const std::filesystem::path& path, int relevance_threshold = 1);

// Returns a copy of `coll` with translated_text set for every key in `translations`
// and provenance llm_translated. Unknown doc_id keys are an error.
Collection attach_translations(const Collection& coll,
                               const std::map<std::string, std::string>& translations);

} // namespace xlrr
