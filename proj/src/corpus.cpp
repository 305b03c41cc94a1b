#include "xlrr/corpus.hpp"

#include "xlrr/errors.hpp"
#include "xlrr/utf8.hpp"
#include "xlrr/util.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace xlrr {

using nlohmann::json;

Language language_from_code(std::string_view code) {
    if (code == "ha") return Language::ha;
    if (code == "so") return Language::so;
    if (code == "sw") return Language::sw;
    if (code == "yo") return Language::yo;
    if (code == "en") return Language::en;
    throw ValidationError("unsupported language code: " + std::string(code));
}

std::string_view language_code(Language lang) {
    switch (lang) {
        case Language::ha: return "ha";
        case Language::so: return "so";
        case Language::sw: return "sw";
        case Language::yo: return "yo";
        case Language::en: return "en";
    }
    throw ValidationError("bad language enum value");
}

std::string_view language_name(Language lang) {
    switch (lang) {
        case Language::ha: return "Hausa";
        case Language::so: return "Somali";
        case Language::sw: return "Swahili";
        case Language::yo: return "Yoruba";
        case Language::en: return "English";
    }
    throw ValidationError("bad language enum value");
}

Provenance provenance_from_string(std::string_view s) {
    if (s == "native") return Provenance::native;
    if (s == "translated") return Provenance::translated;
    if (s == "llm_translated") return Provenance::llm_translated;
    throw ValidationError("unsupported provenance: " + std::string(s));
}

std::string_view provenance_string(Provenance p) {
    switch (p) {
        case Provenance::native: return "native";
        case Provenance::translated: return "translated";
        case Provenance::llm_translated: return "llm_translated";
    }
    throw ValidationError("bad provenance enum value");
}

QrelSet::QrelSet(int relevance_threshold) : relevance_threshold_(relevance_threshold) {
    if (relevance_threshold < 1) {
        throw ValidationError("relevance_threshold must be >= 1");
    }
}

void QrelSet::add(const std::string& query_id, const std::string& doc_id, int grade) {
    if (grade < 0) {
        throw ValidationError("negative grade for (" + query_id + ", " + doc_id + ")");
    }
    auto& per_query = judgments_[query_id];
    if (per_query.count(doc_id)) {
        throw ValidationError("duplicate judgment for (" + query_id + ", " + doc_id + ")");
    }
    per_query.emplace(doc_id, grade);
}

int QrelSet::grade(const std::string& query_id, const std::string& doc_id) const {
    auto q = judgments_.find(query_id);
    if (q == judgments_.end()) {
        return 0;
    }
    auto d = q->second.find(doc_id);
    return d == q->second.end() ? 0 : d->second;
}

bool QrelSet::has_query(const std::string& query_id) const {
    return judgments_.count(query_id) > 0;
}

size_t QrelSet::size() const {
    size_t n = 0;
    for (const auto& [qid, docs] : judgments_) {
        n += docs.size();
    }
    return n;
}

Collection::Collection(std::string name, Language language, Provenance provenance)
    : name_(std::move(name)), language_(language), provenance_(provenance) {}

void Collection::add(Passage passage) {
    if (passage.doc_id.empty()) {
        throw ValidationError("empty doc_id");
    }
    if (passage.text.empty()) {
        throw ValidationError("empty text for doc_id \"" + passage.doc_id + "\"");
    }
    if (index_.count(passage.doc_id)) {
        throw ValidationError("duplicate doc_id \"" + passage.doc_id + "\"");
    }
    index_.emplace(passage.doc_id, passages_.size());
    passages_.push_back(std::move(passage));
}

const Passage* Collection::find(const std::string& doc_id) const {
    auto it = index_.find(doc_id);
    return it == index_.end() ? nullptr : &passages_[it->second];
}

const Passage& Collection::at(const std::string& doc_id) const {
    const Passage* p = find(doc_id);
    if (!p) {
        throw ValidationError("unknown doc_id \"" + doc_id + "\"");
    }
    return *p;
}

Collection load_passages(const std::filesystem::path& path, Provenance provenance,
                         Language language, const std::string& name) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("file not found: " + path.string());
    }
    Collection coll(name.empty() ? path.stem().string() : name, language, provenance);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        if (!utf8::valid(line)) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": invalid UTF-8");
        }
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object()) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": malformed passage record");
        }
        if (!record.contains("docid") || !record["docid"].is_string()) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": missing docid field");
        }
        if (!record.contains("text") || !record["text"].is_string()) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": missing text field");
        }
        Passage p;
        p.doc_id = record["docid"].get<std::string>();
        p.text = record["text"].get<std::string>();
        p.language = language;
        if (record.contains("translated_text")) {
            if (!record["translated_text"].is_string()) {
                throw ParseError(path.string() + ":" + std::to_string(line_no) +
                                 ": translated_text must be a string");
            }
            p.translated_text = record["translated_text"].get<std::string>();
        }
        try {
            coll.add(std::move(p));
        } catch (const ValidationError& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return coll;
}

void save_passages(const Collection& coll, const std::filesystem::path& path) {
    std::string out;
    for (const auto& p : coll.passages()) {
        json record;
        record["docid"] = p.doc_id;
        record["text"] = p.text;
        if (p.translated_text) {
            record["translated_text"] = *p.translated_text;
        }
        out += record.dump();
        out += '\n';
    }
    write_text_file_atomic(path, out);
}

std::vector<Query> load_queries(const std::filesystem::path& path, Language language) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("file not found: " + path.string());
    }
    std::vector<Query> queries;
    std::unordered_map<std::string, size_t> seen;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (!utf8::valid(line)) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": invalid UTF-8");
        }
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": expected query_id<TAB>text");
        }
        Query q;
        q.query_id = line.substr(0, tab);
        q.text = line.substr(tab + 1);
        q.language = language;
        if (seen.count(q.query_id)) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": duplicate query_id \"" + q.query_id + "\"");
        }
        seen.emplace(q.query_id, queries.size());
        queries.push_back(std::move(q));
    }
    return queries;
}

QrelSet load_qrels(const std::filesystem::path& path, int relevance_threshold) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("file not found: " + path.string());
    }
    QrelSet qrels(relevance_threshold);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string qid, iteration, docid, grade_str, extra;
        if (!(fields >> qid)) {
            continue; // blank line
        }
        if (!(fields >> iteration >> docid >> grade_str)) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": expected 4 fields: qid iter docid grade");
        }
        if (fields >> extra) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": trailing fields after grade");
        }
        int grade = 0;
        size_t consumed = 0;
        try {
            grade = std::stoi(grade_str, &consumed);
        } catch (const std::exception&) {
            consumed = std::string::npos;
        }
        if (consumed != grade_str.size()) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": non-integer grade \"" + grade_str + "\"");
        }
        try {
            qrels.add(qid, docid, grade);
        } catch (const ValidationError& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return qrels;
}

Collection attach_translations(const Collection& coll,
                               const std::map<std::string, std::string>& translations) {
    for (const auto& [doc_id, text] : translations) {
        if (!coll.find(doc_id)) {
            throw ValidationError("translation for unknown doc_id \"" + doc_id + "\"");
        }
        (void)text;
    }
    Collection out(coll.name(), coll.language(), Provenance::llm_translated);
    for (const auto& p : coll.passages()) {
        Passage copy = p;
        auto it = translations.find(p.doc_id);
        if (it != translations.end()) {
            copy.translated_text = it->second;
        }
        out.add(std::move(copy));
    }
    return out;
}

} // namespace xlrr
