#include "xlrr/prompt.hpp"

#include "xlrr/errors.hpp"
#include "xlrr/utf8.hpp"

#include <cmath>

namespace xlrr {

namespace {

// Kept byte-identical with fixtures/prompts/*.txt; the template fidelity
// tests diff built prompts against those files.
constexpr std::string_view kRerankSystem =
    "You are RankGPT, an intelligent assistant that can rank passages based on "
    "their relevancy to the query.";

constexpr std::string_view kRerankUserHead =
    "I will provide you with {num} passages, each indicated by number identifier []. "
    "Rank the passages based on their relevance to the query: {query}.";

constexpr std::string_view kRerankUserTail =
    "Search Query: {query}\n"
    "Rank the {num} passages above based on their relevance to the search query. "
    "The passages should be listed in descending order using identifiers. "
    "The most relevant passages should be listed first. "
    "The output format should be [] > [], e.g., [1] > [2]. "
    "Only respond with the ranking results, do not say any word or explain.";

constexpr std::string_view kTranslation =
    "Documents: {doc}\n"
    "Translate this doc from {African language} to {certain language}.\n"
    "Only return the translation, don't say any other word.";

void replace_all(std::string& text, std::string_view what, std::string_view with) {
    size_t pos = 0;
    while ((pos = text.find(what, pos)) != std::string::npos) {
        text.replace(pos, what.size(), with);
        pos += with.size();
    }
}

// Passages are inlined one per line; embedded line breaks become spaces.
std::string single_line(std::string_view text) {
    std::string out(text);
    for (char& c : out) {
        if (c == '\n' || c == '\r' || c == '\t') {
            c = ' ';
        }
    }
    return out;
}

bool byte_starts_whitespace(std::string_view text, size_t pos) {
    size_t i = pos;
    char32_t cp = utf8::decode(text, i);
    return cp != utf8::kInvalid && utf8::is_whitespace(cp);
}

} // namespace

int estimate_tokens(std::string_view text) {
    return static_cast<int>((text.size() + 3) / 4);
}

std::string truncate_to_tokens(std::string_view text, int cap) {
    if (cap < 1) {
        throw ValidationError("per-passage token cap must be >= 1");
    }
    const size_t max_bytes = static_cast<size_t>(cap) * 4;
    if (text.size() <= max_bytes) {
        return std::string(text);
    }
    // Last whitespace boundary at or before the byte limit.
    size_t cut = 0;
    size_t i = 0;
    while (i <= max_bytes && i < text.size()) {
        if (byte_starts_whitespace(text, i)) {
            cut = i;
        }
        size_t next = i;
        utf8::decode(text, next);
        i = next;
    }
    if (cut == 0) {
        // Single oversized word: hard cut at a UTF-8 boundary.
        cut = max_bytes;
        while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) {
            --cut;
        }
        return std::string(text.substr(0, cut));
    }
    std::string_view prefix = text.substr(0, cut);
    while (!prefix.empty() && byte_starts_whitespace(prefix, prefix.size() - 1)) {
        prefix.remove_suffix(1);
    }
    return std::string(prefix);
}

const std::string& rerank_text(const Passage& passage) {
    return passage.translated_text ? *passage.translated_text : passage.text;
}

RerankPrompt build_rerank_prompt(const Query& query,
                                 const std::vector<const Passage*>& window,
                                 const TokenBudget& budget) {
    if (window.empty()) {
        throw ValidationError("rerank window is empty");
    }
    if (window.size() > 100) {
        throw ValidationError("rerank window exceeds 100 passages");
    }
    const int num = static_cast<int>(window.size());
    if (budget.reserved_completion < num * 8) {
        throw ValidationError("reserved_completion must be >= 8 tokens per passage");
    }

    const std::string num_str = std::to_string(num);

    RerankPrompt prompt;
    prompt.num = num;
    prompt.system_text = std::string(kRerankSystem);

    std::string head(kRerankUserHead);
    replace_all(head, "{num}", num_str);
    replace_all(head, "{query}", query.text);

    std::string body;
    int identifier = 1;
    for (const Passage* passage : window) {
        body += '[';
        body += std::to_string(identifier);
        body += "] ";
        body += truncate_to_tokens(single_line(rerank_text(*passage)),
                                   budget.per_passage_cap);
        body += '\n';
        prompt.window_ids.push_back(passage->doc_id);
        ++identifier;
    }

    std::string tail(kRerankUserTail);
    replace_all(tail, "{num}", num_str);
    replace_all(tail, "{query}", query.text);

    prompt.user_text = head + "\n" + body + tail;

    const int prompt_tokens =
        estimate_tokens(prompt.system_text) + estimate_tokens(prompt.user_text);
    if (prompt_tokens > budget.context_limit - budget.reserved_completion) {
        throw BudgetError("window [" + prompt.window_ids.front() + " .. " +
                          prompt.window_ids.back() + "] for query \"" + query.query_id +
                          "\" needs " + std::to_string(prompt_tokens) +
                          " prompt tokens; limit is " +
                          std::to_string(budget.context_limit - budget.reserved_completion));
    }
    return prompt;
}

std::string build_translation_prompt(const Passage& doc, Language target_language) {
    if (doc.text.empty()) {
        throw ValidationError("cannot translate empty passage \"" + doc.doc_id + "\"");
    }
    std::string prompt(kTranslation);
    replace_all(prompt, "{African language}", language_name(doc.language));
    replace_all(prompt, "{certain language}", language_name(target_language));
    replace_all(prompt, "{doc}", doc.text);
    return prompt;
}

} // namespace xlrr
