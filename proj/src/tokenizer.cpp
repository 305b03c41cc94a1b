#include "xlrr/tokenizer.hpp"

#include "xlrr/errors.hpp"
#include "xlrr/utf8.hpp"

#include <array>
#include <algorithm>

namespace xlrr {

TokenizerMode tokenizer_mode_from_string(std::string_view s) {
    if (s == "english") return TokenizerMode::english;
    if (s == "whitespace") return TokenizerMode::whitespace;
    throw ValidationError("unknown tokenizer mode: " + std::string(s));
}

std::string_view tokenizer_mode_string(TokenizerMode mode) {
    return mode == TokenizerMode::english ? "english" : "whitespace";
}

namespace {

// Classic English stopword list (33 words).
constexpr std::array<std::string_view, 33> kStopwords = {
    "a",    "an",   "and",   "are",  "as",    "at",   "be",   "but",  "by",
    "for",  "if",   "in",    "into", "is",    "it",   "no",   "not",  "of",
    "on",   "or",   "such",  "that", "the",   "their", "then", "there", "these",
    "they", "this", "to",    "was",  "will",  "with",
};

bool is_alnum_ascii(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

std::vector<std::string> tokenize_english(std::string_view text) {
    std::vector<std::string> terms;
    std::string current;
    auto flush = [&] {
        if (!current.empty() && !is_stopword(current)) {
            terms.push_back(porter_stem(current));
        }
        current.clear();
    };
    for (char c : text) {
        if (is_alnum_ascii(c)) {
            current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
        } else {
            flush();
        }
    }
    flush();
    return terms;
}

std::vector<std::string> tokenize_whitespace(std::string_view text) {
    std::vector<std::string> terms;
    std::string current;
    size_t i = 0;
    while (i < text.size()) {
        size_t start = i;
        char32_t cp = utf8::decode(text, i);
        if (cp != utf8::kInvalid && utf8::is_whitespace(cp)) {
            if (!current.empty()) {
                terms.push_back(std::move(current));
                current.clear();
            }
        } else {
            current.append(text.substr(start, i - start));
        }
    }
    if (!current.empty()) {
        terms.push_back(std::move(current));
    }
    return terms;
}

} // namespace

bool is_stopword(std::string_view token) {
    return std::find(kStopwords.begin(), kStopwords.end(), token) != kStopwords.end();
}

std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& cfg) {
    return cfg.mode == TokenizerMode::english ? tokenize_english(text)
                                              : tokenize_whitespace(text);
}

} // namespace xlrr
