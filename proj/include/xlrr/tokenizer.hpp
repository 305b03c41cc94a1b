#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace xlrr {

enum class TokenizerMode { english, whitespace };

TokenizerMode tokenizer_mode_from_string(std::string_view s);
std::string_view tokenizer_mode_string(TokenizerMode mode);

struct TokenizerConfig {
    TokenizerMode mode = TokenizerMode::english;
};

// english: lowercase, split on non-alphanumeric runs, drop stopwords, Porter stem.
// whitespace: split on Unicode whitespace only, no case folding.
std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& cfg);

// Classic 33-word English stopword list; expects a lowercased token.
bool is_stopword(std::string_view token);

// Porter stemmer over a lowercase ASCII token.
std::string porter_stem(std::string word);

} // namespace xlrr
