#include "xlrr/config.hpp"

#include <algorithm>
#include <cctype>

#include <json.hpp>

#include "xlrr/errors.hpp"
#include "xlrr/util.hpp"

namespace xlrr {

namespace {

std::string trim(const std::string& s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

}  // namespace

Config Config::load(const std::string& path) {
    return from_string(read_text_file(path), path);
}

Config Config::from_string(const std::string& text, const std::string& source) {
    Config config;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        if (start == text.size()) break;
        auto newline = text.find('\n', start);
        std::string line = newline == std::string::npos ? text.substr(start)
                                                        : text.substr(start, newline - start);
        start = newline == std::string::npos ? text.size() : newline + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        auto eq = stripped.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ParseError(source + ": line " + std::to_string(line_no) +
                             ": expected key=value, got \"" + stripped + "\"");
        }
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        if (config.kv_.count(key) != 0) {
            throw ParseError(source + ": line " + std::to_string(line_no) + ": duplicate key \"" +
                             key + "\"");
        }
        config.kv_.emplace(std::move(key), std::move(value));
    }
    return config;
}

void Config::set(const std::string& key, const std::string& value) {
    if (key.empty()) throw ValidationError("config key must not be empty");
    kv_[key] = value;
}

bool Config::has(const std::string& key) const { return kv_.count(key) != 0; }

std::string Config::get(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

std::string Config::require(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ValidationError("missing required config key \"" + key + "\"");
    return it->second;
}

long Config::get_int(const std::string& key, long fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
        std::size_t consumed = 0;
        long value = std::stol(it->second, &consumed);
        if (consumed != it->second.size()) throw std::invalid_argument(it->second);
        return value;
    } catch (const std::exception&) {
        throw ParseError("config key \"" + key + "\" is not an integer: \"" + it->second + "\"");
    }
}

double Config::get_real(const std::string& key, double fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
        std::size_t consumed = 0;
        double value = std::stod(it->second, &consumed);
        if (consumed != it->second.size()) throw std::invalid_argument(it->second);
        return value;
    } catch (const std::exception&) {
        throw ParseError("config key \"" + key + "\" is not a number: \"" + it->second + "\"");
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::string value = it->second;
    std::transform(value.begin(), value.end(), value.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ParseError("config key \"" + key + "\" is not a boolean: \"" + it->second + "\"");
}

std::string Config::canonical() const {
    std::string out;
    for (const auto& [key, value] : kv_) {
        out += key;
        out += '=';
        out += value;
        out += '\n';
    }
    return out;
}

std::string Config::digest() const { return sha256_hex(canonical()); }

BackendConfig apply_backend_config(BackendConfig base, const Config& config) {
    base.endpoint_url = config.get("backend.endpoint_url", base.endpoint_url);
    base.temperature = config.get_real("backend.temperature", base.temperature);
    base.max_completion_tokens = static_cast<int>(
        config.get_int("backend.max_completion_tokens", base.max_completion_tokens));
    base.context_limit =
        static_cast<int>(config.get_int("backend.context_limit", base.context_limit));
    base.price_per_1k_prompt =
        config.get_real("backend.price_per_1k_prompt", base.price_per_1k_prompt);
    base.price_per_1k_completion =
        config.get_real("backend.price_per_1k_completion", base.price_per_1k_completion);
    base.max_retries = static_cast<int>(config.get_int("backend.max_retries", base.max_retries));
    base.requests_per_minute = static_cast<int>(
        config.get_int("backend.requests_per_minute", base.requests_per_minute));
    base.retry_base_ms =
        static_cast<int>(config.get_int("backend.retry_base_ms", base.retry_base_ms));
    base.max_in_flight =
        static_cast<int>(config.get_int("backend.max_in_flight", base.max_in_flight));
    return base;
}

std::string Manifest::to_json() const {
    nlohmann::json j;
    if (cache_hits >= 0 || cache_misses >= 0) {
        j["cache"]["hits"] = std::max(cache_hits, 0L);
        j["cache"]["misses"] = std::max(cache_misses, 0L);
    }
    j["command"] = command;
    j["config_digest"] = config_digest;
    if (!usage.empty()) {
        for (const auto& [model, u] : usage) {
            j["cost"][model] = {{"completion_tokens", u.completion_tokens},
                                {"prompt_tokens", u.prompt_tokens},
                                {"request_count", u.request_count},
                                {"total_cost", u.total_cost}};
        }
    }
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["params"] = params;
    return j.dump(2) + "\n";
}

void write_manifest(const std::string& path, const Manifest& manifest) {
    write_text_file_atomic(path, manifest.to_json());
}

}  // namespace xlrr
