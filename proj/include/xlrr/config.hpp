#pragma once

#include <map>
#include <string>
#include <vector>

#include "xlrr/backend.hpp"

namespace xlrr {

// Flat key=value experiment configuration. Lines starting with '#' and blank
// lines are ignored; keys must be unique within one file. Values keep inner
// whitespace but are trimmed at both ends.
class Config {
public:
    Config() = default;

    static Config load(const std::string& path);
    static Config from_string(const std::string& text, const std::string& source = "<string>");

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;

    std::string get(const std::string& key, const std::string& fallback) const;
    std::string require(const std::string& key) const;
    long get_int(const std::string& key, long fallback) const;
    double get_real(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    // Sorted "key=value" lines; the digest is the sha256 of this form.
    std::string canonical() const;
    std::string digest() const;

    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

// Overlay config-file backend settings onto a parsed backend spec. Recognized
// keys: backend.temperature, backend.max_completion_tokens,
// backend.context_limit, backend.endpoint_url, backend.price_per_1k_prompt,
// backend.price_per_1k_completion, backend.max_retries,
// backend.requests_per_minute, backend.retry_base_ms, backend.max_in_flight.
BackendConfig apply_backend_config(BackendConfig base, const Config& config);

// Deterministic record of one command invocation: no timestamps, no absolute
// environment detail — two identical runs write byte-identical manifests.
struct Manifest {
    std::string command;
    std::string config_digest;
    std::map<std::string, std::string> inputs;   // role -> path as given
    std::map<std::string, std::string> outputs;  // role -> path as given
    std::map<std::string, std::string> params;   // resolved knob values
    long cache_hits = -1;  // negative = stage did not use the cache
    long cache_misses = -1;
    std::map<std::string, ModelUsage> usage;  // empty = no backend involved

    std::string to_json() const;
};

void write_manifest(const std::string& path, const Manifest& manifest);

}  // namespace xlrr
