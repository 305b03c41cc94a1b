#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "xlrr/backend.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <thread>
#include <unordered_map>

#include <httplib.h>
#include <json.hpp>

#include "xlrr/errors.hpp"
#include "xlrr/prompt.hpp"
#include "xlrr/util.hpp"

namespace xlrr {

namespace {

using nlohmann::json;

constexpr char kFieldSep = '\x1f';

bool starts_with(const std::string& s, const std::string& prefix) {
    return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

std::string body_snippet(const std::string& body) {
    if (body.size() <= 200) return body;
    return body.substr(0, 200) + "...";
}

bool is_retryable_status(int status) {
    return status == 0 || status == 408 || status == 429 || status >= 500;
}

struct WindowTag {
    std::string query_id;
    std::vector<std::string> doc_ids;
};

// Inverse of make_window_tag. Returns nothing for tags that do not follow
// the "qid=... docs=..." convention.
std::optional<WindowTag> parse_window_tag(const std::string& tag) {
    if (!starts_with(tag, "qid=")) return std::nullopt;
    auto docs_pos = tag.rfind(" docs=");
    if (docs_pos == std::string::npos) return std::nullopt;
    WindowTag out;
    out.query_id = tag.substr(4, docs_pos - 4);
    std::string docs = tag.substr(docs_pos + 6);
    std::size_t start = 0;
    while (start <= docs.size() && !docs.empty()) {
        auto comma = docs.find(',', start);
        if (comma == std::string::npos) {
            out.doc_ids.push_back(docs.substr(start));
            break;
        }
        out.doc_ids.push_back(docs.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

// Fallback for ordering mocks driven without a window tag: recover the window
// size from the "Rank the {num} passages above" sentence of the prompt.
std::optional<int> window_size_from_prompt(const std::string& user_text) {
    const std::string lead = "Rank the ";
    auto pos = user_text.rfind(lead);
    if (pos == std::string::npos) return std::nullopt;
    std::size_t i = pos + lead.size();
    long value = 0;
    std::size_t digits = 0;
    while (i < user_text.size() && user_text[i] >= '0' && user_text[i] <= '9') {
        value = value * 10 + (user_text[i] - '0');
        ++i;
        ++digits;
        if (value > 1000) return std::nullopt;
    }
    if (digits == 0 || value < 1) return std::nullopt;
    return static_cast<int>(value);
}

std::string format_order(const std::vector<int>& positions) {
    std::string out;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (i > 0) out += " > ";
        out += "[" + std::to_string(positions[i]) + "]";
    }
    return out;
}

}  // namespace

std::string provider_name(Provider p) {
    switch (p) {
        case Provider::openai_compatible: return "openai_compatible";
        case Provider::anthropic_compatible: return "anthropic_compatible";
        case Provider::mock: return "mock";
    }
    throw ValidationError("unknown provider enum value");
}

Provider provider_from_name(const std::string& name) {
    if (name == "openai_compatible") return Provider::openai_compatible;
    if (name == "anthropic_compatible") return Provider::anthropic_compatible;
    if (name == "mock") return Provider::mock;
    throw ValidationError("unknown provider: \"" + name + "\"");
}

int default_context_limit(const std::string& model_name) {
    static const std::pair<const char*, int> table[] = {
        {"gpt-3.5-turbo", 4096},
        {"gpt-4o-mini", 16384},
        {"o1-mini", 65536},
        {"claude-3-5-sonnet", 8192},
    };
    for (const auto& [name, limit] : table) {
        if (model_name == name || starts_with(model_name, std::string(name) + "-")) {
            return limit;
        }
    }
    return 0;
}

void BackendConfig::validate() const {
    if (model_name.empty()) throw ValidationError("backend model_name must not be empty");
    if (temperature < 0) throw ValidationError("backend temperature must be >= 0");
    if (max_completion_tokens < 1) {
        throw ValidationError("backend max_completion_tokens must be >= 1");
    }
    if (context_limit < 1) throw ValidationError("backend context_limit must be >= 1");
    if (price_per_1k_prompt < 0 || price_per_1k_completion < 0) {
        throw ValidationError("backend prices must be >= 0");
    }
    if (max_retries < 0) throw ValidationError("backend max_retries must be >= 0");
    if (retry_base_ms < 0) throw ValidationError("backend retry_base_ms must be >= 0");
    if (max_in_flight < 1) throw ValidationError("backend max_in_flight must be >= 1");
    int known = default_context_limit(model_name);
    if (known != 0 && context_limit != known) {
        throw ValidationError("context_limit for model \"" + model_name + "\" must be " +
                              std::to_string(known) + ", got " + std::to_string(context_limit));
    }
    if (provider == Provider::mock && mock.behavior == MockBehavior::scripted &&
        mock.scripted_responses.empty()) {
        throw ValidationError("scripted mock requires a non-empty response list");
    }
}

BackendConfig parse_backend_spec(const std::string& spec) {
    auto colon = spec.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= spec.size()) {
        throw ValidationError("backend spec must look like \"provider:model\", got \"" + spec +
                              "\"");
    }
    std::string head = spec.substr(0, colon);
    std::string rest = spec.substr(colon + 1);
    BackendConfig cfg;
    if (head == "mock") {
        cfg.provider = Provider::mock;
        cfg.model_name = "mock-" + rest;
        if (rest == "identity") {
            cfg.mock.behavior = MockBehavior::identity_order;
        } else if (rest == "reverse") {
            cfg.mock.behavior = MockBehavior::reverse_order;
        } else if (rest == "qrels") {
            cfg.mock.behavior = MockBehavior::qrels_perfect;
        } else if (rest == "scripted") {
            cfg.mock.behavior = MockBehavior::scripted;
        } else {
            throw ValidationError("unknown mock behavior \"" + rest +
                                  "\" (expected identity, reverse, qrels or scripted)");
        }
        return cfg;
    }
    if (head == "openai") {
        cfg.provider = Provider::openai_compatible;
    } else if (head == "anthropic") {
        cfg.provider = Provider::anthropic_compatible;
    } else {
        throw ValidationError("unknown backend provider \"" + head +
                              "\" (expected mock, openai or anthropic)");
    }
    cfg.model_name = rest;
    int known = default_context_limit(rest);
    cfg.context_limit = known != 0 ? known : 4096;
    cfg.requests_per_minute = 60;
    return cfg;
}

void CostLedger::record(const std::string& model, long prompt_tokens, long completion_tokens,
                        double price_per_1k_prompt, double price_per_1k_completion) {
    if (prompt_tokens < 0 || completion_tokens < 0) {
        throw ValidationError("token counts must be >= 0");
    }
    std::lock_guard<std::mutex> lock(mu_);
    auto& u = usage_[model];
    u.prompt_tokens += prompt_tokens;
    u.completion_tokens += completion_tokens;
    u.request_count += 1;
    u.total_cost += static_cast<double>(prompt_tokens) / 1000.0 * price_per_1k_prompt +
                    static_cast<double>(completion_tokens) / 1000.0 * price_per_1k_completion;
}

ModelUsage CostLedger::usage(const std::string& model) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = usage_.find(model);
    return it == usage_.end() ? ModelUsage{} : it->second;
}

ModelUsage CostLedger::total() const {
    std::lock_guard<std::mutex> lock(mu_);
    ModelUsage sum;
    for (const auto& [model, u] : usage_) {
        sum.prompt_tokens += u.prompt_tokens;
        sum.completion_tokens += u.completion_tokens;
        sum.request_count += u.request_count;
        sum.total_cost += u.total_cost;
    }
    return sum;
}

std::map<std::string, ModelUsage> CostLedger::by_model() const {
    std::lock_guard<std::mutex> lock(mu_);
    return usage_;
}

std::string cache_key(const BackendConfig& cfg, const CompletionRequest& req) {
    char temp[32];
    std::snprintf(temp, sizeof(temp), "%.10g", cfg.temperature);
    std::string material;
    material += provider_name(cfg.provider);
    material += kFieldSep;
    material += cfg.model_name;
    material += kFieldSep;
    material += temp;
    material += kFieldSep;
    material += req.system_text;
    material += kFieldSep;
    material += req.user_text;
    return sha256_hex(material);
}

std::string qrels_perfect_response(const std::vector<std::string>& window_doc_ids,
                                   const QrelSet& qrels, const std::string& query_id) {
    std::vector<int> positions(window_doc_ids.size());
    for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(i) + 1;
    std::stable_sort(positions.begin(), positions.end(), [&](int a, int b) {
        return qrels.grade(query_id, window_doc_ids[a - 1]) >
               qrels.grade(query_id, window_doc_ids[b - 1]);
    });
    return format_order(positions);
}

std::string make_window_tag(const std::string& query_id,
                            const std::vector<std::string>& window_doc_ids) {
    std::string tag = "qid=" + query_id + " docs=";
    for (std::size_t i = 0; i < window_doc_ids.size(); ++i) {
        if (i > 0) tag += ',';
        tag += window_doc_ids[i];
    }
    return tag;
}

struct CompletionClient::State {
    std::mutex cache_mu;
    std::unordered_map<std::string, CompletionResponse> mem_cache;
    long hits = 0;
    long misses = 0;

    std::mutex mock_mu;
    std::size_t next_scripted = 0;
    int failures_injected = 0;

    std::mutex rate_mu;
    std::deque<long long> stamps;

    std::mutex flight_mu;
    std::condition_variable flight_cv;
    int in_flight = 0;

    clock_fn clock;
    sleep_fn sleep;
};

CompletionClient::CompletionClient(BackendConfig cfg, std::string cache_dir, CostLedger* ledger)
    : cfg_(std::move(cfg)), cache_dir_(std::move(cache_dir)), ledger_(ledger),
      st_(std::make_unique<State>()) {
    cfg_.validate();
    if (!cache_dir_.empty()) {
        std::filesystem::create_directories(cache_dir_);
    }
    st_->clock = [] {
        auto now = std::chrono::steady_clock::now().time_since_epoch();
        return static_cast<long long>(
            std::chrono::duration_cast<std::chrono::milliseconds>(now).count());
    };
    st_->sleep = [](long long ms) {
        std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    };
}

CompletionClient::~CompletionClient() = default;

void CompletionClient::set_clock(clock_fn clock, sleep_fn sleep) {
    if (!clock || !sleep) throw ValidationError("set_clock requires both functions");
    std::lock_guard<std::mutex> lock(st_->rate_mu);
    st_->clock = std::move(clock);
    st_->sleep = std::move(sleep);
}

long CompletionClient::cache_hits() const {
    std::lock_guard<std::mutex> lock(st_->cache_mu);
    return st_->hits;
}

long CompletionClient::cache_misses() const {
    std::lock_guard<std::mutex> lock(st_->cache_mu);
    return st_->misses;
}

std::optional<CompletionResponse> CompletionClient::cache_load(const std::string& key) {
    if (cache_dir_.empty()) {
        std::lock_guard<std::mutex> lock(st_->cache_mu);
        auto it = st_->mem_cache.find(key);
        if (it == st_->mem_cache.end()) return std::nullopt;
        CompletionResponse resp = it->second;
        resp.cached = true;
        return resp;
    }
    auto path = std::filesystem::path(cache_dir_) / (key + ".json");
    if (!std::filesystem::exists(path)) return std::nullopt;
    json j = json::parse(read_text_file(path.string()), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("text")) {
        throw ParseError("corrupt cache record: " + path.string());
    }
    CompletionResponse resp;
    resp.text = j.at("text").get<std::string>();
    resp.prompt_tokens = j.value("prompt_tokens", 0L);
    resp.completion_tokens = j.value("completion_tokens", 0L);
    resp.cached = true;
    return resp;
}

void CompletionClient::cache_store(const std::string& key, const CompletionRequest& req,
                                   const CompletionResponse& resp) {
    if (cache_dir_.empty()) {
        std::lock_guard<std::mutex> lock(st_->cache_mu);
        st_->mem_cache[key] = resp;
        return;
    }
    json j;
    j["completion_tokens"] = resp.completion_tokens;
    j["model"] = cfg_.model_name;
    j["prompt_tokens"] = resp.prompt_tokens;
    j["request_tag"] = req.request_tag;
    j["text"] = resp.text;
    auto path = std::filesystem::path(cache_dir_) / (key + ".json");
    write_text_file_atomic(path.string(), j.dump() + "\n");
}

void CompletionClient::acquire_rate_slot() {
    if (cfg_.requests_per_minute <= 0) return;
    std::unique_lock<std::mutex> lock(st_->rate_mu);
    for (;;) {
        long long now = st_->clock();
        while (!st_->stamps.empty() && now - st_->stamps.front() >= 60000) {
            st_->stamps.pop_front();
        }
        if (static_cast<int>(st_->stamps.size()) < cfg_.requests_per_minute) {
            st_->stamps.push_back(now);
            return;
        }
        long long wait = 60000 - (now - st_->stamps.front());
        auto sleep = st_->sleep;
        lock.unlock();
        sleep(std::max<long long>(wait, 1));
        lock.lock();
    }
}

CompletionResponse CompletionClient::dispatch_mock(const CompletionRequest& req) {
    {
        std::lock_guard<std::mutex> lock(st_->mock_mu);
        if (st_->failures_injected < cfg_.mock.fail_first) {
            ++st_->failures_injected;
            throw TransportError("simulated transient failure", cfg_.mock.fail_status);
        }
    }

    CompletionResponse resp;
    switch (cfg_.mock.behavior) {
        case MockBehavior::scripted: {
            std::lock_guard<std::mutex> lock(st_->mock_mu);
            if (st_->next_scripted >= cfg_.mock.scripted_responses.size()) {
                throw ValidationError(
                    "scripted mock exhausted after " +
                    std::to_string(cfg_.mock.scripted_responses.size()) + " responses");
            }
            resp.text = cfg_.mock.scripted_responses[st_->next_scripted++];
            break;
        }
        case MockBehavior::identity_order:
        case MockBehavior::reverse_order: {
            int num = 0;
            if (auto tag = parse_window_tag(req.request_tag)) {
                num = static_cast<int>(tag->doc_ids.size());
            } else if (auto n = window_size_from_prompt(req.user_text)) {
                num = *n;
            }
            if (num < 1) {
                throw ValidationError(
                    "ordering mock cannot determine the window size from the request");
            }
            std::vector<int> positions(static_cast<std::size_t>(num));
            for (int i = 0; i < num; ++i) positions[static_cast<std::size_t>(i)] = i + 1;
            if (cfg_.mock.behavior == MockBehavior::reverse_order) {
                std::reverse(positions.begin(), positions.end());
            }
            resp.text = format_order(positions);
            break;
        }
        case MockBehavior::qrels_perfect: {
            auto tag = parse_window_tag(req.request_tag);
            if (!tag || tag->doc_ids.empty()) {
                throw ValidationError(
                    "qrels_perfect mock requires a request_tag of the form "
                    "\"qid=<query> docs=<d1>,<d2>,...\"");
            }
            if (cfg_.mock.qrels == nullptr) {
                throw ValidationError("qrels_perfect mock requires a qrels set");
            }
            resp.text = qrels_perfect_response(tag->doc_ids, *cfg_.mock.qrels, tag->query_id);
            break;
        }
    }
    resp.prompt_tokens =
        static_cast<long>(estimate_tokens(req.system_text) + estimate_tokens(req.user_text));
    resp.completion_tokens = static_cast<long>(estimate_tokens(resp.text));
    return resp;
}

CompletionResponse CompletionClient::dispatch_http(const CompletionRequest& req) {
    const bool openai = cfg_.provider == Provider::openai_compatible;
    const char* env_name = openai ? "XLRR_OPENAI_KEY" : "XLRR_ANTHROPIC_KEY";
    const char* key = std::getenv(env_name);
    if (key == nullptr || *key == '\0') {
        throw ValidationError(std::string("environment variable ") + env_name + " is not set");
    }

    std::string endpoint = cfg_.endpoint_url;
    if (endpoint.empty()) {
        endpoint = openai ? "https://api.openai.com" : "https://api.anthropic.com";
    }

    json body;
    std::string path;
    httplib::Headers headers;
    if (openai) {
        path = "/v1/chat/completions";
        headers.emplace("Authorization", std::string("Bearer ") + key);
        body["model"] = cfg_.model_name;
        // Reasoning-series models take a different token-limit field and
        // reject explicit temperature/seed settings.
        bool reasoning = starts_with(cfg_.model_name, "o1");
        if (reasoning) {
            body["max_completion_tokens"] = cfg_.max_completion_tokens;
        } else {
            body["max_tokens"] = cfg_.max_completion_tokens;
            body["temperature"] = cfg_.temperature;
            body["seed"] = 0;
        }
        json messages = json::array();
        if (!req.system_text.empty()) {
            messages.push_back({{"role", "system"}, {"content", req.system_text}});
        }
        messages.push_back({{"role", "user"}, {"content", req.user_text}});
        body["messages"] = messages;
    } else {
        path = "/v1/messages";
        headers.emplace("x-api-key", key);
        headers.emplace("anthropic-version", "2023-06-01");
        body["model"] = cfg_.model_name;
        body["max_tokens"] = cfg_.max_completion_tokens;
        body["temperature"] = cfg_.temperature;
        if (!req.system_text.empty()) body["system"] = req.system_text;
        body["messages"] = json::array({{{"role", "user"}, {"content", req.user_text}}});
    }

    httplib::Client client(endpoint);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(120, 0);
    client.set_write_timeout(30, 0);

    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
        throw TransportError("network error: " + httplib::to_string(res.error()), 0);
    }
    if (res->status != 200) {
        throw TransportError("provider returned status " + std::to_string(res->status) + ": " +
                                 body_snippet(res->body),
                             res->status);
    }

    json j = json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ParseError("provider response is not valid JSON: " + body_snippet(res->body));
    }

    CompletionResponse resp;
    long prompt_tokens = -1;
    long completion_tokens = -1;
    if (openai) {
        if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
            throw ParseError("provider response has no choices: " + body_snippet(res->body));
        }
        const auto& message = j["choices"][0].value("message", json::object());
        if (!message.contains("content") || !message["content"].is_string()) {
            throw ParseError("provider response has no message content: " +
                             body_snippet(res->body));
        }
        resp.text = message["content"].get<std::string>();
        if (j.contains("usage") && j["usage"].is_object()) {
            prompt_tokens = j["usage"].value("prompt_tokens", -1L);
            completion_tokens = j["usage"].value("completion_tokens", -1L);
        }
    } else {
        if (!j.contains("content") || !j["content"].is_array()) {
            throw ParseError("provider response has no content: " + body_snippet(res->body));
        }
        for (const auto& block : j["content"]) {
            if (block.value("type", "") == "text" && block.contains("text")) {
                resp.text += block["text"].get<std::string>();
            }
        }
        if (j.contains("usage") && j["usage"].is_object()) {
            prompt_tokens = j["usage"].value("input_tokens", -1L);
            completion_tokens = j["usage"].value("output_tokens", -1L);
        }
    }
    resp.prompt_tokens =
        prompt_tokens >= 0
            ? prompt_tokens
            : static_cast<long>(estimate_tokens(req.system_text) + estimate_tokens(req.user_text));
    resp.completion_tokens = completion_tokens >= 0
                                 ? completion_tokens
                                 : static_cast<long>(estimate_tokens(resp.text));
    return resp;
}

CompletionResponse CompletionClient::dispatch(const CompletionRequest& req) {
    return cfg_.provider == Provider::mock ? dispatch_mock(req) : dispatch_http(req);
}

CompletionResponse CompletionClient::complete(const CompletionRequest& req) {
    if (req.user_text.empty()) {
        throw ValidationError("completion request has empty user_text");
    }
    std::size_t prompt_estimate = estimate_tokens(req.system_text) + estimate_tokens(req.user_text);
    if (prompt_estimate + static_cast<std::size_t>(cfg_.max_completion_tokens) >
        static_cast<std::size_t>(cfg_.context_limit)) {
        throw BudgetError("request estimated at " + std::to_string(prompt_estimate) +
                          " prompt tokens plus " + std::to_string(cfg_.max_completion_tokens) +
                          " completion tokens exceeds the " + std::to_string(cfg_.context_limit) +
                          "-token context of " + cfg_.model_name);
    }

    const std::string key = cache_key(cfg_, req);
    if (auto hit = cache_load(key)) {
        std::lock_guard<std::mutex> lock(st_->cache_mu);
        ++st_->hits;
        return *hit;
    }

    // Bound the number of requests simultaneously in flight across threads.
    {
        std::unique_lock<std::mutex> lock(st_->flight_mu);
        st_->flight_cv.wait(lock, [&] { return st_->in_flight < cfg_.max_in_flight; });
        ++st_->in_flight;
    }
    CompletionResponse resp;
    try {
        for (int attempt = 0;; ++attempt) {
            acquire_rate_slot();
            try {
                resp = dispatch(req);
                break;
            } catch (const TransportError& err) {
                if (!is_retryable_status(err.status()) || attempt >= cfg_.max_retries) throw;
                long long backoff = static_cast<long long>(cfg_.retry_base_ms) << attempt;
                if (backoff > 0) st_->sleep(std::min<long long>(backoff, 30000));
            }
        }
    } catch (...) {
        std::lock_guard<std::mutex> lock(st_->flight_mu);
        --st_->in_flight;
        st_->flight_cv.notify_one();
        throw;
    }
    {
        std::lock_guard<std::mutex> lock(st_->flight_mu);
        --st_->in_flight;
        st_->flight_cv.notify_one();
    }

    if (ledger_ != nullptr) {
        ledger_->record(cfg_.model_name, resp.prompt_tokens, resp.completion_tokens,
                        cfg_.price_per_1k_prompt, cfg_.price_per_1k_completion);
    }
    resp.cached = false;
    cache_store(key, req, resp);
    {
        std::lock_guard<std::mutex> lock(st_->cache_mu);
        ++st_->misses;
    }
    return resp;
}

}  // namespace xlrr
