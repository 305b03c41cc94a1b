#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "xlrr/corpus.hpp"

namespace xlrr {

enum class Provider { openai_compatible, anthropic_compatible, mock };

std::string provider_name(Provider p);
Provider provider_from_name(const std::string& name);

enum class MockBehavior { identity_order, reverse_order, qrels_perfect, scripted };

// Deterministic local stand-in for a completion provider. The ordering
// behaviors answer reranking prompts; `scripted` replays a fixed list of
// completions in dispatch order (used for translation tests and for feeding
// deliberately malformed rankings through the repair path).
struct MockScript {
    MockBehavior behavior = MockBehavior::identity_order;
    std::vector<std::string> scripted_responses;
    const QrelSet* qrels = nullptr;  // required for qrels_perfect

    // When positive, the first `fail_first` dispatches raise a retryable
    // transport error carrying `fail_status` before any text is produced,
    // so tests can exercise the retry loop without a network.
    int fail_first = 0;
    int fail_status = 503;
};

struct BackendConfig {
    Provider provider = Provider::mock;
    std::string model_name = "mock";
    std::string endpoint_url;  // empty selects the provider's default host
    double temperature = 0.0;
    int max_completion_tokens = 512;
    int context_limit = 4096;
    double price_per_1k_prompt = 0.0;
    double price_per_1k_completion = 0.0;
    int max_retries = 3;
    int requests_per_minute = 0;  // <= 0 means unthrottled
    int retry_base_ms = 250;
    int max_in_flight = 4;
    MockScript mock;

    void validate() const;
};

// Context window sizes for the models used in the experiments; returns 0 for
// names the table does not know. Dated variants (e.g. a "-20241022" suffix)
// resolve to their base model.
int default_context_limit(const std::string& model_name);

// Parse a backend spec string such as "mock:identity", "mock:reverse",
// "mock:qrels", "mock:scripted", "openai:gpt-4o-mini" or
// "anthropic:claude-3-5-sonnet" into a config with provider defaults filled.
BackendConfig parse_backend_spec(const std::string& spec);

struct CompletionRequest {
    std::string system_text;  // empty means no system message is sent
    std::string user_text;
    std::string request_tag;  // free-form; used for audit logs and mock wiring
};

struct CompletionResponse {
    std::string text;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    bool cached = false;
};

struct ModelUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
    long request_count = 0;
    double total_cost = 0.0;
};

// Thread-safe per-model accounting of tokens and spend. Prices are supplied
// per recorded call so one ledger can span backends with different rates.
class CostLedger {
public:
    void record(const std::string& model, long prompt_tokens, long completion_tokens,
                double price_per_1k_prompt, double price_per_1k_completion);

    ModelUsage usage(const std::string& model) const;
    ModelUsage total() const;
    std::map<std::string, ModelUsage> by_model() const;

private:
    mutable std::mutex mu_;
    std::map<std::string, ModelUsage> usage_;
};

// Stable collision-resistant digest over the request identity
// (provider, model, temperature, system text, user text).
std::string cache_key(const BackendConfig& cfg, const CompletionRequest& req);

// Upper-bound ranking oracle: orders window positions 1..n by descending
// relevance grade, ties broken by original window position, and formats the
// result as "[i1] > [i2] > ...".
std::string qrels_perfect_response(const std::vector<std::string>& window_doc_ids,
                                   const QrelSet& qrels,
                                   const std::string& query_id);

// Convention used to let the ordering mocks see the window contents: the
// reranker sets request_tag to "qid=<query_id> docs=<id1>,<id2>,...".
std::string make_window_tag(const std::string& query_id,
                            const std::vector<std::string>& window_doc_ids);

// Uniform completion interface over remote providers and local mocks, with a
// persistent response cache, bounded retry with exponential backoff, a global
// sliding-window rate limiter and a cap on concurrent in-flight requests.
class CompletionClient {
public:
    // cache_dir may be empty, in which case responses are cached in memory
    // for the lifetime of the client only. The ledger pointer may be null.
    CompletionClient(BackendConfig cfg, std::string cache_dir, CostLedger* ledger = nullptr);
    ~CompletionClient();

    CompletionClient(const CompletionClient&) = delete;
    CompletionClient& operator=(const CompletionClient&) = delete;

    // Returns the cached response (cached=true, no dispatch, no ledger entry)
    // on a key hit; otherwise dispatches to the provider, retrying transient
    // failures, then records usage and stores the response.
    CompletionResponse complete(const CompletionRequest& req);

    const BackendConfig& config() const { return cfg_; }
    long cache_hits() const;
    long cache_misses() const;

    using clock_fn = std::function<long long()>;      // monotonic milliseconds
    using sleep_fn = std::function<void(long long)>;  // sleep for milliseconds
    // Test hook: substitute the time source used by the rate limiter and the
    // backoff sleeps. Both functions must be supplied together.
    void set_clock(clock_fn clock, sleep_fn sleep);

private:
    CompletionResponse dispatch(const CompletionRequest& req);
    CompletionResponse dispatch_mock(const CompletionRequest& req);
    CompletionResponse dispatch_http(const CompletionRequest& req);
    std::optional<CompletionResponse> cache_load(const std::string& key);
    void cache_store(const std::string& key, const CompletionRequest& req,
                     const CompletionResponse& resp);
    void acquire_rate_slot();

    BackendConfig cfg_;
    std::string cache_dir_;
    CostLedger* ledger_;

    struct State;
    std::unique_ptr<State> st_;
};

}  // namespace xlrr
