#include "xlrr/translate.hpp"

#include <atomic>
#include <cctype>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "xlrr/errors.hpp"
#include "xlrr/prompt.hpp"
#include "xlrr/utf8.hpp"

namespace xlrr {

namespace {

std::string strip(const std::string& s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

std::size_t count_code_points(const std::string& s) {
    std::size_t count = 0;
    std::size_t i = 0;
    while (i < s.size()) {
        std::size_t before = i;
        utf8::decode(s, i);
        if (i == before) ++i;  // defensive: never stall on a malformed byte
        ++count;
    }
    return count;
}

}  // namespace

Collection translate_collection(const Collection& coll, CompletionClient& client,
                                Language target, int workers) {
    if (coll.provenance() != Provenance::native) {
        throw ValidationError("translation expects a native collection, got provenance \"" +
                              std::string(provenance_string(coll.provenance())) + "\"");
    }
    if (workers < 1) throw ValidationError("workers must be >= 1");

    const auto& passages = coll.passages();
    std::vector<std::string> translations(passages.size());

    auto translate_one = [&](std::size_t i) {
        const Passage& passage = passages[i];
        CompletionRequest request;
        request.user_text = build_translation_prompt(passage, target);
        request.request_tag = "doc=" + passage.doc_id;
        translations[i] = strip(client.complete(request).text);
    };

    if (workers == 1 || passages.size() <= 1) {
        for (std::size_t i = 0; i < passages.size(); ++i) translate_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mu;
        auto worker = [&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= passages.size()) return;
                {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (first_error) return;
                }
                try {
                    translate_one(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        int n = std::min<int>(workers, static_cast<int>(passages.size()));
        pool.reserve(static_cast<std::size_t>(n));
        for (int t = 0; t < n; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    Collection out(coll.name(), coll.language(), Provenance::llm_translated);
    for (std::size_t i = 0; i < passages.size(); ++i) {
        Passage p = passages[i];
        p.translated_text = translations[i];
        out.add(std::move(p));
    }
    return out;
}

TranslationReport translation_report(const Collection& coll, const CostLedger* ledger) {
    if (coll.provenance() != Provenance::llm_translated) {
        throw ValidationError("translation report expects provenance llm_translated, got \"" +
                              std::string(provenance_string(coll.provenance())) + "\"");
    }
    TranslationReport report;
    report.passage_count = coll.size();
    double ratio_sum = 0.0;
    std::size_t ratio_count = 0;
    for (const auto& passage : coll.passages()) {
        const std::string& translated =
            passage.translated_text ? *passage.translated_text : std::string();
        if (translated.empty()) {
            ++report.empty_translations;
            report.ratios.emplace_back(passage.doc_id, 0.0);
            continue;
        }
        double original_len = static_cast<double>(count_code_points(passage.text));
        double ratio = original_len > 0
                           ? static_cast<double>(count_code_points(translated)) / original_len
                           : 0.0;
        report.ratios.emplace_back(passage.doc_id, ratio);
        ratio_sum += ratio;
        ++ratio_count;
    }
    report.mean_ratio = ratio_count > 0 ? ratio_sum / static_cast<double>(ratio_count) : 0.0;
    if (ledger != nullptr) report.usage = ledger->total();
    return report;
}

std::string format_translation_report(const TranslationReport& report) {
    char line[256];
    std::string out;
    std::snprintf(line, sizeof(line), "passages translated: %zu\n", report.passage_count);
    out += line;
    std::snprintf(line, sizeof(line), "empty translations:  %zu\n", report.empty_translations);
    out += line;
    std::snprintf(line, sizeof(line), "mean length ratio:   %.4f\n", report.mean_ratio);
    out += line;
    std::snprintf(line, sizeof(line),
                  "tokens: %ld prompt + %ld completion over %ld requests, cost %.6f\n",
                  report.usage.prompt_tokens, report.usage.completion_tokens,
                  report.usage.request_count, report.usage.total_cost);
    out += line;
    return out;
}

}  // namespace xlrr
