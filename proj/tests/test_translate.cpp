#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "xlrr/errors.hpp"
#include "xlrr/translate.hpp"

#include <algorithm>
#include <set>

using namespace xlrr;

namespace {

Collection native_collection(int n, Language lang = Language::sw) {
    Collection coll("native", lang, Provenance::native);
    for (int i = 1; i <= n; ++i) {
        coll.add({"d" + std::to_string(i), "kifungu cha " + std::to_string(i), lang,
                  std::nullopt});
    }
    return coll;
}

BackendConfig scripted_config(std::vector<std::string> responses) {
    BackendConfig cfg;
    cfg.provider = Provider::mock;
    cfg.model_name = "mock-scripted";
    cfg.mock.behavior = MockBehavior::scripted;
    cfg.mock.scripted_responses = std::move(responses);
    return cfg;
}

} // namespace

TEST_CASE("translation fills translated_text from stripped completions") {
    auto coll = native_collection(3);
    CompletionClient client(
        scripted_config({"  Solar energy is used.  ", "Fish live in the lake.\n", "Rain falls."}),
        "");

    Collection out = translate_collection(coll, client, Language::en);
    CHECK(out.provenance() == Provenance::llm_translated);
    CHECK(out.language() == Language::sw);
    CHECK(out.name() == "native");
    REQUIRE(out.size() == 3);
    CHECK(*out.at("d1").translated_text == "Solar energy is used.");
    CHECK(*out.at("d2").translated_text == "Fish live in the lake.");
    CHECK(*out.at("d3").translated_text == "Rain falls.");
    CHECK(out.at("d1").text == "kifungu cha 1"); // original text untouched
    CHECK(coll.provenance() == Provenance::native);
}

TEST_CASE("translation demands a native collection") {
    Collection translated("t", Language::sw, Provenance::translated);
    translated.add({"d1", "x", Language::sw, std::string("y")});
    CompletionClient client(scripted_config({"z"}), "");
    CHECK_THROWS_AS(translate_collection(translated, client, Language::en), ValidationError);

    auto coll = native_collection(1);
    CHECK_THROWS_AS(translate_collection(coll, client, Language::en, 0), ValidationError);
}

TEST_CASE("a warm cache replays translations without new backend calls") {
    auto dir = helpers::temp_dir("translate-cache");
    auto coll = native_collection(3);

    {
        CompletionClient first(scripted_config({"one", "two", "three"}), dir);
        auto out = translate_collection(coll, first, Language::en);
        CHECK(first.cache_misses() == 3);
        CHECK(*out.at("d2").translated_text == "two");
    }

    // The second client would throw on any dispatch: its script is empty in
    // spirit (a single sentinel), so completion must come from the cache.
    CompletionClient second(scripted_config({"sentinel"}), dir);
    auto warm = translate_collection(coll, second, Language::en);
    CHECK(second.cache_hits() == 3);
    CHECK(second.cache_misses() == 0);
    CHECK(*warm.at("d1").translated_text == "one");
    CHECK(*warm.at("d3").translated_text == "three");
}

TEST_CASE("an interrupted run resumes with one call per missing passage") {
    auto dir = helpers::temp_dir("translate-resume");
    auto full = native_collection(3);

    // Translate only the first passage, as if the run had been interrupted.
    Collection head("native", Language::sw, Provenance::native);
    head.add(full.passages()[0]);
    {
        CompletionClient client(scripted_config({"alpha"}), dir);
        translate_collection(head, client, Language::en);
    }

    CompletionClient resume(scripted_config({"beta", "gamma"}), dir);
    auto out = translate_collection(full, resume, Language::en);
    CHECK(resume.cache_hits() == 1);
    CHECK(resume.cache_misses() == 2); // exactly N - k new calls
    CHECK(*out.at("d1").translated_text == "alpha");
    CHECK(*out.at("d2").translated_text == "beta");
    CHECK(*out.at("d3").translated_text == "gamma");
}

TEST_CASE("worker pools translate every passage") {
    auto coll = native_collection(6);
    std::vector<std::string> responses = {"r1", "r2", "r3", "r4", "r5", "r6"};
    CompletionClient client(scripted_config(responses), "");

    auto out = translate_collection(coll, client, Language::en, 3);
    REQUIRE(out.size() == 6);
    CHECK(client.cache_misses() == 6);

    // Scripted responses are consumed in a nondeterministic order under
    // concurrency, but each passage receives exactly one of them.
    std::multiset<std::string> got;
    for (const auto& p : out.passages()) {
        REQUIRE(p.translated_text.has_value());
        got.insert(*p.translated_text);
    }
    CHECK(got == std::multiset<std::string>(responses.begin(), responses.end()));
}

TEST_CASE("worker errors propagate to the caller") {
    auto coll = native_collection(6);
    CompletionClient client(scripted_config({"only", "two"}), "");
    CHECK_THROWS_AS(translate_collection(coll, client, Language::en, 3), ValidationError);
}

TEST_CASE("translation report measures code-point length ratios") {
    Collection coll("report", Language::yo, Provenance::llm_translated);
    // 2 code points -> 4 code points: ratio 2 in code points, 1 in bytes.
    coll.add({"d1", "\xC3\xA9\xC3\xA9", Language::yo, std::string("abcd")});
    coll.add({"d2", "abcd", Language::yo, std::string("ab")});
    coll.add({"d3", "text", Language::yo, std::string("")});

    CostLedger ledger;
    ledger.record("m", 100, 50, 0.03, 0.06);

    auto report = translation_report(coll, &ledger);
    CHECK(report.passage_count == 3);
    CHECK(report.empty_translations == 1);
    REQUIRE(report.ratios.size() == 3);
    CHECK(report.ratios[0].first == "d1");
    CHECK(report.ratios[0].second == doctest::Approx(2.0));
    CHECK(report.ratios[1].second == doctest::Approx(0.5));
    CHECK(report.ratios[2].second == 0.0);
    CHECK(report.mean_ratio == doctest::Approx(1.25)); // empty ones are skipped
    CHECK(report.usage.prompt_tokens == 100);
    CHECK(report.usage.request_count == 1);

    auto quiet = translation_report(coll, nullptr);
    CHECK(quiet.usage.request_count == 0);

    Collection wrong("w", Language::yo, Provenance::native);
    wrong.add({"d1", "x", Language::yo, std::nullopt});
    CHECK_THROWS_AS(translation_report(wrong, nullptr), ValidationError);

    std::string text = format_translation_report(report);
    CHECK(text.find("passages translated: 3\n") != std::string::npos);
    CHECK(text.find("empty translations:  1\n") != std::string::npos);
    CHECK(text.find("mean length ratio:   1.2500\n") != std::string::npos);
    CHECK(text.find("tokens: 100 prompt + 50 completion over 1 requests") != std::string::npos);
}

TEST_CASE("missing translations count as empty in the report") {
    Collection coll("gappy", Language::ha, Provenance::llm_translated);
    coll.add({"d1", "asibiti", Language::ha, std::nullopt});
    auto report = translation_report(coll, nullptr);
    CHECK(report.empty_translations == 1);
    CHECK(report.mean_ratio == 0.0);
}
