#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"

#include <filesystem>
#include <string>
#include <vector>

#ifndef XLRR_CLI_BIN
#error "XLRR_CLI_BIN must point at the xlrr binary"
#endif

namespace {

const std::string cli = XLRR_CLI_BIN;

std::string toy(const std::string& name) { return helpers::fixture_path("toy/" + name); }
std::string golden(const std::string& name) { return helpers::fixture_path("toy/golden/" + name); }

std::vector<std::string> run_doc_order(const std::string& run_text) {
    std::vector<std::string> docs;
    std::size_t start = 0;
    while (start < run_text.size()) {
        auto newline = run_text.find('\n', start);
        if (newline == std::string::npos) newline = run_text.size();
        std::string line = run_text.substr(start, newline - start);
        start = newline + 1;
        if (line.empty()) continue;
        // qid Q0 docid rank score tag
        auto first = line.find(' ');
        auto second = line.find(' ', first + 1);
        auto third = line.find(' ', second + 1);
        docs.push_back(line.substr(second + 1, third - second - 1));
    }
    return docs;
}

} // namespace

TEST_CASE("the cli requires a subcommand and offers help") {
    auto bare = helpers::run_command(cli);
    CHECK(bare.exit_code != 0);

    auto help = helpers::run_command(cli + " --help");
    CHECK(help.exit_code == 0);
    CHECK(help.output.find("index") != std::string::npos);
    CHECK(help.output.find("rerank") != std::string::npos);
    CHECK(help.output.find("eval") != std::string::npos);
}

TEST_CASE("missing input files exit with code 2 and a clear message") {
    auto dir = helpers::temp_dir("cli-missing");
    auto result = helpers::run_command(cli + " retrieve --index " + dir +
                                       "/absent.idx --queries " + toy("queries.tsv") +
                                       " --out " + dir + "/out.trec");
    CHECK(result.exit_code == 2);
    CHECK(result.output.find("file not found") != std::string::npos);
}

TEST_CASE("index and retrieve reproduce the golden first-stage run") {
    auto dir = helpers::temp_dir("cli-retrieve");

    auto index = helpers::run_command(cli + " index --passages " + toy("passages.jsonl") +
                                      " --use-translation --tokenizer english --language sw" +
                                      " --provenance translated --out " + dir + "/bm25.idx");
    CHECK(index.exit_code == 0);
    CHECK(index.output.find("indexed N=12 documents") != std::string::npos);
    CHECK(std::filesystem::exists(dir + "/bm25.idx.manifest.json"));

    auto retrieve = helpers::run_command(cli + " retrieve --index " + dir + "/bm25.idx" +
                                         " --queries " + toy("queries.tsv") + " --out " + dir +
                                         "/bm25.trec --language en --tag bm25");
    CHECK(retrieve.exit_code == 0);
    CHECK(helpers::read_file(dir + "/bm25.trec") == helpers::read_file(golden("bm25.trec")));
}

TEST_CASE("config file values feed retrieval parameters") {
    auto dir = helpers::temp_dir("cli-config");
    helpers::write_file(dir + "/exp.cfg", "bm25.top_k=1\n");

    helpers::run_command(cli + " index --passages " + toy("passages.jsonl") +
                         " --use-translation --tokenizer english --language sw" +
                         " --provenance translated --out " + dir + "/bm25.idx");
    auto result = helpers::run_command(cli + " --config " + dir + "/exp.cfg retrieve --index " +
                                       dir + "/bm25.idx --queries " + toy("queries.tsv") +
                                       " --out " + dir + "/top1.trec --language en");
    CHECK(result.exit_code == 0);
    CHECK(run_doc_order(helpers::read_file(dir + "/top1.trec")).size() == 3); // one per query
}

TEST_CASE("the reverse mock flips a single window") {
    auto dir = helpers::temp_dir("cli-reverse");
    helpers::write_file(dir + "/small.trec", "q1 Q0 d01 1 3.000000 bm25\n"
                                             "q1 Q0 d02 2 2.000000 bm25\n"
                                             "q1 Q0 d03 3 1.000000 bm25\n");
    auto result = helpers::run_command(
        cli + " --cache-dir " + dir + "/cache rerank --run " + dir + "/small.trec --passages " +
        toy("passages.jsonl") + " --queries " + toy("queries.tsv") + " --out " + dir +
        "/rr.trec --backend mock:reverse --window 20 --stride 10 --tag rr --language en");
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("reranked 1 queries (1 windows)") != std::string::npos);

    auto docs = run_doc_order(helpers::read_file(dir + "/rr.trec"));
    CHECK(docs == std::vector<std::string>{"d03", "d02", "d01"});

    auto trace = helpers::read_file(dir + "/rr.trec.trace.jsonl");
    CHECK(trace.find("\"query_id\":\"q1\"") != std::string::npos);
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 1);
}

TEST_CASE("the scripted mock reproduces the golden reranked run") {
    auto dir = helpers::temp_dir("cli-scripted");
    auto result = helpers::run_command(
        cli + " --cache-dir " + dir + "/cache rerank --run " + golden("bm25.trec") +
        " --passages " + toy("passages.jsonl") + " --queries " + toy("queries.tsv") + " --out " +
        dir + "/reranked.trec --backend mock:scripted --scripted " + toy("scripted.jsonl") +
        " --window 20 --stride 10 --tag reranked --language en");
    CHECK(result.exit_code == 0);
    CHECK(helpers::read_file(dir + "/reranked.trec") ==
          helpers::read_file(golden("reranked.trec")));

    // One window per query; the malformed completion shows up as repairs.
    auto trace = helpers::read_file(dir + "/reranked.trec.trace.jsonl");
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 3);
    CHECK(trace.find("\"repairs\":0") != std::string::npos);
    bool repaired = false;
    for (int n = 1; n <= 12 && !repaired; ++n) {
        repaired = trace.find("\"repairs\":" + std::to_string(n)) != std::string::npos;
    }
    CHECK(repaired);
}

TEST_CASE("eval reproduces the golden metrics csv") {
    auto dir = helpers::temp_dir("cli-eval");
    auto result = helpers::run_command(cli + " eval --run " + golden("reranked.trec") +
                                       " --qrels " + toy("qrels.txt") + " --out " + dir +
                                       "/metrics.csv --language sw --label reranked");
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("nDCG@10") != std::string::npos);
    CHECK(result.output.find("MRR@100") != std::string::npos);
    CHECK(helpers::read_file(dir + "/metrics.csv") == helpers::read_file(golden("metrics.csv")));
}

TEST_CASE("report merges csvs and rejects duplicate cells") {
    auto dir = helpers::temp_dir("cli-report");
    helpers::run_command(cli + " eval --run " + golden("bm25.trec") + " --qrels " +
                         toy("qrels.txt") + " --out " + dir +
                         "/bm25.csv --language sw --label bm25");
    helpers::run_command(cli + " eval --run " + golden("reranked.trec") + " --qrels " +
                         toy("qrels.txt") + " --out " + dir +
                         "/reranked.csv --language sw --label reranked");

    auto merged = helpers::run_command(cli + " report --in " + dir + "/bm25.csv," + dir +
                                       "/reranked.csv --out " + dir + "/table.txt --csv " + dir +
                                       "/merged.csv");
    CHECK(merged.exit_code == 0);
    auto table = helpers::read_file(dir + "/table.txt");
    CHECK(table.find("bm25") != std::string::npos);
    CHECK(table.find("reranked") != std::string::npos);
    CHECK(table.find("nDCG@10") != std::string::npos);
    CHECK(helpers::read_file(dir + "/merged.csv")
              .find("config,metric,language,value\n") != std::string::npos);

    auto dup = helpers::run_command(cli + " report --in " + dir + "/bm25.csv," + dir +
                                    "/bm25.csv --out " + dir + "/dup.txt");
    CHECK(dup.exit_code == 2);
    CHECK(dup.output.find("duplicate report cell") != std::string::npos);
}

TEST_CASE("a warm cache rerun leaves rerank outputs byte-identical") {
    auto dir = helpers::temp_dir("cli-warm");
    const std::string command =
        cli + " --cache-dir " + dir + "/cache rerank --run " + golden("bm25.trec") +
        " --passages " + toy("passages.jsonl") + " --queries " + toy("queries.tsv") + " --out " +
        dir + "/reranked.trec --backend mock:scripted --scripted " + toy("scripted.jsonl") +
        " --window 20 --stride 10 --tag reranked --language en";

    CHECK(helpers::run_command(command).exit_code == 0);
    auto cold_run = helpers::read_file(dir + "/reranked.trec");
    auto cold_trace = helpers::read_file(dir + "/reranked.trec.trace.jsonl");
    CHECK(cold_trace.find("\"cached\":false") != std::string::npos);

    // The script is consumed per dispatch, so a second run can only succeed
    // (and match) by replaying every window from the cache.
    CHECK(helpers::run_command(command).exit_code == 0);
    CHECK(helpers::read_file(dir + "/reranked.trec") == cold_run);
    auto warm_trace = helpers::read_file(dir + "/reranked.trec.trace.jsonl");
    CHECK(warm_trace.find("\"cached\":true") != std::string::npos);
    CHECK(warm_trace.find("\"cached\":false") == std::string::npos);

    auto manifest = helpers::read_file(dir + "/reranked.trec.manifest.json");
    CHECK(manifest.find("\"hits\": 3") != std::string::npos);
    CHECK(manifest.find("\"misses\": 0") != std::string::npos);
}
