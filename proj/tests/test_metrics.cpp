#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "oracles.hpp"
#include "xlrr/errors.hpp"
#include "xlrr/metrics.hpp"

#include <random>

using namespace xlrr;

namespace {

RankedList make_list(const std::string& qid, const std::vector<std::string>& doc_ids) {
    RankedList list;
    list.query_id = qid;
    double score = static_cast<double>(doc_ids.size());
    for (const auto& id : doc_ids) list.entries.push_back({id, score--});
    return list;
}

QrelSet make_qrels(const std::string& qid,
                   const std::vector<std::pair<std::string, int>>& grades,
                   int threshold = 1) {
    QrelSet qrels(threshold);
    for (const auto& [doc, grade] : grades) qrels.add(qid, doc, grade);
    return qrels;
}

} // namespace

TEST_CASE("ndcg matches the worked example") {
    auto qrels = make_qrels("q1", {{"d1", 1}, {"d2", 1}});
    auto run = make_list("q1", {"d2", "d3", "d1"});
    CHECK(ndcg_at_k(run, qrels, 10) == doctest::Approx(0.91972).epsilon(1e-5));
}

TEST_CASE("ndcg is 1 for an ideal ranking and 0 without positive judgments") {
    auto qrels = make_qrels("q1", {{"d1", 3}, {"d2", 1}, {"d3", 2}});
    CHECK(ndcg_at_k(make_list("q1", {"d1", "d3", "d2"}), qrels, 10) == 1.0);

    auto zeros = make_qrels("q1", {{"d1", 0}, {"d2", 0}});
    CHECK(ndcg_at_k(make_list("q1", {"d1", "d2"}), zeros, 10) == 0.0);

    // Query absent from the qrels entirely.
    CHECK(ndcg_at_k(make_list("q9", {"d1"}), qrels, 10) == 0.0);

    // Empty run against positive judgments: defined, zero.
    CHECK(ndcg_at_k(make_list("q1", {}), qrels, 10) == 0.0);
}

TEST_CASE("ndcg cuts both the run and the ideal at k") {
    auto qrels = make_qrels("q1", {{"d1", 1}, {"d2", 1}});
    // The only relevant doc sits below the cutoff.
    auto run = make_list("q1", {"x1", "x2", "d1"});
    CHECK(ndcg_at_k(run, qrels, 2) == 0.0);

    // With k=1 the ideal is a single grade, so one relevant hit at rank 1 is
    // perfect even though a second judged doc exists.
    CHECK(ndcg_at_k(make_list("q1", {"d2"}), qrels, 1) == 1.0);
}

TEST_CASE("graded ndcg prefers higher grades earlier") {
    auto qrels = make_qrels("q1", {{"d1", 3}, {"d2", 1}});
    double good = ndcg_at_k(make_list("q1", {"d1", "d2"}), qrels, 10);
    double bad = ndcg_at_k(make_list("q1", {"d2", "d1"}), qrels, 10);
    CHECK(good == 1.0);
    CHECK(bad < good);
    // dcg = 1 + 3/log2(3), idcg = 3 + 1/log2(3)
    double expected = (1.0 + 3.0 / (std::log(3.0) / std::log(2.0))) /
                      (3.0 + 1.0 / (std::log(3.0) / std::log(2.0)));
    CHECK(bad == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("mrr finds the first relevant document") {
    auto qrels = make_qrels("q1", {{"d3", 1}, {"d5", 1}});
    CHECK(mrr_at_k(make_list("q1", {"d1", "d2", "d3", "d5"}), qrels, 100) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(mrr_at_k(make_list("q1", {"d3"}), qrels, 100) == 1.0);
    CHECK(mrr_at_k(make_list("q1", {"d1", "d2"}), qrels, 100) == 0.0);
    // Cutoff hides the hit.
    CHECK(mrr_at_k(make_list("q1", {"d1", "d2", "d3"}), qrels, 2) == 0.0);
}

TEST_CASE("mrr honors the relevance threshold") {
    auto qrels = make_qrels("q1", {{"d1", 1}, {"d2", 2}}, 2);
    CHECK(mrr_at_k(make_list("q1", {"d1", "d2"}), qrels, 100) == 0.5);
}

TEST_CASE("metric cutoffs must be positive") {
    auto qrels = make_qrels("q1", {{"d1", 1}});
    auto run = make_list("q1", {"d1"});
    CHECK_THROWS_AS(ndcg_at_k(run, qrels, 0), ValidationError);
    CHECK_THROWS_AS(mrr_at_k(run, qrels, -3), ValidationError);
}

TEST_CASE("metrics agree with the brute-force oracle on random instances") {
    std::mt19937 rng(20260816);
    for (int trial = 0; trial < 100; ++trial) {
        auto inst = oracle::random_metric_instance(rng);
        QrelSet qrels;
        for (const auto& [doc, grade] : inst.judgments) qrels.add("q", doc, grade);
        auto run = make_list("q", inst.ranking);
        for (int k : {1, 3, 10, 100}) {
            CHECK(ndcg_at_k(run, qrels, k) ==
                  doctest::Approx(oracle::brute_ndcg(inst.ranking, inst.judgments, k))
                      .epsilon(1e-9));
            CHECK(mrr_at_k(run, qrels, k) ==
                  doctest::Approx(oracle::brute_mrr(inst.ranking, inst.judgments, k, 1))
                      .epsilon(1e-9));
        }
    }
}

TEST_CASE("metric specs parse case-insensitively") {
    auto spec = parse_metric_spec("ndcg@10");
    CHECK(spec.name == "ndcg");
    CHECK(spec.cutoff == 10);
    CHECK(spec.id() == "ndcg@10");
    CHECK(spec.display() == "nDCG@10");

    auto upper = parse_metric_spec("NDCG@25");
    CHECK(upper.name == "ndcg");
    CHECK(upper.cutoff == 25);

    auto mrr = parse_metric_spec("MRR@100");
    CHECK(mrr.name == "mrr");
    CHECK(mrr.display() == "MRR@100");

    CHECK_THROWS_AS(parse_metric_spec("ndcg"), ValidationError);
    CHECK_THROWS_AS(parse_metric_spec("@10"), ValidationError);
    CHECK_THROWS_AS(parse_metric_spec("ndcg@"), ValidationError);
    CHECK_THROWS_AS(parse_metric_spec("ndcg@x"), ValidationError);
    CHECK_THROWS_AS(parse_metric_spec("ndcg@-3"), ValidationError);
    CHECK_THROWS_AS(parse_metric_spec("ndcg@0"), ValidationError);
    CHECK_THROWS_AS(parse_metric_spec("map@10"), ValidationError);
    CHECK_THROWS_AS(parse_metric_spec("ndcg@10000000"), ValidationError);
}

TEST_CASE("evaluate_run scores every judged query") {
    QrelSet qrels;
    qrels.add("q1", "d1", 1);
    qrels.add("q2", "d2", 1);
    qrels.add("q3", "d3", 1);

    RunFile run;
    run.lists.push_back(make_list("q3", {"d3"}));
    run.lists.push_back(make_list("q1", {"d9", "d1"}));
    run.lists.push_back(make_list("q7", {"d1"})); // unjudged: ignored

    auto reports =
        evaluate_run(run, qrels, {parse_metric_spec("ndcg@10"), parse_metric_spec("mrr@100")},
                     "bm25", "sw");
    REQUIRE(reports.size() == 2);

    const auto& ndcg = reports[0];
    CHECK(ndcg.config == "bm25");
    CHECK(ndcg.metric == "ndcg@10");
    CHECK(ndcg.language == "sw");
    REQUIRE(ndcg.per_query.size() == 3);
    CHECK(ndcg.per_query[0].first == "q1"); // sorted by query id
    CHECK(ndcg.per_query[1].first == "q2");
    CHECK(ndcg.per_query[2].first == "q3");
    CHECK(ndcg.per_query[1].second == 0.0); // judged but missing from the run
    CHECK(ndcg.per_query[2].second == 1.0);
    double q1 = 1.0 / (std::log(3.0) / std::log(2.0));
    CHECK(ndcg.mean == doctest::Approx((q1 + 0.0 + 1.0) / 3.0).epsilon(1e-12));

    const auto& mrr = reports[1];
    CHECK(mrr.metric == "mrr@100");
    CHECK(mrr.mean == doctest::Approx((0.5 + 0.0 + 1.0) / 3.0).epsilon(1e-12));
}

namespace {

MetricReport cell(const std::string& config, const std::string& metric,
                  const std::string& language, double mean) {
    MetricReport report;
    report.config = config;
    report.metric = metric;
    report.language = language;
    report.mean = mean;
    return report;
}

} // namespace

TEST_CASE("render_report lays out metric-by-language rows") {
    std::vector<MetricReport> cells = {
        cell("BM25-DT", "ndcg@10", "ha", 0.0992), cell("BM25-DT", "ndcg@10", "so", 0.1358),
        cell("BM25-DT", "ndcg@10", "sw", 0.2026), cell("BM25-DT", "ndcg@10", "yo", 0.3260),
        cell("BM25-DT", "mrr@100", "ha", 0.1340), cell("BM25-DT", "mrr@100", "so", 0.2717),
        cell("BM25-DT", "mrr@100", "sw", 0.3180), cell("BM25-DT", "mrr@100", "yo", 0.4191),
        cell("reranked", "ndcg@10", "ha", 0.2000), cell("reranked", "ndcg@10", "so", 0.3000),
        cell("reranked", "ndcg@10", "sw", 0.4000), cell("reranked", "ndcg@10", "yo", 0.5000),
        cell("reranked", "mrr@100", "ha", 0.2500), cell("reranked", "mrr@100", "so", 0.3500),
        cell("reranked", "mrr@100", "sw", 0.4500), cell("reranked", "mrr@100", "yo", 0.5500),
    };
    auto rendered = render_report(cells);

    CHECK(rendered.table.find("nDCG@10") != std::string::npos);
    CHECK(rendered.table.find("MRR@100") != std::string::npos);
    CHECK(rendered.table.find("ha") != std::string::npos);
    CHECK(rendered.table.find("0.0992 0.1358 0.2026 0.3260") != std::string::npos);
    CHECK(rendered.table.find("0.1340 0.2717 0.3180 0.4191") != std::string::npos);
    CHECK(rendered.table.find("0.2000 0.3000 0.4000 0.5000") != std::string::npos);

    // Row order follows first appearance, BM25-DT before reranked.
    CHECK(rendered.table.find("BM25-DT") < rendered.table.find("reranked"));

    CHECK(rendered.csv.rfind("config,metric,language,value\n", 0) == 0);
    CHECK(rendered.csv.find("BM25-DT,ndcg@10,ha,0.0992\n") != std::string::npos);
    CHECK(rendered.csv.find("reranked,mrr@100,yo,0.5500\n") != std::string::npos);
}

TEST_CASE("render_report rejects duplicate and missing cells") {
    CHECK_THROWS_AS(render_report({}), ValidationError);

    std::vector<MetricReport> dup = {
        cell("a", "ndcg@10", "sw", 0.1),
        cell("a", "ndcg@10", "sw", 0.2),
    };
    CHECK_THROWS_WITH_AS(render_report(dup), "duplicate report cell: a / ndcg@10 / sw",
                         ValidationError);

    std::vector<MetricReport> gap = {
        cell("a", "ndcg@10", "ha", 0.1),
        cell("a", "ndcg@10", "so", 0.2),
        cell("b", "ndcg@10", "ha", 0.3),
    };
    CHECK_THROWS_WITH_AS(render_report(gap),
                         "configuration \"b\" is missing ndcg@10 for language \"so\"",
                         ValidationError);
}

TEST_CASE("report csv round-trips through disk") {
    auto dir = helpers::temp_dir("metrics-csv");
    std::vector<MetricReport> cells = {
        cell("bm25, tuned", "ndcg@10", "sw", 0.1234),
        cell("with \"quotes\"", "mrr@100", "yo", 0.5),
    };
    std::string csv = format_report_csv(cells);
    CHECK(csv.rfind("config,metric,language,value\n", 0) == 0);
    CHECK(csv.find("\"bm25, tuned\",ndcg@10,sw,0.1234\n") != std::string::npos);
    CHECK(csv.find("\"with \"\"quotes\"\"\",mrr@100,yo,0.5000\n") != std::string::npos);

    auto path = dir + "/report.csv";
    write_report_csv(path, cells);
    auto loaded = load_report_csv(path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].config == "bm25, tuned");
    CHECK(loaded[0].metric == "ndcg@10");
    CHECK(loaded[0].language == "sw");
    CHECK(loaded[0].mean == doctest::Approx(0.1234).epsilon(1e-12));
    CHECK(loaded[1].config == "with \"quotes\"");
    CHECK(loaded[1].mean == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("report csv parsing reports precise errors") {
    auto dir = helpers::temp_dir("metrics-csv-errors");

    auto bad_header = dir + "/header.csv";
    helpers::write_file(bad_header, "config,metric,value\nbm25,ndcg@10,0.5\n");
    CHECK_THROWS_AS(load_report_csv(bad_header), ParseError);

    auto short_row = dir + "/short.csv";
    helpers::write_file(short_row, "config,metric,language,value\nbm25,ndcg@10,0.5\n");
    try {
        load_report_csv(short_row);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        CHECK(std::string(e.what()).find("expected 4 fields") != std::string::npos);
    }

    auto bad_value = dir + "/value.csv";
    helpers::write_file(bad_value, "config,metric,language,value\nbm25,ndcg@10,sw,abc\n");
    try {
        load_report_csv(bad_value);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("not a number") != std::string::npos);
        CHECK(std::string(e.what()).find("abc") != std::string::npos);
    }

    auto unterminated = dir + "/quote.csv";
    helpers::write_file(unterminated, "config,metric,language,value\n\"bm25,ndcg@10,sw,0.5\n");
    CHECK_THROWS_AS(load_report_csv(unterminated), ParseError);

    CHECK_THROWS_AS(load_report_csv(dir + "/missing.csv"), Error);
}

TEST_CASE("per-query csv carries six-decimal values") {
    MetricReport report = cell("bm25", "ndcg@10", "sw", 0.5);
    report.per_query = {{"q1", 1.0 / 3.0}, {"q2", 1.0}};
    auto csv = format_per_query_csv({report});
    CHECK(csv.rfind("config,metric,language,query_id,value\n", 0) == 0);
    CHECK(csv.find("bm25,ndcg@10,sw,q1,0.333333\n") != std::string::npos);
    CHECK(csv.find("bm25,ndcg@10,sw,q2,1.000000\n") != std::string::npos);
}
