#pragma once

#include <string>
#include <utility>
#include <vector>

#include "xlrr/corpus.hpp"
#include "xlrr/run_file.hpp"

namespace xlrr {

// DCG@k with gain = raw grade and discount 1/log2(rank+1), normalized by the
// ideal DCG over all judged grades for the query. Returns 0 when the query
// has no positively graded judgments.
double ndcg_at_k(const RankedList& run, const QrelSet& qrels, int k = 10);

// Reciprocal rank of the first document at or above the qrels relevance
// threshold within the top k; 0 when none appears.
double mrr_at_k(const RankedList& run, const QrelSet& qrels, int k = 100);

struct MetricSpec {
    std::string name;  // "ndcg" or "mrr"
    int cutoff = 0;

    std::string id() const { return name + "@" + std::to_string(cutoff); }
    std::string display() const;  // "nDCG@10", "MRR@100"
};

// Parses "ndcg@10" / "mrr@100" style metric ids (case-insensitive name).
MetricSpec parse_metric_spec(const std::string& text);

// One table cell plus its per-query breakdown: a (config, metric, language)
// triple with the mean over every query in the qrels.
struct MetricReport {
    std::string config;
    std::string metric;    // metric id, e.g. "ndcg@10"
    std::string language;  // language code
    std::vector<std::pair<std::string, double>> per_query;  // sorted by query_id
    double mean = 0.0;
};

// Queries present in the qrels but absent from the run score 0 and still
// count toward the mean; run-only queries are ignored.
std::vector<MetricReport> evaluate_run(const RunFile& run, const QrelSet& qrels,
                                       const std::vector<MetricSpec>& metrics,
                                       const std::string& config_label,
                                       const std::string& language);

struct RenderedReport {
    std::string table;  // aligned text, one row per configuration
    std::string csv;    // header config,metric,language,value
};

// Rows follow the order configurations first appear in `reports`; column
// groups are metric x language with values printed to 4 decimals. Every
// configuration must cover the same metric/language cells.
RenderedReport render_report(const std::vector<MetricReport>& reports);

// Cell-level CSV round-trip for the report command (per-query values are not
// carried through CSV).
std::string format_report_csv(const std::vector<MetricReport>& reports);
std::vector<MetricReport> load_report_csv(const std::string& path);

void write_report_csv(const std::string& path, const std::vector<MetricReport>& reports);

// Per-query detail CSV: header config,metric,language,query_id,value.
std::string format_per_query_csv(const std::vector<MetricReport>& reports);

}  // namespace xlrr
