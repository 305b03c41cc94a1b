#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "xlrr/backend.hpp"
#include "xlrr/config.hpp"
#include "xlrr/corpus.hpp"
#include "xlrr/errors.hpp"
#include "xlrr/index.hpp"
#include "xlrr/metrics.hpp"
#include "xlrr/reranker.hpp"
#include "xlrr/run_file.hpp"
#include "xlrr/tokenizer.hpp"
#include "xlrr/translate.hpp"
#include "xlrr/util.hpp"

namespace fs = std::filesystem;
using namespace xlrr;

namespace {

struct GlobalOptions {
    std::string config_path;
    std::string cache_dir;
};

Config load_effective_config(const GlobalOptions& global) {
    if (global.config_path.empty()) return Config();
    return Config::load(global.config_path);
}

std::string resolve_cache_dir(const GlobalOptions& global, const Config& config) {
    if (!global.cache_dir.empty()) return global.cache_dir;
    return config.get("cache.dir", "xlrr-cache");
}

// Serialize command execution per output directory.
DirLock lock_output_dir(const std::string& out_path) {
    fs::path parent = fs::path(out_path).parent_path();
    if (parent.empty()) parent = ".";
    fs::create_directories(parent);
    return DirLock(parent);
}

std::string format_real(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", value);
    return buf;
}

// Scripted mock responses: one JSON string per line.
std::vector<std::string> load_scripted_responses(const std::string& path) {
    const std::string content = read_text_file(path);
    std::vector<std::string> responses;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < content.size()) {
        auto newline = content.find('\n', start);
        std::string line = newline == std::string::npos ? content.substr(start)
                                                        : content.substr(start, newline - start);
        start = newline == std::string::npos ? content.size() : newline + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_string()) {
            throw ParseError(path + ": line " + std::to_string(line_no) +
                             ": expected a JSON string");
        }
        responses.push_back(j.get<std::string>());
    }
    return responses;
}

void add_usage(Manifest& manifest, const CostLedger& ledger, const CompletionClient& client) {
    manifest.usage = ledger.by_model();
    manifest.cache_hits = client.cache_hits();
    manifest.cache_misses = client.cache_misses();
}

struct IndexOptions {
    GlobalOptions global;
    std::string passages;
    std::string tokenizer = "english";
    bool use_translation = false;
    std::string out;
    std::string language = "en";
    std::string provenance = "native";
};

void run_index(const IndexOptions& opt) {
    Config config = load_effective_config(opt.global);
    auto lock = lock_output_dir(opt.out);

    TokenizerConfig cfg{tokenizer_mode_from_string(opt.tokenizer)};
    Collection coll = load_passages(opt.passages, provenance_from_string(opt.provenance),
                                    language_from_code(opt.language));
    InvertedIndex index = InvertedIndex::build(coll, cfg, opt.use_translation);
    index.save(opt.out);

    std::printf("indexed N=%u documents, %zu terms, avg_len=%.4f\n", index.doc_count(),
                index.all_postings().size(), index.avg_doc_length());

    Manifest manifest;
    manifest.command = "index";
    manifest.config_digest = config.digest();
    manifest.inputs["passages"] = opt.passages;
    manifest.outputs["index"] = opt.out;
    manifest.params["language"] = opt.language;
    manifest.params["provenance"] = opt.provenance;
    manifest.params["tokenizer"] = opt.tokenizer;
    manifest.params["use_translation"] = opt.use_translation ? "true" : "false";
    write_manifest(opt.out + ".manifest.json", manifest);
}

struct RetrieveOptions {
    GlobalOptions global;
    std::string index;
    std::string queries;
    std::string out;
    std::string language = "en";
    std::string tag = "bm25";
    int top_k = 0;     // 0 = from config / default
    double k1 = -1.0;  // negative = from config / default
    double b = -1.0;
};

void run_retrieve(const RetrieveOptions& opt) {
    Config config = load_effective_config(opt.global);
    auto lock = lock_output_dir(opt.out);

    BM25Params params;
    params.k1 = opt.k1 >= 0 ? opt.k1 : config.get_real("bm25.k1", params.k1);
    params.b = opt.b >= 0 ? opt.b : config.get_real("bm25.b", params.b);
    params.top_k =
        opt.top_k > 0 ? opt.top_k : static_cast<int>(config.get_int("bm25.top_k", params.top_k));
    params.validate();

    InvertedIndex index = InvertedIndex::load(opt.index);
    std::vector<Query> queries = load_queries(opt.queries, language_from_code(opt.language));

    std::vector<RankedList> lists;
    lists.reserve(queries.size());
    for (const auto& query : queries) {
        lists.push_back(retrieve_topk(index, params, query, index.tokenizer(), opt.tag));
    }
    write_run_file(opt.out, lists);
    std::printf("retrieved %zu queries into %s\n", lists.size(), opt.out.c_str());

    Manifest manifest;
    manifest.command = "retrieve";
    manifest.config_digest = config.digest();
    manifest.inputs["index"] = opt.index;
    manifest.inputs["queries"] = opt.queries;
    manifest.outputs["run"] = opt.out;
    manifest.params["b"] = format_real(params.b);
    manifest.params["k1"] = format_real(params.k1);
    manifest.params["tag"] = opt.tag;
    manifest.params["top_k"] = std::to_string(params.top_k);
    write_manifest(opt.out + ".manifest.json", manifest);
}

struct BackendOptions {
    std::string spec;
    std::string scripted_path;
    std::string qrels_path;  // for mock:qrels
};

struct BackendBundle {
    BackendConfig cfg;
    std::unique_ptr<QrelSet> qrels;  // keeps the mock's qrels alive
};

BackendBundle make_backend(const BackendOptions& opt, const Config& config) {
    BackendBundle bundle;
    bundle.cfg = apply_backend_config(parse_backend_spec(opt.spec), config);
    if (bundle.cfg.provider == Provider::mock &&
        bundle.cfg.mock.behavior == MockBehavior::scripted) {
        if (opt.scripted_path.empty()) {
            throw ValidationError("--backend mock:scripted requires --scripted <file>");
        }
        bundle.cfg.mock.scripted_responses = load_scripted_responses(opt.scripted_path);
    }
    if (bundle.cfg.provider == Provider::mock &&
        bundle.cfg.mock.behavior == MockBehavior::qrels_perfect) {
        if (opt.qrels_path.empty()) {
            throw ValidationError("--backend mock:qrels requires --qrels <file>");
        }
        bundle.qrels = std::make_unique<QrelSet>(load_qrels(opt.qrels_path));
        bundle.cfg.mock.qrels = bundle.qrels.get();
    }
    return bundle;
}

struct TranslateOptions {
    GlobalOptions global;
    std::string passages;
    std::string out;
    BackendOptions backend;
    std::string target = "en";
    std::string language;
    int workers = 1;
};

void run_translate(const TranslateOptions& opt) {
    Config config = load_effective_config(opt.global);
    auto lock = lock_output_dir(opt.out);

    BackendBundle backend = make_backend(opt.backend, config);
    CostLedger ledger;
    CompletionClient client(backend.cfg, resolve_cache_dir(opt.global, config), &ledger);

    Collection coll = load_passages(opt.passages, Provenance::native,
                                    language_from_code(opt.language));
    Collection translated =
        translate_collection(coll, client, language_from_code(opt.target), opt.workers);
    save_passages(translated, opt.out);

    TranslationReport report = translation_report(translated, &ledger);
    std::fputs(format_translation_report(report).c_str(), stdout);

    Manifest manifest;
    manifest.command = "translate";
    manifest.config_digest = config.digest();
    manifest.inputs["passages"] = opt.passages;
    manifest.outputs["passages"] = opt.out;
    manifest.params["language"] = opt.language;
    manifest.params["model"] = backend.cfg.model_name;
    manifest.params["provider"] = provider_name(backend.cfg.provider);
    manifest.params["target"] = opt.target;
    manifest.params["temperature"] = format_real(backend.cfg.temperature);
    manifest.params["workers"] = std::to_string(opt.workers);
    add_usage(manifest, ledger, client);
    write_manifest(opt.out + ".manifest.json", manifest);
}

struct RerankOptions {
    GlobalOptions global;
    std::string run;
    std::string passages;
    std::string queries;
    std::string out;
    std::string trace;
    BackendOptions backend;
    std::string tag;
    std::string language = "en";
    std::string provenance = "translated";
    int window = 0;  // 0 = from config / default
    int stride = 0;
};

void run_rerank(const RerankOptions& opt) {
    Config config = load_effective_config(opt.global);
    auto lock = lock_output_dir(opt.out);

    WindowPlan plan;
    plan.window_size =
        opt.window > 0 ? opt.window
                       : static_cast<int>(config.get_int("rerank.window", plan.window_size));
    plan.stride = opt.stride > 0 ? opt.stride
                                 : static_cast<int>(config.get_int("rerank.stride", plan.stride));
    plan.validate();

    BackendBundle backend = make_backend(opt.backend, config);
    CostLedger ledger;
    CompletionClient client(backend.cfg, resolve_cache_dir(opt.global, config), &ledger);

    TokenBudget budget;
    budget.context_limit = backend.cfg.context_limit;
    budget.per_passage_cap =
        static_cast<int>(config.get_int("budget.per_passage_cap", budget.per_passage_cap));
    budget.reserved_completion = static_cast<int>(
        config.get_int("budget.reserved_completion", budget.reserved_completion));

    RunFile run = load_run_file(opt.run);
    Collection coll = load_passages(opt.passages, provenance_from_string(opt.provenance),
                                    language_from_code(opt.language));
    std::vector<Query> queries = load_queries(opt.queries, language_from_code(opt.language));
    std::map<std::string, const Query*> query_of;
    for (const auto& query : queries) query_of[query.query_id] = &query;

    const std::string tag = !opt.tag.empty() ? opt.tag : "rerank-" + backend.cfg.model_name;
    const std::string trace_path = !opt.trace.empty() ? opt.trace : opt.out + ".trace.jsonl";

    RerankTrace trace;
    std::vector<RankedList> lists;
    lists.reserve(run.lists.size());
    try {
        for (const auto& candidates : run.lists) {
            auto it = query_of.find(candidates.query_id);
            if (it == query_of.end()) {
                throw ValidationError("query \"" + candidates.query_id +
                                      "\" from the run file is missing from " + opt.queries);
            }
            // Rerank at most the top 100 candidates; any tail keeps its order.
            RankedList head = candidates;
            std::vector<std::string> tail_ids;
            if (head.entries.size() > 100) {
                for (std::size_t i = 100; i < candidates.entries.size(); ++i) {
                    tail_ids.push_back(candidates.entries[i].doc_id);
                }
                head.entries.resize(100);
            }
            RankedList reranked = sliding_window_rerank(head, coll, *it->second, plan, client,
                                                        budget, tag, trace);
            std::vector<std::string> final_ids;
            final_ids.reserve(candidates.entries.size());
            for (const auto& entry : reranked.entries) final_ids.push_back(entry.doc_id);
            for (auto& doc_id : tail_ids) final_ids.push_back(std::move(doc_id));
            lists.push_back(assign_run_scores(final_ids, candidates.query_id, tag));
        }
    } catch (...) {
        // Keep the executed windows on record for post-mortem debugging.
        write_trace(trace_path, trace);
        throw;
    }

    write_run_file(opt.out, lists);
    write_trace(trace_path, trace);
    std::printf("reranked %zu queries (%zu windows) into %s\n", lists.size(),
                trace.windows.size(), opt.out.c_str());

    Manifest manifest;
    manifest.command = "rerank";
    manifest.config_digest = config.digest();
    manifest.inputs["passages"] = opt.passages;
    manifest.inputs["queries"] = opt.queries;
    manifest.inputs["run"] = opt.run;
    manifest.outputs["run"] = opt.out;
    manifest.outputs["trace"] = trace_path;
    manifest.params["model"] = backend.cfg.model_name;
    manifest.params["per_passage_cap"] = std::to_string(budget.per_passage_cap);
    manifest.params["provider"] = provider_name(backend.cfg.provider);
    manifest.params["reserved_completion"] = std::to_string(budget.reserved_completion);
    manifest.params["stride"] = std::to_string(plan.stride);
    manifest.params["tag"] = tag;
    manifest.params["temperature"] = format_real(backend.cfg.temperature);
    manifest.params["window"] = std::to_string(plan.window_size);
    add_usage(manifest, ledger, client);
    write_manifest(opt.out + ".manifest.json", manifest);
}

struct EvalOptions {
    GlobalOptions global;
    std::string run;
    std::string qrels;
    std::string metrics = "ndcg@10,mrr@100";
    std::string language = "en";
    std::string label;
    std::string out;
    std::string per_query;
    int threshold = 1;
};

void run_eval(const EvalOptions& opt) {
    Config config = load_effective_config(opt.global);
    auto lock = lock_output_dir(opt.out);

    std::vector<MetricSpec> specs;
    std::size_t start = 0;
    while (start <= opt.metrics.size()) {
        auto comma = opt.metrics.find(',', start);
        std::string item = comma == std::string::npos
                               ? opt.metrics.substr(start)
                               : opt.metrics.substr(start, comma - start);
        if (!item.empty()) specs.push_back(parse_metric_spec(item));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (specs.empty()) throw ValidationError("--metrics must name at least one metric");

    language_from_code(opt.language);  // reject unknown codes early
    RunFile run = load_run_file(opt.run);
    QrelSet qrels = load_qrels(opt.qrels, opt.threshold);
    std::string label = !opt.label.empty() ? opt.label : (!run.tag.empty() ? run.tag : "run");

    std::vector<MetricReport> reports = evaluate_run(run, qrels, specs, label, opt.language);
    write_report_csv(opt.out, reports);
    if (!opt.per_query.empty()) {
        write_text_file_atomic(opt.per_query, format_per_query_csv(reports));
    }
    std::fputs(render_report(reports).table.c_str(), stdout);

    Manifest manifest;
    manifest.command = "eval";
    manifest.config_digest = config.digest();
    manifest.inputs["qrels"] = opt.qrels;
    manifest.inputs["run"] = opt.run;
    manifest.outputs["metrics"] = opt.out;
    if (!opt.per_query.empty()) manifest.outputs["per_query"] = opt.per_query;
    manifest.params["label"] = label;
    manifest.params["language"] = opt.language;
    manifest.params["metrics"] = opt.metrics;
    manifest.params["threshold"] = std::to_string(opt.threshold);
    write_manifest(opt.out + ".manifest.json", manifest);
}

struct ReportOptions {
    GlobalOptions global;
    std::vector<std::string> inputs;
    std::string out;
    std::string csv;
};

void run_report(const ReportOptions& opt) {
    Config config = load_effective_config(opt.global);
    auto lock = lock_output_dir(opt.out);

    std::vector<std::string> paths;
    for (const auto& raw : opt.inputs) {
        std::size_t start = 0;
        while (start <= raw.size()) {
            auto comma = raw.find(',', start);
            std::string item = comma == std::string::npos ? raw.substr(start)
                                                          : raw.substr(start, comma - start);
            if (!item.empty()) paths.push_back(item);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    }
    if (paths.empty()) throw ValidationError("--in must name at least one metrics CSV");

    std::vector<MetricReport> cells;
    for (const auto& path : paths) {
        auto loaded = load_report_csv(path);
        cells.insert(cells.end(), loaded.begin(), loaded.end());
    }
    RenderedReport rendered = render_report(cells);
    write_text_file_atomic(opt.out, rendered.table);
    if (!opt.csv.empty()) write_text_file_atomic(opt.csv, rendered.csv);
    std::fputs(rendered.table.c_str(), stdout);

    Manifest manifest;
    manifest.command = "report";
    manifest.config_digest = config.digest();
    for (std::size_t i = 0; i < paths.size(); ++i) {
        manifest.inputs["in" + std::to_string(i)] = paths[i];
    }
    manifest.outputs["table"] = opt.out;
    if (!opt.csv.empty()) manifest.outputs["csv"] = opt.csv;
    write_manifest(opt.out + ".manifest.json", manifest);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-stage cross-lingual retrieval: BM25, listwise LLM reranking, evaluation"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--config", global.config_path, "key=value experiment config file");
    app.add_option("--cache-dir", global.cache_dir, "completion cache directory");

    auto index_opt = std::make_shared<IndexOptions>();
    CLI::App* index_cmd = app.add_subcommand("index", "build a BM25 inverted index");
    index_cmd->add_option("--passages", index_opt->passages, "passages file (JSON lines)")
        ->required();
    index_cmd->add_option("--tokenizer", index_opt->tokenizer, "english|whitespace");
    index_cmd->add_flag("--use-translation", index_opt->use_translation,
                        "index translated_text instead of text");
    index_cmd->add_option("--out", index_opt->out, "index artifact path")->required();
    index_cmd->add_option("--language", index_opt->language, "collection language code");
    index_cmd->add_option("--provenance", index_opt->provenance,
                          "native|translated|llm_translated");

    auto retrieve_opt = std::make_shared<RetrieveOptions>();
    CLI::App* retrieve_cmd = app.add_subcommand("retrieve", "BM25 first-stage retrieval");
    retrieve_cmd->add_option("--index", retrieve_opt->index, "index artifact")->required();
    retrieve_cmd->add_option("--queries", retrieve_opt->queries, "TSV queries file")->required();
    retrieve_cmd->add_option("--out", retrieve_opt->out, "output run file")->required();
    retrieve_cmd->add_option("--language", retrieve_opt->language, "query language code");
    retrieve_cmd->add_option("--tag", retrieve_opt->tag, "run tag");
    retrieve_cmd->add_option("--top-k", retrieve_opt->top_k, "candidates per query");
    retrieve_cmd->add_option("--k1", retrieve_opt->k1, "BM25 k1");
    retrieve_cmd->add_option("--b", retrieve_opt->b, "BM25 b");

    auto translate_opt = std::make_shared<TranslateOptions>();
    CLI::App* translate_cmd =
        app.add_subcommand("translate", "zero-shot LLM document translation");
    translate_cmd->add_option("--passages", translate_opt->passages, "native passages file")
        ->required();
    translate_cmd->add_option("--out", translate_opt->out, "translated passages file")
        ->required();
    translate_cmd->add_option("--backend", translate_opt->backend.spec, "provider:model spec")
        ->required();
    translate_cmd
        ->add_option("--language", translate_opt->language, "source language code (ha|so|sw|yo)")
        ->required();
    translate_cmd->add_option("--target", translate_opt->target, "target language code");
    translate_cmd->add_option("--workers", translate_opt->workers, "concurrent translations");
    translate_cmd->add_option("--scripted", translate_opt->backend.scripted_path,
                              "responses file for mock:scripted");

    auto rerank_opt = std::make_shared<RerankOptions>();
    CLI::App* rerank_cmd = app.add_subcommand("rerank", "listwise LLM reranking of a run file");
    rerank_cmd->add_option("--run", rerank_opt->run, "first-stage run file")->required();
    rerank_cmd->add_option("--passages", rerank_opt->passages, "passages file")->required();
    rerank_cmd->add_option("--queries", rerank_opt->queries, "TSV queries file")->required();
    rerank_cmd->add_option("--out", rerank_opt->out, "output run file")->required();
    rerank_cmd->add_option("--backend", rerank_opt->backend.spec, "provider:model spec")
        ->required();
    rerank_cmd->add_option("--trace", rerank_opt->trace,
                           "audit trace path (default <out>.trace.jsonl)");
    rerank_cmd->add_option("--tag", rerank_opt->tag, "run tag (default rerank-<model>)");
    rerank_cmd->add_option("--language", rerank_opt->language, "collection language code");
    rerank_cmd->add_option("--provenance", rerank_opt->provenance,
                           "passages provenance (default translated)");
    rerank_cmd->add_option("--window", rerank_opt->window, "sliding window size");
    rerank_cmd->add_option("--stride", rerank_opt->stride, "sliding window stride");
    rerank_cmd->add_option("--scripted", rerank_opt->backend.scripted_path,
                           "responses file for mock:scripted");
    rerank_cmd->add_option("--qrels", rerank_opt->backend.qrels_path,
                           "qrels file for mock:qrels");

    auto eval_opt = std::make_shared<EvalOptions>();
    CLI::App* eval_cmd = app.add_subcommand("eval", "score a run file against qrels");
    eval_cmd->add_option("--run", eval_opt->run, "run file")->required();
    eval_cmd->add_option("--qrels", eval_opt->qrels, "TREC qrels file")->required();
    eval_cmd->add_option("--out", eval_opt->out, "metrics CSV path")->required();
    eval_cmd->add_option("--metrics", eval_opt->metrics, "comma-separated metric ids");
    eval_cmd->add_option("--language", eval_opt->language, "language code for the report");
    eval_cmd->add_option("--label", eval_opt->label, "configuration label (default run tag)");
    eval_cmd->add_option("--per-query", eval_opt->per_query, "per-query detail CSV path");
    eval_cmd->add_option("--threshold", eval_opt->threshold, "relevance threshold for MRR");

    auto report_opt = std::make_shared<ReportOptions>();
    CLI::App* report_cmd = app.add_subcommand("report", "render a comparison table from CSVs");
    report_cmd->add_option("--in", report_opt->inputs, "metrics CSV files")->required();
    report_cmd->add_option("--out", report_opt->out, "table output path")->required();
    report_cmd->add_option("--csv", report_opt->csv, "merged CSV output path");

    std::string active = "xlrr";
    index_cmd->callback([&] { active = "index"; index_opt->global = global; run_index(*index_opt); });
    retrieve_cmd->callback(
        [&] { active = "retrieve"; retrieve_opt->global = global; run_retrieve(*retrieve_opt); });
    translate_cmd->callback(
        [&] { active = "translate"; translate_opt->global = global; run_translate(*translate_opt); });
    rerank_cmd->callback(
        [&] { active = "rerank"; rerank_opt->global = global; run_rerank(*rerank_opt); });
    eval_cmd->callback([&] { active = "eval"; eval_opt->global = global; run_eval(*eval_opt); });
    report_cmd->callback(
        [&] { active = "report"; report_opt->global = global; run_report(*report_opt); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "xlrr " << active << ": " << e.what() << "\n";
        return 2;
    }
    return 0;
}
