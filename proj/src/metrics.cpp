#include "xlrr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>

#include "xlrr/errors.hpp"
#include "xlrr/util.hpp"

namespace xlrr {

namespace {

double log2_rank(std::size_t rank) {
    return std::log2(static_cast<double>(rank) + 1.0);
}

std::string format_value(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", value);
    return buf;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

// Splits one CSV line honoring double-quoted fields.
std::vector<std::string> csv_split(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    std::size_t i = 0;
    while (i < line.size()) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current += '"';
                    i += 2;
                } else {
                    quoted = false;
                    ++i;
                }
            } else {
                current += c;
                ++i;
            }
        } else if (c == '"' && current.empty()) {
            quoted = true;
            ++i;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
            ++i;
        } else {
            current += c;
            ++i;
        }
    }
    if (quoted) {
        throw ParseError("line " + std::to_string(line_no) + ": unterminated quoted field");
    }
    fields.push_back(std::move(current));
    return fields;
}

using MetricFn = double (*)(const RankedList&, const QrelSet&, int);

MetricFn metric_function(const std::string& name) {
    if (name == "ndcg") return &ndcg_at_k;
    if (name == "mrr") return &mrr_at_k;
    throw ValidationError("unknown metric \"" + name + "\" (expected ndcg or mrr)");
}

}  // namespace

double ndcg_at_k(const RankedList& run, const QrelSet& qrels, int k) {
    if (k < 1) throw ValidationError("metric cutoff must be >= 1");
    auto judged = qrels.judgments().find(run.query_id);
    if (judged == qrels.judgments().end()) return 0.0;

    std::vector<int> grades;
    grades.reserve(judged->second.size());
    for (const auto& [doc_id, grade] : judged->second) grades.push_back(grade);
    std::sort(grades.begin(), grades.end(), std::greater<int>());

    double idcg = 0.0;
    for (std::size_t i = 0; i < grades.size() && i < static_cast<std::size_t>(k); ++i) {
        if (grades[i] <= 0) break;
        idcg += static_cast<double>(grades[i]) / log2_rank(i + 1);
    }
    if (idcg == 0.0) return 0.0;

    double dcg = 0.0;
    for (std::size_t i = 0; i < run.entries.size() && i < static_cast<std::size_t>(k); ++i) {
        int grade = qrels.grade(run.query_id, run.entries[i].doc_id);
        if (grade > 0) dcg += static_cast<double>(grade) / log2_rank(i + 1);
    }
    return dcg / idcg;
}

double mrr_at_k(const RankedList& run, const QrelSet& qrels, int k) {
    if (k < 1) throw ValidationError("metric cutoff must be >= 1");
    for (std::size_t i = 0; i < run.entries.size() && i < static_cast<std::size_t>(k); ++i) {
        if (qrels.grade(run.query_id, run.entries[i].doc_id) >= qrels.relevance_threshold()) {
            return 1.0 / static_cast<double>(i + 1);
        }
    }
    return 0.0;
}

std::string MetricSpec::display() const {
    std::string label = name == "ndcg" ? "nDCG" : name == "mrr" ? "MRR" : name;
    return label + "@" + std::to_string(cutoff);
}

MetricSpec parse_metric_spec(const std::string& text) {
    auto at = text.find('@');
    if (at == std::string::npos || at == 0 || at + 1 >= text.size()) {
        throw ValidationError("metric must look like \"ndcg@10\" or \"mrr@100\", got \"" + text +
                              "\"");
    }
    MetricSpec spec;
    spec.name = text.substr(0, at);
    std::transform(spec.name.begin(), spec.name.end(), spec.name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    metric_function(spec.name);  // rejects unknown names
    const std::string digits = text.substr(at + 1);
    for (char c : digits) {
        if (c < '0' || c > '9') {
            throw ValidationError("metric cutoff must be a positive integer, got \"" + text +
                                  "\"");
        }
    }
    if (digits.size() > 6) throw ValidationError("metric cutoff too large in \"" + text + "\"");
    spec.cutoff = std::stoi(digits);
    if (spec.cutoff < 1) throw ValidationError("metric cutoff must be >= 1 in \"" + text + "\"");
    return spec;
}

std::vector<MetricReport> evaluate_run(const RunFile& run, const QrelSet& qrels,
                                       const std::vector<MetricSpec>& metrics,
                                       const std::string& config_label,
                                       const std::string& language) {
    std::vector<MetricReport> reports;
    reports.reserve(metrics.size());
    for (const auto& spec : metrics) {
        MetricFn fn = metric_function(spec.name);
        MetricReport report;
        report.config = config_label;
        report.metric = spec.id();
        report.language = language;
        double sum = 0.0;
        for (const auto& [query_id, docs] : qrels.judgments()) {
            const RankedList* list = run.find(query_id);
            double value = list != nullptr ? fn(*list, qrels, spec.cutoff) : 0.0;
            report.per_query.emplace_back(query_id, value);
            sum += value;
        }
        report.mean =
            report.per_query.empty() ? 0.0 : sum / static_cast<double>(report.per_query.size());
        reports.push_back(std::move(report));
    }
    return reports;
}

RenderedReport render_report(const std::vector<MetricReport>& reports) {
    if (reports.empty()) throw ValidationError("no report cells to render");

    std::vector<std::string> configs;
    std::vector<std::string> metrics;
    std::vector<std::string> languages;
    std::map<std::pair<std::string, std::string>, std::map<std::string, double>> cells;
    auto remember = [](std::vector<std::string>& order, const std::string& value) {
        if (std::find(order.begin(), order.end(), value) == order.end()) order.push_back(value);
    };
    for (const auto& report : reports) {
        remember(configs, report.config);
        remember(metrics, report.metric);
        remember(languages, report.language);
        auto& row = cells[{report.config, report.metric}];
        if (!row.emplace(report.language, report.mean).second) {
            throw ValidationError("duplicate report cell: " + report.config + " / " +
                                  report.metric + " / " + report.language);
        }
    }
    for (const auto& config : configs) {
        for (const auto& metric : metrics) {
            auto row = cells.find({config, metric});
            for (const auto& language : languages) {
                if (row == cells.end() || row->second.find(language) == row->second.end()) {
                    throw ValidationError("configuration \"" + config + "\" is missing " +
                                          metric + " for language \"" + language + "\"");
                }
            }
        }
    }

    const std::size_t cell_width = 6;  // "0.1234"
    std::size_t label_width = std::string("config").size();
    for (const auto& config : configs) label_width = std::max(label_width, config.size());
    const std::size_t group_width = languages.size() * (cell_width + 1) - 1;

    auto pad = [](const std::string& s, std::size_t width) {
        std::string out = s;
        if (out.size() < width) out.append(width - out.size(), ' ');
        return out;
    };

    std::string table;
    // Row 1: metric group headers. Row 2: language codes under each group.
    table += pad("config", label_width);
    for (const auto& metric : metrics) {
        MetricSpec spec = parse_metric_spec(metric);
        table += "  " + pad(spec.display(), group_width);
    }
    while (!table.empty() && table.back() == ' ') table.pop_back();
    table += '\n';
    table += pad("", label_width);
    for (std::size_t m = 0; m < metrics.size(); ++m) {
        table += "  ";
        for (std::size_t l = 0; l < languages.size(); ++l) {
            if (l > 0) table += ' ';
            table += pad(languages[l], cell_width);
        }
    }
    while (!table.empty() && table.back() == ' ') table.pop_back();
    table += '\n';
    for (const auto& config : configs) {
        table += pad(config, label_width);
        for (const auto& metric : metrics) {
            table += "  ";
            const auto& row = cells.at({config, metric});
            for (std::size_t l = 0; l < languages.size(); ++l) {
                if (l > 0) table += ' ';
                table += format_value(row.at(languages[l]));
            }
        }
        table += '\n';
    }

    RenderedReport out;
    out.table = std::move(table);

    std::string csv = "config,metric,language,value\n";
    for (const auto& config : configs) {
        for (const auto& metric : metrics) {
            const auto& row = cells.at({config, metric});
            for (const auto& language : languages) {
                csv += csv_escape(config) + "," + csv_escape(metric) + "," +
                       csv_escape(language) + "," + format_value(row.at(language)) + "\n";
            }
        }
    }
    out.csv = std::move(csv);
    return out;
}

std::string format_report_csv(const std::vector<MetricReport>& reports) {
    std::string csv = "config,metric,language,value\n";
    for (const auto& report : reports) {
        csv += csv_escape(report.config) + "," + csv_escape(report.metric) + "," +
               csv_escape(report.language) + "," + format_value(report.mean) + "\n";
    }
    return csv;
}

std::vector<MetricReport> load_report_csv(const std::string& path) {
    const std::string content = read_text_file(path);
    std::vector<MetricReport> reports;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < content.size()) {
        auto newline = content.find('\n', start);
        std::string line = newline == std::string::npos ? content.substr(start)
                                                        : content.substr(start, newline - start);
        start = newline == std::string::npos ? content.size() : newline + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++line_no;
        if (line_no == 1) {
            if (line != "config,metric,language,value") {
                throw ParseError(path + ": expected header \"config,metric,language,value\"");
            }
            continue;
        }
        if (line.empty()) continue;
        auto fields = csv_split(line, line_no);
        if (fields.size() != 4) {
            throw ParseError(path + ": line " + std::to_string(line_no) + ": expected 4 fields, got " +
                             std::to_string(fields.size()));
        }
        MetricReport report;
        report.config = fields[0];
        report.metric = fields[1];
        report.language = fields[2];
        try {
            std::size_t consumed = 0;
            report.mean = std::stod(fields[3], &consumed);
            if (consumed != fields[3].size()) throw std::invalid_argument(fields[3]);
        } catch (const std::exception&) {
            throw ParseError(path + ": line " + std::to_string(line_no) +
                             ": value is not a number: \"" + fields[3] + "\"");
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

void write_report_csv(const std::string& path, const std::vector<MetricReport>& reports) {
    write_text_file_atomic(path, format_report_csv(reports));
}

std::string format_per_query_csv(const std::vector<MetricReport>& reports) {
    std::string csv = "config,metric,language,query_id,value\n";
    char buf[32];
    for (const auto& report : reports) {
        for (const auto& [query_id, value] : report.per_query) {
            std::snprintf(buf, sizeof(buf), "%.6f", value);
            csv += csv_escape(report.config) + "," + csv_escape(report.metric) + "," +
                   csv_escape(report.language) + "," + csv_escape(query_id) + "," + buf + "\n";
        }
    }
    return csv;
}

}  // namespace xlrr
