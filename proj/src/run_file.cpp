#include "xlrr/run_file.hpp"

#include "xlrr/errors.hpp"
#include "xlrr/util.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace xlrr {

const RankedList* RunFile::find(const std::string& query_id) const {
    for (const auto& list : lists) {
        if (list.query_id == query_id) {
            return &list;
        }
    }
    return nullptr;
}

std::string format_run(const std::vector<RankedList>& lists) {
    std::string out;
    char buf[64];
    for (const auto& list : lists) {
        int rank = 1;
        for (const auto& entry : list.entries) {
            std::snprintf(buf, sizeof(buf), "%d %.6f", rank, entry.score);
            out += list.query_id;
            out += " Q0 ";
            out += entry.doc_id;
            out += ' ';
            out += buf;
            out += ' ';
            out += list.stage_tag;
            out += '\n';
            ++rank;
        }
    }
    return out;
}

void write_run_file(const std::filesystem::path& path, const std::vector<RankedList>& lists) {
    write_text_file_atomic(path, format_run(lists));
}

RunFile load_run_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("file not found: " + path.string());
    }
    RunFile run;
    std::set<std::string> closed_queries;
    std::string line;
    size_t line_no = 0;
    auto fail = [&](const std::string& what) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string qid, iteration, docid, rank_str, score_str, tag, extra;
        if (!(fields >> qid)) {
            continue;
        }
        if (!(fields >> iteration >> docid >> rank_str >> score_str >> tag)) {
            fail("expected 6 fields: qid iter docid rank score tag");
        }
        if (fields >> extra) {
            fail("trailing fields");
        }
        int rank = 0;
        double score = 0.0;
        try {
            size_t used = 0;
            rank = std::stoi(rank_str, &used);
            if (used != rank_str.size()) throw std::invalid_argument(rank_str);
            score = std::stod(score_str, &used);
            if (used != score_str.size()) throw std::invalid_argument(score_str);
        } catch (const std::exception&) {
            fail("non-numeric rank or score");
        }
        RankedList* list = run.lists.empty() || run.lists.back().query_id != qid
                               ? nullptr
                               : &run.lists.back();
        if (!list) {
            if (closed_queries.count(qid)) {
                fail("query \"" + qid + "\" appears in two separate blocks");
            }
            if (!run.lists.empty()) {
                closed_queries.insert(run.lists.back().query_id);
            }
            run.lists.push_back(RankedList{qid, {}, tag});
            list = &run.lists.back();
        }
        int expected_rank = static_cast<int>(list->entries.size()) + 1;
        if (rank != expected_rank) {
            fail("rank " + rank_str + " out of order (expected " +
                 std::to_string(expected_rank) + ")");
        }
        if (!list->entries.empty() && score > list->entries.back().score) {
            fail("score increases within query \"" + qid + "\"");
        }
        for (const auto& e : list->entries) {
            if (e.doc_id == docid) {
                fail("duplicate doc_id \"" + docid + "\" for query \"" + qid + "\"");
            }
        }
        list->entries.push_back(RankedEntry{docid, score});
        run.tag = tag;
    }
    return run;
}

} // namespace xlrr
