#include "mqr/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mqr/errors.hpp"
#include "mqr/text.hpp"

namespace mqr {

using nlohmann::json;

void Corpus::add(Document doc) {
    if (doc.id.empty()) throw validation_error("document with empty id");
    if (doc.text.empty()) throw validation_error("document '" + doc.id + "' has empty text");
    auto [it, inserted] = by_id_.emplace(doc.id, docs_.size());
    if (!inserted) throw validation_error("duplicate document id '" + doc.id + "'");
    docs_.push_back(std::move(doc));
}

const Document& Corpus::at(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw validation_error("unknown document id '" + id + "'");
    return docs_[it->second];
}

namespace {

// Calls fn(line_number, parsed_json) for every non-blank line.
template <typename Fn>
void for_each_jsonl_record(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object()) {
            throw parse_error(path + " line " + std::to_string(line_no) + ": not a JSON object");
        }
        fn(line_no, record);
    }
}

std::string require_string(const json& record, const char* key, const std::string& path,
                           std::size_t line_no) {
    if (!record.contains(key) || !record[key].is_string()) {
        throw parse_error(path + " line " + std::to_string(line_no) + ": missing string field '" +
                          key + "'");
    }
    return record[key].get<std::string>();
}

}  // namespace

Corpus load_corpus(const std::string& path) {
    Corpus corpus;
    std::unordered_map<std::string, std::size_t> first_line;
    for_each_jsonl_record(path, [&](std::size_t line_no, const json& record) {
        Document doc{require_string(record, "id", path, line_no),
                     require_string(record, "text", path, line_no)};
        auto [it, inserted] = first_line.emplace(doc.id, line_no);
        if (!inserted) {
            throw validation_error(path + ": duplicate document id '" + doc.id + "' (lines " +
                                   std::to_string(it->second) + " and " + std::to_string(line_no) +
                                   ")");
        }
        if (doc.text.empty()) {
            throw validation_error(path + " line " + std::to_string(line_no) + ": document '" +
                                   doc.id + "' has empty text");
        }
        corpus.add(std::move(doc));
    });
    if (corpus.empty()) throw validation_error(path + ": empty corpus");
    return corpus;
}

void save_corpus(const std::string& path, const Corpus& corpus) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path + "'");
    for (const Document& doc : corpus.docs()) {
        out << json{{"id", doc.id}, {"text", doc.text}}.dump() << '\n';
    }
}

std::vector<QueryInstance> load_queries(const std::string& path, const Corpus& corpus) {
    std::vector<QueryInstance> queries;
    std::set<std::string> seen_ids;
    for_each_jsonl_record(path, [&](std::size_t line_no, const json& record) {
        QueryInstance q;
        q.id = require_string(record, "id", path, line_no);
        q.text = require_string(record, "text", path, line_no);
        if (!seen_ids.insert(q.id).second) {
            throw validation_error(path + " line " + std::to_string(line_no) +
                                   ": duplicate query id '" + q.id + "'");
        }

        if (record.contains("history")) {
            for (const json& turn : record["history"]) {
                if (!turn.is_array() || turn.size() != 2 || !turn[0].is_string() ||
                    !turn[1].is_string()) {
                    throw parse_error(path + " line " + std::to_string(line_no) +
                                      ": history turns must be [question, answer] string pairs");
                }
                q.history.emplace_back(turn[0].get<std::string>(), turn[1].get<std::string>());
            }
        }

        if (!record.contains("gold_ids") || !record["gold_ids"].is_array() ||
            record["gold_ids"].empty()) {
            throw validation_error(path + " line " + std::to_string(line_no) + ": query '" +
                                   q.id + "' needs a non-empty gold_ids array");
        }
        std::set<std::string> gold_seen;
        for (const json& gid : record["gold_ids"]) {
            std::string gold = gid.get<std::string>();
            if (!corpus.contains(gold)) {
                throw validation_error(path + " line " + std::to_string(line_no) + ": query '" +
                                       q.id + "' references unknown gold document '" + gold + "'");
            }
            if (gold_seen.insert(gold).second) q.gold_ids.push_back(std::move(gold));
        }

        if (record.contains("candidates")) {
            for (const json& cand : record["candidates"]) {
                SubQuerySet set;
                for (const json& sq : cand) {
                    std::string text(trim(sq.get<std::string>()));
                    if (text.empty()) {
                        throw validation_error(path + " line " + std::to_string(line_no) +
                                               ": query '" + q.id +
                                               "' has a candidate with an empty sub-query");
                    }
                    set.sub_queries.push_back(std::move(text));
                }
                if (set.sub_queries.empty()) {
                    throw validation_error(path + " line " + std::to_string(line_no) +
                                           ": query '" + q.id + "' has an empty candidate set");
                }
                q.candidates.push_back(std::move(set));
            }
        }
        queries.push_back(std::move(q));
    });
    return queries;
}

ValidationReport validate_dataset(const Corpus& corpus, const std::vector<QueryInstance>& queries) {
    ValidationReport report;
    for (const QueryInstance& q : queries) {
        ValidationReport::QuerySummary summary;
        summary.query_id = q.id;
        summary.gold_count = q.gold_ids.size();
        summary.candidate_count = q.candidates.size();
        summary.history_depth = q.history.size();
        report.queries.push_back(summary);

        if (q.gold_ids.empty()) {
            report.errors.push_back("query '" + q.id + "' has no gold documents");
        }
        for (const std::string& gold : q.gold_ids) {
            if (!corpus.contains(gold)) {
                report.errors.push_back("query '" + q.id + "' references unknown gold document '" +
                                        gold + "'");
            }
        }
        if (q.candidates.empty()) {
            report.warnings.push_back("query '" + q.id +
                                      "': no candidate pool; heuristic generation required");
        }
    }
    return report;
}

}  // namespace mqr
