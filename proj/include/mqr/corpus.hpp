#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mqr {

struct Document {
    std::string id;
    std::string text;
    bool operator==(const Document&) const = default;
};

/// Ordered list of sub-queries emitted for one user query. Never empty,
/// no sub-query is blank.
struct SubQuerySet {
    std::vector<std::string> sub_queries;
    bool operator==(const SubQuerySet&) const = default;
};

struct QueryInstance {
    std::string id;
    std::string text;
    /// Prior (question, answer) turns, oldest first. Empty on turn 1.
    std::vector<std::pair<std::string, std::string>> history;
    /// Ids of the documents labeled as correct evidence. Never empty.
    std::vector<std::string> gold_ids;
    /// Optional pre-supplied action pool; may be empty, in which case
    /// candidates are generated heuristically downstream.
    std::vector<SubQuerySet> candidates;
};

class Corpus {
public:
    /// Throws validation_error on empty id/text or duplicate id.
    void add(Document doc);

    bool contains(const std::string& id) const { return by_id_.count(id) > 0; }
    const Document& at(const std::string& id) const;

    std::size_t size() const noexcept { return docs_.size(); }
    bool empty() const noexcept { return docs_.empty(); }
    const std::vector<Document>& docs() const noexcept { return docs_; }

    bool operator==(const Corpus& other) const { return docs_ == other.docs_; }

private:
    std::vector<Document> docs_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

/// Line-delimited JSON, one {"id", "text"} record per line.
Corpus load_corpus(const std::string& path);
void save_corpus(const std::string& path, const Corpus& corpus);

/// Line-delimited JSON records
///   {"id", "text", "history": [[q, a], ...], "gold_ids": [...], "candidates": [[...], ...]}
/// with history/candidates optional. Every gold id must resolve in `corpus`.
std::vector<QueryInstance> load_queries(const std::string& path, const Corpus& corpus);

struct ValidationReport {
    struct QuerySummary {
        std::string query_id;
        std::size_t gold_count = 0;
        std::size_t candidate_count = 0;
        std::size_t history_depth = 0;
    };
    std::vector<QuerySummary> queries;
    std::vector<std::string> warnings;
    std::vector<std::string> errors;

    bool pipeline_ready() const noexcept { return errors.empty(); }
};

/// Summarizes per-query gold counts, candidate-pool sizes and history depth.
/// Findings are reported, not thrown.
ValidationReport validate_dataset(const Corpus& corpus, const std::vector<QueryInstance>& queries);

}  // namespace mqr
