#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mqr/corpus.hpp"

namespace mqr {

struct RankedEntry {
    std::string doc_id;
    double score = 0.0;
    int rank = 0;  // 1-based, contiguous
};

/// Ordered retrieval output for one query. Scores are non-increasing with
/// rank; ties are broken by ascending doc id; each document appears once.
struct RankedList {
    std::string query_text;
    std::string source;  // retriever tag, used to flag mixed-retriever fusion
    std::vector<RankedEntry> entries;
};

struct SparseIndexConfig {
    double k1 = 0.9;
    double b = 0.4;
    int top_k = 10;

    void validate() const;  // throws config_error
};

/// In-memory inverted index with Okapi BM25 scoring.
///
/// idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)), which stays non-negative
/// on tiny corpora. Repeated query terms contribute once per occurrence.
class SparseIndex {
public:
    static SparseIndex build(const Corpus& corpus, const SparseIndexConfig& config);

    /// At most top_k entries, BM25 descending, ties by ascending doc id.
    /// Documents matching no query term are excluded. An empty query (after
    /// tokenization) yields an empty list.
    RankedList search(std::string_view query, int top_k) const;
    RankedList search(std::string_view query) const { return search(query, config_.top_k); }

    const SparseIndexConfig& config() const noexcept { return config_; }
    std::size_t doc_count() const noexcept { return doc_ids_.size(); }
    std::size_t vocabulary_size() const noexcept { return postings_.size(); }
    double avg_doc_length() const noexcept { return avg_doc_len_; }
    std::size_t doc_length(const std::string& doc_id) const;

    /// Postings in a deterministic, comparable form: term -> [(doc_id, tf)].
    std::map<std::string, std::vector<std::pair<std::string, std::size_t>>> postings_snapshot()
        const;

private:
    struct Posting {
        std::size_t doc = 0;  // ordinal into doc_ids_
        std::size_t tf = 0;
    };

    SparseIndexConfig config_;
    std::vector<std::string> doc_ids_;  // corpus order == ascending insertion
    std::vector<std::size_t> doc_lengths_;
    double avg_doc_len_ = 0.0;
    std::map<std::string, std::vector<Posting>> postings_;
};

enum class EmbeddingSource { hashed_features, file_provided };

struct DenseIndexConfig {
    int dimension = 64;
    int top_k = 10;
    EmbeddingSource source = EmbeddingSource::hashed_features;

    void validate() const;  // throws config_error
};

/// Vectors loaded from a line-delimited {"id", "vector"} file. Keys are
/// document ids, or literal query strings for query-side lookups.
class EmbeddingStore {
public:
    static EmbeddingStore load(const std::string& path);

    bool contains(const std::string& key) const { return vectors_.count(key) > 0; }
    const std::vector<double>& at(const std::string& key) const;
    std::size_t size() const noexcept { return vectors_.size(); }

private:
    std::unordered_map<std::string, std::vector<double>> vectors_;
};

struct Embedding {
    std::vector<double> values;
    bool zero = false;  // set when the input produced no features
};

/// hashed_features: term-frequency feature hashing (FNV-1a buckets) followed
/// by L2 normalization; deterministic. file_provided: exact lookup of `text`
/// as key in `store` (pass the document id when embedding a document).
Embedding embed_text(std::string_view text, const DenseIndexConfig& config,
                     const EmbeddingStore* store = nullptr);

/// Exact (brute-force) inner-product search over per-document vectors.
class DenseIndex {
public:
    static DenseIndex build(const Corpus& corpus, const DenseIndexConfig& config,
                            const EmbeddingStore* store = nullptr);

    /// All documents scored; inner product descending, ties by ascending
    /// doc id; truncated to top_k.
    RankedList search(std::string_view query, int top_k) const;
    RankedList search(std::string_view query) const { return search(query, config_.top_k); }

    const DenseIndexConfig& config() const noexcept { return config_; }
    std::size_t doc_count() const noexcept { return doc_ids_.size(); }
    const std::vector<double>& vector_of(const std::string& doc_id) const;

private:
    DenseIndexConfig config_;
    const EmbeddingStore* store_ = nullptr;  // required for file_provided queries
    std::vector<std::string> doc_ids_;
    std::vector<std::vector<double>> vectors_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

}  // namespace mqr
