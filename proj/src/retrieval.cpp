#include "mqr/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "mqr/errors.hpp"
#include "mqr/hash.hpp"
#include "mqr/text.hpp"

namespace mqr {

using nlohmann::json;

void SparseIndexConfig::validate() const {
    if (k1 < 0.0) throw config_error("sparse.k1 must be >= 0, got " + std::to_string(k1));
    if (b < 0.0 || b > 1.0) throw config_error("sparse.b must be in [0,1], got " + std::to_string(b));
    if (top_k < 1) throw config_error("sparse.top_k must be >= 1, got " + std::to_string(top_k));
}

SparseIndex SparseIndex::build(const Corpus& corpus, const SparseIndexConfig& config) {
    config.validate();
    if (corpus.empty()) throw validation_error("cannot build sparse index over an empty corpus");

    SparseIndex index;
    index.config_ = config;
    std::size_t total_len = 0;
    for (const Document& doc : corpus.docs()) {
        std::vector<std::string> tokens = tokenize(doc.text);
        std::map<std::string, std::size_t> tf;
        for (const std::string& t : tokens) ++tf[t];

        std::size_t ordinal = index.doc_ids_.size();
        index.doc_ids_.push_back(doc.id);
        index.doc_lengths_.push_back(tokens.size());
        total_len += tokens.size();
        for (const auto& [term, count] : tf) {
            index.postings_[term].push_back({ordinal, count});
        }
    }
    index.avg_doc_len_ =
        static_cast<double>(total_len) / static_cast<double>(index.doc_ids_.size());
    return index;
}

RankedList SparseIndex::search(std::string_view query, int top_k) const {
    if (top_k < 1) throw std::invalid_argument("top_k must be >= 1");
    RankedList result;
    result.query_text = std::string(query);
    result.source = "sparse";

    std::vector<std::string> terms = tokenize(query);
    if (terms.empty()) return result;

    const double n_docs = static_cast<double>(doc_ids_.size());
    std::unordered_map<std::size_t, double> scores;
    for (const std::string& term : terms) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const auto& plist = it->second;
        const double df = static_cast<double>(plist.size());
        const double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
        for (const Posting& p : plist) {
            const double tf = static_cast<double>(p.tf);
            const double norm_len =
                static_cast<double>(doc_lengths_[p.doc]) / avg_doc_len_;
            const double tf_part =
                tf * (config_.k1 + 1.0) / (tf + config_.k1 * (1.0 - config_.b + config_.b * norm_len));
            scores[p.doc] += idf * tf_part;
        }
    }

    std::vector<std::pair<std::size_t, double>> hits(scores.begin(), scores.end());
    std::sort(hits.begin(), hits.end(), [this](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return doc_ids_[a.first] < doc_ids_[b.first];
    });
    if (hits.size() > static_cast<std::size_t>(top_k)) hits.resize(static_cast<std::size_t>(top_k));

    int rank = 1;
    for (const auto& [ordinal, score] : hits) {
        result.entries.push_back({doc_ids_[ordinal], score, rank++});
    }
    return result;
}

std::size_t SparseIndex::doc_length(const std::string& doc_id) const {
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        if (doc_ids_[i] == doc_id) return doc_lengths_[i];
    }
    throw validation_error("unknown document id '" + doc_id + "'");
}

std::map<std::string, std::vector<std::pair<std::string, std::size_t>>>
SparseIndex::postings_snapshot() const {
    std::map<std::string, std::vector<std::pair<std::string, std::size_t>>> snapshot;
    for (const auto& [term, plist] : postings_) {
        auto& out = snapshot[term];
        for (const Posting& p : plist) out.emplace_back(doc_ids_[p.doc], p.tf);
    }
    return snapshot;
}

void DenseIndexConfig::validate() const {
    if (dimension < 1)
        throw config_error("dense.dimension must be >= 1, got " + std::to_string(dimension));
    if (top_k < 1) throw config_error("dense.top_k must be >= 1, got " + std::to_string(top_k));
}

EmbeddingStore EmbeddingStore::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    EmbeddingStore store;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object() || !record.contains("id") ||
            !record.contains("vector")) {
            throw parse_error(path + " line " + std::to_string(line_no) +
                              ": expected {\"id\", \"vector\"}");
        }
        std::string key = record["id"].get<std::string>();
        std::vector<double> vec = record["vector"].get<std::vector<double>>();
        if (!store.vectors_.emplace(std::move(key), std::move(vec)).second) {
            throw validation_error(path + " line " + std::to_string(line_no) +
                                   ": duplicate embedding key");
        }
    }
    return store;
}

const std::vector<double>& EmbeddingStore::at(const std::string& key) const {
    auto it = vectors_.find(key);
    if (it == vectors_.end()) throw validation_error("no embedding for key '" + key + "'");
    return it->second;
}

Embedding embed_text(std::string_view text, const DenseIndexConfig& config,
                     const EmbeddingStore* store) {
    config.validate();
    if (config.source == EmbeddingSource::file_provided) {
        if (store == nullptr) throw validation_error("file-provided embeddings need a store");
        const std::vector<double>& vec = store->at(std::string(text));
        if (static_cast<int>(vec.size()) != config.dimension) {
            throw validation_error("embedding for '" + std::string(text) + "' has dimension " +
                                   std::to_string(vec.size()) + ", expected " +
                                   std::to_string(config.dimension));
        }
        bool zero = std::all_of(vec.begin(), vec.end(), [](double v) { return v == 0.0; });
        return {vec, zero};
    }

    Embedding out;
    out.values.assign(static_cast<std::size_t>(config.dimension), 0.0);
    std::vector<std::string> tokens = tokenize(text);
    if (tokens.empty()) {
        out.zero = true;
        return out;
    }
    for (const std::string& token : tokens) {
        std::size_t bucket = fnv1a64(token) % static_cast<std::uint64_t>(config.dimension);
        out.values[bucket] += 1.0;
    }
    double norm = 0.0;
    for (double v : out.values) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : out.values) v /= norm;
    return out;
}

DenseIndex DenseIndex::build(const Corpus& corpus, const DenseIndexConfig& config,
                             const EmbeddingStore* store) {
    config.validate();
    if (corpus.empty()) throw validation_error("cannot build dense index over an empty corpus");
    if (config.source == EmbeddingSource::file_provided && store == nullptr) {
        throw validation_error("file-provided embeddings need a store");
    }

    DenseIndex index;
    index.config_ = config;
    index.store_ = store;
    for (const Document& doc : corpus.docs()) {
        std::string_view key =
            config.source == EmbeddingSource::file_provided ? std::string_view(doc.id)
                                                            : std::string_view(doc.text);
        Embedding emb;
        try {
            emb = embed_text(key, config, store);
        } catch (const validation_error& e) {
            throw validation_error("document '" + doc.id + "': " + e.what());
        }
        index.by_id_.emplace(doc.id, index.doc_ids_.size());
        index.doc_ids_.push_back(doc.id);
        index.vectors_.push_back(std::move(emb.values));
    }
    return index;
}

RankedList DenseIndex::search(std::string_view query, int top_k) const {
    if (top_k < 1) throw std::invalid_argument("top_k must be >= 1");
    Embedding q = embed_text(query, config_, store_);

    RankedList result;
    result.query_text = std::string(query);
    result.source = "dense";

    std::vector<std::pair<std::size_t, double>> hits;
    hits.reserve(doc_ids_.size());
    for (std::size_t i = 0; i < vectors_.size(); ++i) {
        double dot = 0.0;
        for (std::size_t d = 0; d < q.values.size(); ++d) dot += q.values[d] * vectors_[i][d];
        hits.emplace_back(i, dot);
    }
    std::sort(hits.begin(), hits.end(), [this](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return doc_ids_[a.first] < doc_ids_[b.first];
    });
    if (hits.size() > static_cast<std::size_t>(top_k)) hits.resize(static_cast<std::size_t>(top_k));

    int rank = 1;
    for (const auto& [ordinal, score] : hits) {
        result.entries.push_back({doc_ids_[ordinal], score, rank++});
    }
    return result;
}

const std::vector<double>& DenseIndex::vector_of(const std::string& doc_id) const {
    auto it = by_id_.find(doc_id);
    if (it == by_id_.end()) throw validation_error("unknown document id '" + doc_id + "'");
    return vectors_[it->second];
}

}  // namespace mqr
