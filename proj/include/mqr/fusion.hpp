#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "mqr/retrieval.hpp"

namespace mqr {

struct Appearance {
    std::size_t list_index = 0;
    double score = 0.0;
    int rank = 0;
};

/// Per-document aggregates across the M input lists:
///   P = 1 / sum_j (1 / r_j)   (harmonic rank aggregate, lower is better)
///   S = max_j s_j             (strongest score observed anywhere)
struct FusionStats {
    std::string doc_id;
    double P = 0.0;
    double S = 0.0;
    std::vector<Appearance> appearances;
};

struct FusedEntry {
    std::string doc_id;
    double P = 0.0;
    double S = 0.0;
    int fused_rank = 0;  // 1-based, contiguous
};

struct FusedRanking {
    std::vector<FusedEntry> entries;
    /// Set when the input lists carried more than one retriever tag. Scores
    /// from different retrievers are not comparable; the caller decides how
    /// loudly to complain.
    bool mixed_sources = false;
};

/// One FusionStats per distinct document across all lists. Throws
/// std::invalid_argument if `lists` is empty or a list has non-contiguous
/// ranks or repeated documents.
std::map<std::string, FusionStats> aggregate_stats(const std::vector<RankedList>& lists);

/// Rank-score fusion: candidates are every document retrieved by any list,
/// sorted lexicographically by (P ascending, S descending, doc_id ascending)
/// and truncated to top_k. Rank consensus decides; scores only break ties.
FusedRanking rsf_fuse(const std::vector<RankedList>& lists, int top_k);

/// sum_j 1 / (smoothing + r_j) over a document's appearances.
double rrf_score(const FusionStats& stats, double smoothing);

/// Reciprocal rank fusion baseline: documents sorted by rrf_score
/// descending, ties by ascending doc id. Entries still carry the (P, S)
/// aggregates for inspection.
FusedRanking rrf_fuse(const std::vector<RankedList>& lists, int top_k, double smoothing = 60.0);

}  // namespace mqr
