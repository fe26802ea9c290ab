#include "mqr/fusion.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace mqr {

namespace {

// Ranks must run 1..n and documents must be distinct. Scores are taken as
// given; external lists may carry score scales where monotonicity does not
// hold.
void check_list(const RankedList& list, std::size_t list_index) {
    int expected_rank = 1;
    std::set<std::string> seen;
    for (const RankedEntry& e : list.entries) {
        if (e.rank != expected_rank) {
            throw std::invalid_argument("list " + std::to_string(list_index) +
                                        ": ranks must be contiguous from 1, found rank " +
                                        std::to_string(e.rank) + " at position " +
                                        std::to_string(expected_rank));
        }
        if (!seen.insert(e.doc_id).second) {
            throw std::invalid_argument("list " + std::to_string(list_index) +
                                        ": duplicate document '" + e.doc_id + "'");
        }
        ++expected_rank;
    }
}

bool has_mixed_sources(const std::vector<RankedList>& lists) {
    std::set<std::string> tags;
    for (const RankedList& list : lists) {
        if (!list.source.empty()) tags.insert(list.source);
    }
    return tags.size() > 1;
}

}  // namespace

std::map<std::string, FusionStats> aggregate_stats(const std::vector<RankedList>& lists) {
    if (lists.empty()) throw std::invalid_argument("aggregate_stats needs at least one list");

    std::map<std::string, FusionStats> stats;
    for (std::size_t j = 0; j < lists.size(); ++j) {
        check_list(lists[j], j);
        for (const RankedEntry& e : lists[j].entries) {
            FusionStats& s = stats[e.doc_id];
            if (s.appearances.empty()) {
                s.doc_id = e.doc_id;
                s.S = e.score;
            } else {
                s.S = std::max(s.S, e.score);
            }
            s.appearances.push_back({j, e.score, e.rank});
        }
    }
    for (auto& [doc_id, s] : stats) {
        // Summed in ascending rank order so P is bit-identical under any
        // permutation of the input lists.
        std::vector<int> ranks;
        ranks.reserve(s.appearances.size());
        for (const Appearance& a : s.appearances) ranks.push_back(a.rank);
        std::sort(ranks.begin(), ranks.end());
        double inv_sum = 0.0;
        for (int rank : ranks) inv_sum += 1.0 / static_cast<double>(rank);
        s.P = 1.0 / inv_sum;
    }
    return stats;
}

FusedRanking rsf_fuse(const std::vector<RankedList>& lists, int top_k) {
    if (top_k < 1) throw std::invalid_argument("top_k must be >= 1");
    auto stats = aggregate_stats(lists);

    std::vector<FusedEntry> entries;
    entries.reserve(stats.size());
    for (const auto& [doc_id, s] : stats) entries.push_back({doc_id, s.P, s.S, 0});

    std::sort(entries.begin(), entries.end(), [](const FusedEntry& a, const FusedEntry& b) {
        if (a.P != b.P) return a.P < b.P;
        if (a.S != b.S) return a.S > b.S;
        return a.doc_id < b.doc_id;
    });
    if (entries.size() > static_cast<std::size_t>(top_k))
        entries.resize(static_cast<std::size_t>(top_k));

    FusedRanking fused;
    fused.mixed_sources = has_mixed_sources(lists);
    int rank = 1;
    for (FusedEntry& e : entries) {
        e.fused_rank = rank++;
        fused.entries.push_back(std::move(e));
    }
    return fused;
}

double rrf_score(const FusionStats& stats, double smoothing) {
    if (smoothing <= 0.0) throw std::invalid_argument("smoothing must be > 0");
    double score = 0.0;
    for (const Appearance& a : stats.appearances) {
        score += 1.0 / (smoothing + static_cast<double>(a.rank));
    }
    return score;
}

FusedRanking rrf_fuse(const std::vector<RankedList>& lists, int top_k, double smoothing) {
    if (top_k < 1) throw std::invalid_argument("top_k must be >= 1");
    if (smoothing <= 0.0) throw std::invalid_argument("smoothing must be > 0");
    auto stats = aggregate_stats(lists);

    struct Scored {
        FusedEntry entry;
        double rrf = 0.0;
    };
    std::vector<Scored> scored;
    scored.reserve(stats.size());
    for (const auto& [doc_id, s] : stats) {
        scored.push_back({{doc_id, s.P, s.S, 0}, rrf_score(s, smoothing)});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.rrf != b.rrf) return a.rrf > b.rrf;
        return a.entry.doc_id < b.entry.doc_id;
    });
    if (scored.size() > static_cast<std::size_t>(top_k))
        scored.resize(static_cast<std::size_t>(top_k));

    FusedRanking fused;
    fused.mixed_sources = has_mixed_sources(lists);
    int rank = 1;
    for (Scored& s : scored) {
        s.entry.fused_rank = rank++;
        fused.entries.push_back(std::move(s.entry));
    }
    return fused;
}

}  // namespace mqr
