#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mqr/corpus.hpp"
#include "mqr/fusion.hpp"
#include "mqr/retrieval.hpp"

namespace mqr {

struct RewardConfig {
    double eta = 1.0;     // decay over gold contributions, in (0, 1]
    double delta = -1.0;  // penalty paid on format non-compliance, < 0
    double lambda = 1.0;  // weight of the top-rank bonus, >= 0
    int k_star = 3;       // bonus applies to ranks <= k_star; 0 disables it
    int rank_cutoff = 100;  // ranks beyond this score 0
    int top_k = 10;         // retrieval depth per sub-query
    int m_max = 6;          // sub-query cap; stage-one enumeration is exact

    void validate() const;  // throws config_error
};

/// Piecewise-linear rank-to-score map. With the default cutoff of 100:
/// 2 - (r-1)/9 on [1,10], (100-r)/90 on (10,100], 0 beyond. Strictly
/// decreasing and continuous on its support; other cutoffs scale the
/// breakpoint proportionally (cutoff/10). Throws on rank < 1.
double phi(int rank, int rank_cutoff = 100);

/// phi plus a logarithmic bonus for top placements:
/// phi(r) + lambda * [r <= k_star] / log2(r + 1).
double phi_prime(int rank, const RewardConfig& config);

/// Fused rank of each gold document, nullopt when it did not make the fused
/// list. Positions align with `gold_ids`.
struct GoldRanks {
    std::vector<std::optional<int>> ranks;

    std::vector<int> present_sorted() const;  // ascending
};

GoldRanks locate_golds(const FusedRanking& fused, const std::vector<std::string>& gold_ids);

/// Decay-weighted aggregate over the located golds: ranks sorted ascending
/// as r_1 <= ... <= r_n, score = sum_i eta^i * phi(r_i) (phi_prime when
/// requested). Absent golds contribute 0. When format_ok is false the sum is
/// discarded and delta is returned.
double doc_set_score(const GoldRanks& gold_ranks, const RewardConfig& config, bool format_ok,
                     bool use_phi_prime);

/// Parses raw policy output: newline-separated sub-queries, each non-blank,
/// between 1 and m_max of them. A single trailing newline is tolerated.
std::optional<SubQuerySet> parse_action_text(std::string_view raw, int m_max);

/// True iff parse_action_text succeeds.
bool format_gate(std::string_view raw_action_text, int m_max);

using SearchFn = std::function<RankedList(const std::string& query, int top_k)>;
using FuseFn = std::function<FusedRanking(const std::vector<RankedList>& lists, int top_k)>;

FuseFn rsf_fuser();

struct Stage1Result {
    double reward = 0.0;
    SubQuerySet best_subset;
};

/// Exploration reward: every sub-query retrieves once, then all 2^M - 1
/// non-empty subsets of the lists are fused and scored (phi, format ok);
/// the maximum wins. Ties prefer the smallest subset, then the
/// lexicographically first index set. Throws when M exceeds m_max.
Stage1Result stage1_reward(const SubQuerySet& sub_queries, const SearchFn& retriever,
                           const std::vector<std::string>& gold_ids, const RewardConfig& config,
                           const FuseFn& fuser = rsf_fuser());

/// Convergence reward: the full sub-query ensemble only, scored with
/// phi_prime.
double stage2_reward(const SubQuerySet& sub_queries, const SearchFn& retriever,
                     const std::vector<std::string>& gold_ids, const RewardConfig& config,
                     const FuseFn& fuser = rsf_fuser());

}  // namespace mqr
