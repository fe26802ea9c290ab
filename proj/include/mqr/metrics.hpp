#pragma once

#include <map>
#include <string>
#include <vector>

#include "mqr/fusion.hpp"

namespace mqr {

/// Binary-relevance ranking metrics over a fused list. All depend only on
/// the positions of the gold documents, never on scores, and lie in [0,1].

/// 1 / rank of the first gold inside the top k, else 0.
double mrr_at_k(const FusedRanking& fused, const std::vector<std::string>& gold_ids, int k);

/// Binary-gain DCG@k / IDCG@k with discount 1/log2(rank+1); the ideal
/// ranking places min(|golds|, k) golds first.
double ndcg_at_k(const FusedRanking& fused, const std::vector<std::string>& gold_ids, int k);

/// |golds in top k| / |golds|.
double recall_at_k(const FusedRanking& fused, const std::vector<std::string>& gold_ids, int k);

/// (1/|golds|) * sum over golds at rank r <= k of precision@r.
double map_at_k(const FusedRanking& fused, const std::vector<std::string>& gold_ids, int k);

struct EvalResult {
    /// Metric name ("MRR@3", "NDCG@3", "R@10", "MAP@10", ...) -> mean value.
    std::map<std::string, double> means;
    /// query id -> metric name -> value.
    std::map<std::string, std::map<std::string, double>> per_query;
};

/// Runs all four metrics at each cutoff in `ks` over one fused ranking per
/// query. `fused` must align with `queries`.
EvalResult evaluate(const std::vector<QueryInstance>& queries,
                    const std::vector<FusedRanking>& fused, const std::vector<int>& ks);

/// Aligned fixed-width table, one row per run, stable column order.
std::string format_eval_table(const std::vector<std::pair<std::string, EvalResult>>& rows);

}  // namespace mqr
