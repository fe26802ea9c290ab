#include "mqr/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mqr/errors.hpp"
#include "mqr/text.hpp"

namespace mqr {

void RewardConfig::validate() const {
    if (eta <= 0.0 || eta > 1.0)
        throw config_error("reward.eta must be in (0,1], got " + std::to_string(eta));
    if (delta >= 0.0) throw config_error("reward.delta must be < 0, got " + std::to_string(delta));
    if (lambda < 0.0)
        throw config_error("reward.lambda must be >= 0, got " + std::to_string(lambda));
    if (k_star < 0) throw config_error("reward.k_star must be >= 0, got " + std::to_string(k_star));
    if (rank_cutoff < 10)
        throw config_error("reward.rank_cutoff must be >= 10, got " + std::to_string(rank_cutoff));
    if (top_k < 1) throw config_error("reward.top_k must be >= 1, got " + std::to_string(top_k));
    if (m_max < 1) throw config_error("reward.m_max must be >= 1, got " + std::to_string(m_max));
}

double phi(int rank, int rank_cutoff) {
    if (rank < 1) throw std::invalid_argument("rank must be >= 1");
    const double r = static_cast<double>(rank);
    const double cutoff = static_cast<double>(rank_cutoff);
    const double breakpoint = cutoff / 10.0;
    if (r <= breakpoint) {
        if (breakpoint == 1.0) return 2.0;
        return 2.0 - (r - 1.0) / (breakpoint - 1.0);
    }
    if (r <= cutoff) return (cutoff - r) / (cutoff - breakpoint);
    return 0.0;
}

double phi_prime(int rank, const RewardConfig& config) {
    double value = phi(rank, config.rank_cutoff);
    if (config.lambda > 0.0 && rank <= config.k_star) {
        value += config.lambda / std::log2(static_cast<double>(rank) + 1.0);
    }
    return value;
}

std::vector<int> GoldRanks::present_sorted() const {
    std::vector<int> present;
    for (const auto& r : ranks) {
        if (r.has_value()) present.push_back(*r);
    }
    std::sort(present.begin(), present.end());
    return present;
}

GoldRanks locate_golds(const FusedRanking& fused, const std::vector<std::string>& gold_ids) {
    if (gold_ids.empty()) throw std::invalid_argument("locate_golds needs at least one gold id");
    GoldRanks out;
    out.ranks.reserve(gold_ids.size());
    for (const std::string& gold : gold_ids) {
        std::optional<int> rank;
        for (const FusedEntry& e : fused.entries) {
            if (e.doc_id == gold) {
                rank = e.fused_rank;
                break;
            }
        }
        out.ranks.push_back(rank);
    }
    return out;
}

double doc_set_score(const GoldRanks& gold_ranks, const RewardConfig& config, bool format_ok,
                     bool use_phi_prime) {
    if (!format_ok) return config.delta;
    std::vector<int> present = gold_ranks.present_sorted();
    double score = 0.0;
    double weight = 1.0;
    for (int rank : present) {
        weight *= config.eta;  // best-ranked gold carries eta^1
        score += weight * (use_phi_prime ? phi_prime(rank, config) : phi(rank, config.rank_cutoff));
    }
    return score;
}

std::optional<SubQuerySet> parse_action_text(std::string_view raw, int m_max) {
    while (!raw.empty() && (raw.back() == '\n' || raw.back() == '\r')) raw.remove_suffix(1);
    if (trim(raw).empty()) return std::nullopt;

    SubQuerySet set;
    for (const std::string& line : split_lines(raw)) {
        std::string_view sq = trim(line);
        if (sq.empty()) return std::nullopt;
        set.sub_queries.emplace_back(sq);
    }
    if (set.sub_queries.empty() || static_cast<int>(set.sub_queries.size()) > m_max) {
        return std::nullopt;
    }
    return set;
}

bool format_gate(std::string_view raw_action_text, int m_max) {
    return parse_action_text(raw_action_text, m_max).has_value();
}

FuseFn rsf_fuser() {
    return [](const std::vector<RankedList>& lists, int top_k) { return rsf_fuse(lists, top_k); };
}

namespace {

double score_lists(const std::vector<RankedList>& lists, const std::vector<std::string>& gold_ids,
                   const RewardConfig& config, bool use_phi_prime, const FuseFn& fuser) {
    FusedRanking fused = fuser(lists, config.top_k);
    GoldRanks ranks = locate_golds(fused, gold_ids);
    return doc_set_score(ranks, config, /*format_ok=*/true, use_phi_prime);
}

}  // namespace

Stage1Result stage1_reward(const SubQuerySet& sub_queries, const SearchFn& retriever,
                           const std::vector<std::string>& gold_ids, const RewardConfig& config,
                           const FuseFn& fuser) {
    config.validate();
    const std::size_t m = sub_queries.sub_queries.size();
    if (m == 0) throw std::invalid_argument("stage1_reward needs at least one sub-query");
    if (m > static_cast<std::size_t>(config.m_max)) {
        throw std::invalid_argument("sub-query set size " + std::to_string(m) +
                                    " exceeds m_max = " + std::to_string(config.m_max));
    }
    if (m > 30) throw std::invalid_argument("subset enumeration supports at most 30 sub-queries");

    // Each sub-query retrieves exactly once; subsets fuse slices of the
    // cached lists.
    std::vector<RankedList> lists;
    lists.reserve(m);
    for (const std::string& sq : sub_queries.sub_queries) {
        lists.push_back(retriever(sq, config.top_k));
    }

    double best_reward = 0.0;
    std::vector<std::size_t> best_indices;
    for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
        std::vector<RankedList> subset_lists;
        std::vector<std::size_t> indices;
        for (std::size_t i = 0; i < m; ++i) {
            if (mask & (1u << i)) {
                subset_lists.push_back(lists[i]);
                indices.push_back(i);
            }
        }
        double reward =
            score_lists(subset_lists, gold_ids, config, /*use_phi_prime=*/false, fuser);

        bool better = false;
        if (best_indices.empty() || reward > best_reward) {
            better = true;
        } else if (reward == best_reward) {
            if (indices.size() < best_indices.size()) {
                better = true;
            } else if (indices.size() == best_indices.size() && indices < best_indices) {
                better = true;
            }
        }
        if (better) {
            best_reward = reward;
            best_indices = std::move(indices);
        }
    }

    Stage1Result result;
    result.reward = best_reward;
    for (std::size_t i : best_indices) {
        result.best_subset.sub_queries.push_back(sub_queries.sub_queries[i]);
    }
    return result;
}

double stage2_reward(const SubQuerySet& sub_queries, const SearchFn& retriever,
                     const std::vector<std::string>& gold_ids, const RewardConfig& config,
                     const FuseFn& fuser) {
    config.validate();
    if (sub_queries.sub_queries.empty()) {
        throw std::invalid_argument("stage2_reward needs at least one sub-query");
    }
    std::vector<RankedList> lists;
    lists.reserve(sub_queries.sub_queries.size());
    for (const std::string& sq : sub_queries.sub_queries) {
        lists.push_back(retriever(sq, config.top_k));
    }
    return score_lists(lists, gold_ids, config, /*use_phi_prime=*/true, fuser);
}

}  // namespace mqr
