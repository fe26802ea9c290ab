#pragma once

#include <string>
#include <vector>

#include "mqr/policy.hpp"
#include "mqr/reward.hpp"

namespace mqr {

struct CurriculumConfig {
    double tau_thres = 5.0 / 3.0;
    int rollouts = 8;  // K

    void validate() const;  // throws config_error
};

/// Learning-complexity record for one query: tau is the mean stage-one
/// reward over K rollouts sampled from the (frozen) policy.
struct ComplexityRecord {
    std::string query_id;
    std::vector<double> rollout_rewards;
    double tau = 0.0;
};

/// Samples K candidate sets from the policy (no updates) and scores each
/// with the stage-one reward. The RNG stream derives from (policy.seed,
/// query id), so records are reproducible and order-independent.
ComplexityRecord complexity_score(const QueryInstance& query, const PolicyState& policy,
                                  const SearchFn& retriever, const RewardConfig& reward_config,
                                  int rollouts);

struct CurriculumResult {
    std::vector<std::string> retained_ids;  // in input record order
    std::size_t total = 0;
    double tau_thres = 0.0;
    int rollouts = 0;

    double retained_fraction() const {
        return total == 0 ? 0.0
                          : static_cast<double>(retained_ids.size()) / static_cast<double>(total);
    }
};

/// Retains exactly the queries with tau <= tau_thres (boundary included).
CurriculumResult build_curriculum(const std::vector<ComplexityRecord>& records,
                                  const CurriculumConfig& config);

}  // namespace mqr
