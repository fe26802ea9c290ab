#include "mqr/curriculum.hpp"

#include <stdexcept>

#include "mqr/errors.hpp"
#include "mqr/hash.hpp"

namespace mqr {

void CurriculumConfig::validate() const {
    if (rollouts < 1)
        throw config_error("curriculum.rollouts must be >= 1, got " + std::to_string(rollouts));
}

ComplexityRecord complexity_score(const QueryInstance& query, const PolicyState& policy,
                                  const SearchFn& retriever, const RewardConfig& reward_config,
                                  int rollouts) {
    reward_config.validate();
    if (rollouts < 1) throw std::invalid_argument("rollouts must be >= 1");
    if (!policy.pools.count(query.id)) {
        throw std::invalid_argument("policy has no candidate pool for query '" + query.id + "'");
    }

    std::mt19937_64 rng(mix64(mix64(policy.seed, 0x7461755fULL), fnv1a64(query.id)));

    ComplexityRecord record;
    record.query_id = query.id;
    record.rollout_rewards.reserve(static_cast<std::size_t>(rollouts));

    // Identical candidates score identically; cache by index.
    std::map<int, double> cache;
    double sum = 0.0;
    for (int k = 0; k < rollouts; ++k) {
        SampleResult sample = policy_sample(policy, query.id, rng);
        auto it = cache.find(sample.index);
        double reward;
        if (it != cache.end()) {
            reward = it->second;
        } else {
            std::string rendered;
            for (std::size_t i = 0; i < sample.candidate.sub_queries.size(); ++i) {
                if (i > 0) rendered += '\n';
                rendered += sample.candidate.sub_queries[i];
            }
            reward = format_gate(rendered, reward_config.m_max)
                         ? stage1_reward(sample.candidate, retriever, query.gold_ids,
                                         reward_config)
                               .reward
                         : reward_config.delta;
            cache.emplace(sample.index, reward);
        }
        record.rollout_rewards.push_back(reward);
        sum += reward;
    }
    record.tau = sum / static_cast<double>(rollouts);
    return record;
}

CurriculumResult build_curriculum(const std::vector<ComplexityRecord>& records,
                                  const CurriculumConfig& config) {
    config.validate();
    if (records.empty()) throw std::invalid_argument("build_curriculum needs records");

    CurriculumResult result;
    result.total = records.size();
    result.tau_thres = config.tau_thres;
    result.rollouts = config.rollouts;
    for (const ComplexityRecord& r : records) {
        if (r.tau <= config.tau_thres) result.retained_ids.push_back(r.query_id);
    }
    return result;
}

}  // namespace mqr
