#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mqr/corpus.hpp"
#include "mqr/reward.hpp"

namespace mqr {

/// Deterministic candidate pool for one query: the raw query, the
/// history-concatenated query (when history exists), conjunction/enumeration
/// splits capped at m_max parts, and a keyword-only variant with stopwords
/// removed. File-provided candidates come first and duplicates are dropped.
std::vector<SubQuerySet> generate_candidates(const QueryInstance& query, int m_max);

/// Per-query categorical policy over candidate sub-query sets. Selection
/// probabilities are softmax(logits / temperature).
struct PolicyState {
    std::map<std::string, std::vector<SubQuerySet>> pools;
    std::map<std::string, std::vector<double>> logits;
    double learning_rate = 0.5;
    double temperature = 1.0;
    std::uint64_t seed = 17;
};

PolicyState init_policy(const std::vector<QueryInstance>& queries, int m_max,
                        double learning_rate = 0.5, double temperature = 1.0,
                        std::uint64_t seed = 17);

std::vector<double> selection_probabilities(const PolicyState& policy,
                                            const std::string& query_id);

/// Index of the most probable candidate (smallest index on ties).
int policy_argmax(const PolicyState& policy, const std::string& query_id);

struct SampleResult {
    int index = 0;
    SubQuerySet candidate;
    double log_prob = 0.0;
};

/// Draws from softmax(logits / temperature) using only rng's raw output, so
/// sequences are identical across platforms for a fixed seed.
SampleResult policy_sample(const PolicyState& policy, const std::string& query_id,
                           std::mt19937_64& rng);

struct Rollout {
    int candidate_index = 0;
    double log_prob = 0.0;
    double reward = 0.0;
};

/// Group-baselined score-function update: with advantage
/// A_k = reward_k - mean(rewards) and probabilities taken from the
/// pre-update logits, each rollout adds
///   learning_rate / temperature * A_k * (1[j == chosen_k] - p_j)
/// to every logit j. Equal rewards produce an exact no-op.
void reinforce_update(PolicyState& policy, const std::string& query_id,
                      const std::vector<Rollout>& rollouts);

enum class Stage { one, two };

struct TrainLogEntry {
    int stage = 1;
    int iteration = 0;  // 1-based, one per (epoch, query) group
    std::string query_id;
    double mean_reward = 0.0;
    double mean_selected_m = 0.0;
    std::size_t retained_query_count = 0;
    /// Newline-joined sub-queries of the best rollout (the winning subset in
    /// stage one). Informational only; never fed back into the policy.
    std::string best_subset;
};

struct TrainLog {
    std::vector<TrainLogEntry> entries;
};

/// Runs epochs x queries iterations: sample `rollouts` candidate sets,
/// gate the rendered text, score with the stage reward (stage one: subset
/// max with phi, stage two: full ensemble with phi_prime), update the
/// policy. Zero epochs is a no-op with an empty log. Per-query RNG streams
/// derive from (seed, stage, epoch, query id), so results do not depend on
/// query order.
TrainLog run_stage(Stage stage, const std::vector<QueryInstance>& queries, PolicyState& policy,
                   const SearchFn& retriever, const RewardConfig& reward_config, int rollouts,
                   int epochs);

/// Checkpoint: {"learning_rate", "temperature", "seed", "logits": {qid: [..]}}.
/// Loading re-attaches logits onto a policy whose pools were rebuilt from the
/// dataset; vector lengths must match the pools.
void save_checkpoint(const std::string& path, const PolicyState& policy);
void load_checkpoint(const std::string& path, PolicyState& policy);

void save_train_log(const std::string& path, const TrainLog& log);
TrainLog load_train_log(const std::string& path);

}  // namespace mqr
