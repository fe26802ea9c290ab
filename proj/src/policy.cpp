#include "mqr/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mqr/errors.hpp"
#include "mqr/hash.hpp"
#include "mqr/text.hpp"

namespace mqr {

using nlohmann::json;

namespace {

const std::set<std::string>& stopwords() {
    static const std::set<std::string> words = {
        "a",     "an",    "and",   "are",  "as",    "at",   "be",    "been",  "but",  "by",
        "did",   "do",    "does",  "for",  "from",  "had",  "has",   "have",  "how",  "if",
        "in",    "into",  "is",    "it",   "its",   "of",   "on",    "or",    "that", "the",
        "their", "them",  "then",  "they", "this",  "to",   "was",   "were",  "what", "when",
        "where", "which", "who",   "whom", "why",   "will", "with",  "would", "you",  "your"};
    return words;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += sep;
        out += parts[i];
    }
    return out;
}

// Drops the word "respectively" (any case) together with a preceding comma.
std::string strip_respectively(const std::string& text) {
    std::string lower = lowercase(text);
    std::string out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t hit = lower.find("respectively", pos);
        if (hit == std::string::npos) {
            out += text.substr(pos);
            break;
        }
        std::size_t end = hit;
        while (end > pos && (std::isspace(static_cast<unsigned char>(text[end - 1])) ||
                             text[end - 1] == ','))
            --end;
        out += text.substr(pos, end - pos);
        pos = hit + std::string("respectively").size();
    }
    return out;
}

// Splits a query into clauses on commas, semicolons, question marks and the
// standalone word "and"; yields the parts only when there are at least two.
std::vector<std::string> clause_split(const std::string& text, int m_max) {
    std::string work = strip_respectively(text);
    std::vector<std::string> parts;
    std::string cur;

    auto flush_part = [&]() {
        std::string_view t = trim(cur);
        // Ignore fragments carrying no content words at all.
        bool has_content = false;
        for (const std::string& tok : tokenize(t)) {
            if (!stopwords().count(tok)) {
                has_content = true;
                break;
            }
        }
        if (!t.empty() && has_content) parts.emplace_back(t);
        cur.clear();
    };

    for (char c : work) {
        if (c == ',' || c == ';' || c == '?') {
            flush_part();
            continue;
        }
        cur.push_back(c);
        // Detect "... and" at a word boundary.
        if (std::isspace(static_cast<unsigned char>(c))) {
            std::string_view t = trim(cur);
            if (t.size() >= 4) {
                std::string tail = lowercase(t.substr(t.size() - 4));
                if (tail == " and") {
                    cur = std::string(t.substr(0, t.size() - 4));
                    flush_part();
                }
            }
        }
    }
    flush_part();

    if (parts.size() < 2) return {};
    if (static_cast<int>(parts.size()) > m_max) {
        // Merge the overflow into the final part.
        std::vector<std::string> capped(parts.begin(), parts.begin() + m_max - 1);
        std::string rest = parts[static_cast<std::size_t>(m_max) - 1];
        for (std::size_t i = static_cast<std::size_t>(m_max); i < parts.size(); ++i) {
            rest += " " + parts[i];
        }
        capped.push_back(std::move(rest));
        parts = std::move(capped);
    }
    return parts;
}

std::string keyword_variant(const std::string& text) {
    std::vector<std::string> kept;
    for (const std::string& tok : tokenize(text)) {
        if (!stopwords().count(tok)) kept.push_back(tok);
    }
    return join(kept, " ");
}

std::uint64_t stream_seed(const PolicyState& policy, int stage_no, int epoch,
                          const std::string& query_id) {
    std::uint64_t h = mix64(policy.seed, static_cast<std::uint64_t>(stage_no));
    h = mix64(h, static_cast<std::uint64_t>(epoch) + 1);
    return mix64(h, fnv1a64(query_id));
}

}  // namespace

std::vector<SubQuerySet> generate_candidates(const QueryInstance& query, int m_max) {
    if (m_max < 1) throw config_error("m_max must be >= 1, got " + std::to_string(m_max));
    std::string raw(trim(query.text));
    if (raw.empty()) throw validation_error("query '" + query.id + "' has blank text");

    std::vector<SubQuerySet> pool;
    std::set<std::vector<std::string>> seen;
    auto push = [&](SubQuerySet set) {
        if (set.sub_queries.empty()) return;
        if (seen.insert(set.sub_queries).second) pool.push_back(std::move(set));
    };

    for (const SubQuerySet& cand : query.candidates) push(cand);

    push({{raw}});

    if (!query.history.empty()) {
        std::vector<std::string> turns;
        for (const auto& [question, answer] : query.history) {
            std::string_view q = trim(question);
            std::string_view a = trim(answer);
            if (!q.empty()) turns.emplace_back(q);
            if (!a.empty()) turns.emplace_back(a);
        }
        turns.push_back(raw);
        push({{join(turns, " ")}});
    }

    std::vector<std::string> clauses = clause_split(raw, m_max);
    if (!clauses.empty()) push({clauses});

    std::string keywords = keyword_variant(raw);
    if (!keywords.empty()) push({{keywords}});

    return pool;
}

PolicyState init_policy(const std::vector<QueryInstance>& queries, int m_max, double learning_rate,
                        double temperature, std::uint64_t seed) {
    if (learning_rate <= 0.0) throw config_error("policy.learning_rate must be > 0");
    if (temperature <= 0.0) throw config_error("policy.temperature must be > 0");
    PolicyState policy;
    policy.learning_rate = learning_rate;
    policy.temperature = temperature;
    policy.seed = seed;
    for (const QueryInstance& q : queries) {
        std::vector<SubQuerySet> pool = generate_candidates(q, m_max);
        policy.logits[q.id] = std::vector<double>(pool.size(), 0.0);
        policy.pools[q.id] = std::move(pool);
    }
    return policy;
}

std::vector<double> selection_probabilities(const PolicyState& policy,
                                            const std::string& query_id) {
    auto it = policy.logits.find(query_id);
    if (it == policy.logits.end()) {
        throw std::invalid_argument("unknown query id '" + query_id + "'");
    }
    const std::vector<double>& logits = it->second;
    std::vector<double> probs(logits.size());
    double max_logit = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp((logits[i] - max_logit) / policy.temperature);
        sum += probs[i];
    }
    for (double& p : probs) p /= sum;
    return probs;
}

int policy_argmax(const PolicyState& policy, const std::string& query_id) {
    std::vector<double> probs = selection_probabilities(policy, query_id);
    return static_cast<int>(
        std::max_element(probs.begin(), probs.end()) - probs.begin());
}

SampleResult policy_sample(const PolicyState& policy, const std::string& query_id,
                           std::mt19937_64& rng) {
    std::vector<double> probs = selection_probabilities(policy, query_id);
    // 53-bit uniform in [0, 1); avoids std::uniform_real_distribution, whose
    // output is implementation-defined.
    const double u =
        static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
    double cumulative = 0.0;
    std::size_t chosen = probs.size() - 1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        cumulative += probs[i];
        if (u < cumulative) {
            chosen = i;
            break;
        }
    }
    SampleResult result;
    result.index = static_cast<int>(chosen);
    result.candidate = policy.pools.at(query_id)[chosen];
    result.log_prob = std::log(probs[chosen]);
    return result;
}

void reinforce_update(PolicyState& policy, const std::string& query_id,
                      const std::vector<Rollout>& rollouts) {
    if (rollouts.empty()) throw std::invalid_argument("reinforce_update needs rollouts");
    auto it = policy.logits.find(query_id);
    if (it == policy.logits.end()) {
        throw std::invalid_argument("unknown query id '" + query_id + "'");
    }
    std::vector<double>& logits = it->second;
    for (const Rollout& r : rollouts) {
        if (r.candidate_index < 0 || r.candidate_index >= static_cast<int>(logits.size())) {
            throw std::invalid_argument("rollout candidate index out of range for query '" +
                                        query_id + "'");
        }
    }

    double baseline = 0.0;
    for (const Rollout& r : rollouts) baseline += r.reward;
    baseline /= static_cast<double>(rollouts.size());

    bool any_advantage = false;
    for (const Rollout& r : rollouts) {
        if (r.reward != baseline) {
            any_advantage = true;
            break;
        }
    }
    if (!any_advantage) return;  // constant rewards: exact no-op

    std::vector<double> probs = selection_probabilities(policy, query_id);
    std::vector<double> grad(logits.size(), 0.0);
    for (const Rollout& r : rollouts) {
        const double advantage = r.reward - baseline;
        for (std::size_t j = 0; j < grad.size(); ++j) {
            const double indicator = (static_cast<int>(j) == r.candidate_index) ? 1.0 : 0.0;
            grad[j] += advantage * (indicator - probs[j]);
        }
    }
    const double scale = policy.learning_rate / policy.temperature;
    for (std::size_t j = 0; j < logits.size(); ++j) logits[j] += scale * grad[j];
}

TrainLog run_stage(Stage stage, const std::vector<QueryInstance>& queries, PolicyState& policy,
                   const SearchFn& retriever, const RewardConfig& reward_config, int rollouts,
                   int epochs) {
    reward_config.validate();
    if (rollouts < 1) throw std::invalid_argument("rollouts must be >= 1");
    if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (queries.empty()) {
        throw std::invalid_argument(stage == Stage::two
                                        ? "stage two invoked with an empty curriculum"
                                        : "stage one invoked with no queries");
    }
    for (const QueryInstance& q : queries) {
        if (!policy.pools.count(q.id)) {
            throw std::invalid_argument("policy has no candidate pool for query '" + q.id + "'");
        }
    }

    const int stage_no = stage == Stage::one ? 1 : 2;
    TrainLog log;

    // Rewards are pure in (query, candidate, stage, config); cache per
    // candidate so repeated draws do not re-run retrieval.
    struct Scored {
        double reward = 0.0;
        std::string best_subset;
    };
    std::map<std::pair<std::string, int>, Scored> cache;

    auto score_candidate = [&](const QueryInstance& q, int index) -> const Scored& {
        auto key = std::make_pair(q.id, index);
        auto hit = cache.find(key);
        if (hit != cache.end()) return hit->second;

        const SubQuerySet& candidate = policy.pools.at(q.id)[static_cast<std::size_t>(index)];
        std::string rendered;
        for (std::size_t i = 0; i < candidate.sub_queries.size(); ++i) {
            if (i > 0) rendered += '\n';
            rendered += candidate.sub_queries[i];
        }

        Scored scored;
        if (!format_gate(rendered, reward_config.m_max)) {
            scored.reward = reward_config.delta;
            scored.best_subset = rendered;
        } else if (stage == Stage::one) {
            Stage1Result r = stage1_reward(candidate, retriever, q.gold_ids, reward_config);
            scored.reward = r.reward;
            std::string best;
            for (std::size_t i = 0; i < r.best_subset.sub_queries.size(); ++i) {
                if (i > 0) best += '\n';
                best += r.best_subset.sub_queries[i];
            }
            scored.best_subset = std::move(best);
        } else {
            scored.reward = stage2_reward(candidate, retriever, q.gold_ids, reward_config);
            scored.best_subset = rendered;
        }
        return cache.emplace(std::move(key), std::move(scored)).first->second;
    };

    int iteration = 0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (const QueryInstance& q : queries) {
            std::mt19937_64 rng(stream_seed(policy, stage_no, epoch, q.id));
            std::vector<Rollout> group;
            group.reserve(static_cast<std::size_t>(rollouts));
            double sum_reward = 0.0;
            double sum_m = 0.0;
            double best_reward = 0.0;
            const std::string* best_subset = nullptr;
            for (int k = 0; k < rollouts; ++k) {
                SampleResult sample = policy_sample(policy, q.id, rng);
                const Scored& scored = score_candidate(q, sample.index);
                group.push_back({sample.index, sample.log_prob, scored.reward});
                sum_reward += scored.reward;
                sum_m += static_cast<double>(sample.candidate.sub_queries.size());
                if (best_subset == nullptr || scored.reward > best_reward) {
                    best_reward = scored.reward;
                    best_subset = &scored.best_subset;
                }
            }
            reinforce_update(policy, q.id, group);

            TrainLogEntry entry;
            entry.stage = stage_no;
            entry.iteration = ++iteration;
            entry.query_id = q.id;
            entry.mean_reward = sum_reward / static_cast<double>(rollouts);
            entry.mean_selected_m = sum_m / static_cast<double>(rollouts);
            entry.retained_query_count = queries.size();
            entry.best_subset = *best_subset;
            log.entries.push_back(std::move(entry));
        }
    }
    return log;
}

void save_checkpoint(const std::string& path, const PolicyState& policy) {
    json logits = json::object();
    for (const auto& [qid, vec] : policy.logits) logits[qid] = vec;
    json doc = {{"learning_rate", policy.learning_rate},
                {"temperature", policy.temperature},
                {"seed", policy.seed},
                {"logits", logits}};
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path + "'");
    out << doc.dump(2) << '\n';
}

void load_checkpoint(const std::string& path, PolicyState& policy) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("logits")) {
        throw parse_error("checkpoint '" + path + "' is not a valid policy file");
    }
    policy.learning_rate = doc.value("learning_rate", policy.learning_rate);
    policy.temperature = doc.value("temperature", policy.temperature);
    policy.seed = doc.value("seed", policy.seed);
    for (const auto& [qid, vec] : doc["logits"].items()) {
        auto it = policy.logits.find(qid);
        if (it == policy.logits.end()) {
            throw validation_error("checkpoint '" + path + "' has logits for unknown query '" +
                                   qid + "'");
        }
        std::vector<double> values = vec.get<std::vector<double>>();
        if (values.size() != it->second.size()) {
            throw validation_error("checkpoint '" + path + "': logits for query '" + qid +
                                   "' have length " + std::to_string(values.size()) +
                                   ", pool has " + std::to_string(it->second.size()));
        }
        it->second = std::move(values);
    }
}

void save_train_log(const std::string& path, const TrainLog& log) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path + "'");
    for (const TrainLogEntry& e : log.entries) {
        out << json{{"stage", e.stage},
                    {"iteration", e.iteration},
                    {"query_id", e.query_id},
                    {"mean_reward", e.mean_reward},
                    {"mean_selected_m", e.mean_selected_m},
                    {"retained_query_count", e.retained_query_count},
                    {"best_subset", e.best_subset}}
                   .dump()
            << '\n';
    }
}

TrainLog load_train_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    TrainLog log;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object()) {
            throw parse_error(path + " line " + std::to_string(line_no) + ": bad train log record");
        }
        TrainLogEntry e;
        e.stage = record.value("stage", 1);
        e.iteration = record.value("iteration", 0);
        e.query_id = record.value("query_id", std::string());
        e.mean_reward = record.value("mean_reward", 0.0);
        e.mean_selected_m = record.value("mean_selected_m", 0.0);
        e.retained_query_count = record.value("retained_query_count", std::size_t{0});
        e.best_subset = record.value("best_subset", std::string());
        log.entries.push_back(std::move(e));
    }
    return log;
}

}  // namespace mqr
