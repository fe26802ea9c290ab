#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mqr/curriculum.hpp"
#include "mqr/metrics.hpp"
#include "mqr/policy.hpp"
#include "mqr/retrieval.hpp"
#include "mqr/reward.hpp"

namespace mqr {

/// One structured configuration drives every phase. Field defaults mirror
/// the shipped run configuration; see README for the symbol table.
struct RunConfig {
    std::string corpus_path;
    std::string queries_path;
    std::string embeddings_path;  // only for retriever = dense with file vectors
    std::string output_dir;
    std::string retriever = "sparse";  // "sparse" | "dense"

    SparseIndexConfig sparse;
    DenseIndexConfig dense;
    RewardConfig reward;
    CurriculumConfig curriculum;

    struct PolicySettings {
        std::uint64_t seed = 17;
        double learning_rate = 0.5;
        double temperature = 1.0;
        int epochs_stage1 = 20;
        int epochs_stage2 = 20;
    } policy;

    struct EvalSettings {
        std::vector<int> ks = {1, 3, 10};
        std::string candidates = "checkpoint";  // "checkpoint" | "raw"
        std::string label;                      // artifact name; defaults per mode
    } eval;

    void validate() const;  // throws config_error naming the offending field
    std::string eval_label() const;
};

RunConfig run_config_from_json(const nlohmann::json& doc);
nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::string& path);

enum class Phase { index, stage1, curriculum, stage2, eval };

Phase parse_phase(const std::string& name);

/// Executes the requested phases in pipeline order. Each phase writes its
/// artifacts under its own subdirectory of output_dir; the effective
/// configuration is written back to output_dir/config.effective.json.
/// Reruns with an identical config are byte-identical.
///
/// Artifact layout:
///   index/index_meta.json
///   stage1/checkpoint.json + stage1/train_log.jsonl
///   curriculum/curriculum.txt + curriculum/summary.json + curriculum/records.jsonl
///   stage2/checkpoint.json + stage2/train_log.jsonl
///   eval/<label>.json + eval/<label>.txt
void run_pipeline(const RunConfig& config, const std::set<Phase>& phases);

/// Formatted comparison table over every eval artifact in <run_dir>/eval.
std::string report(const std::string& run_dir);

}  // namespace mqr
