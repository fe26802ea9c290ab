#include "mqr/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "mqr/errors.hpp"
#include "mqr/fusion.hpp"
#include "mqr/text.hpp"

namespace mqr {

namespace fs = std::filesystem;
using nlohmann::json;

void RunConfig::validate() const {
    if (corpus_path.empty()) throw config_error("corpus path is required");
    if (!fs::exists(corpus_path)) throw config_error("corpus path '" + corpus_path + "' does not exist");
    if (queries_path.empty()) throw config_error("queries path is required");
    if (!fs::exists(queries_path))
        throw config_error("queries path '" + queries_path + "' does not exist");
    if (output_dir.empty()) throw config_error("output_dir is required");
    if (retriever != "sparse" && retriever != "dense") {
        throw config_error("retriever must be 'sparse' or 'dense', got '" + retriever + "'");
    }
    if (retriever == "dense" && dense.source == EmbeddingSource::file_provided) {
        if (embeddings_path.empty())
            throw config_error("dense.source = file requires an embeddings path");
        if (!fs::exists(embeddings_path))
            throw config_error("embeddings path '" + embeddings_path + "' does not exist");
    }
    sparse.validate();
    dense.validate();
    reward.validate();
    curriculum.validate();
    if (policy.learning_rate <= 0.0) throw config_error("policy.learning_rate must be > 0");
    if (policy.temperature <= 0.0) throw config_error("policy.temperature must be > 0");
    if (policy.epochs_stage1 < 0) throw config_error("policy.epochs_stage1 must be >= 0");
    if (policy.epochs_stage2 < 0) throw config_error("policy.epochs_stage2 must be >= 0");
    if (eval.ks.empty()) throw config_error("eval.ks must list at least one cutoff");
    for (int k : eval.ks) {
        if (k < 1) throw config_error("eval.ks entries must be >= 1, got " + std::to_string(k));
    }
    if (eval.candidates != "checkpoint" && eval.candidates != "raw") {
        throw config_error("eval.candidates must be 'checkpoint' or 'raw', got '" +
                           eval.candidates + "'");
    }
    for (char c : eval_label()) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') {
            throw config_error("eval.label must be alphanumeric/dash/underscore");
        }
    }
}

std::string RunConfig::eval_label() const {
    if (!eval.label.empty()) return eval.label;
    return eval.candidates == "raw" ? "raw" : "trained";
}

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (!known.count(key)) {
            throw config_error("unknown config field '" + where + key + "'");
        }
    }
}

}  // namespace

RunConfig run_config_from_json(const json& doc) {
    if (!doc.is_object()) throw config_error("config root must be a JSON object");
    reject_unknown_keys(doc,
                        {"corpus", "queries", "embeddings", "output_dir", "retriever", "sparse",
                         "dense", "reward", "curriculum", "policy", "eval"},
                        "");

    RunConfig config;
    config.corpus_path = doc.value("corpus", std::string());
    config.queries_path = doc.value("queries", std::string());
    config.embeddings_path = doc.value("embeddings", std::string());
    config.output_dir = doc.value("output_dir", std::string());
    config.retriever = doc.value("retriever", std::string("sparse"));

    if (doc.contains("sparse")) {
        const json& s = doc["sparse"];
        reject_unknown_keys(s, {"k1", "b", "top_k"}, "sparse.");
        config.sparse.k1 = s.value("k1", config.sparse.k1);
        config.sparse.b = s.value("b", config.sparse.b);
        config.sparse.top_k = s.value("top_k", config.sparse.top_k);
    }
    if (doc.contains("dense")) {
        const json& d = doc["dense"];
        reject_unknown_keys(d, {"dimension", "top_k", "source"}, "dense.");
        config.dense.dimension = d.value("dimension", config.dense.dimension);
        config.dense.top_k = d.value("top_k", config.dense.top_k);
        std::string source = d.value("source", std::string("hashed"));
        if (source == "hashed") {
            config.dense.source = EmbeddingSource::hashed_features;
        } else if (source == "file") {
            config.dense.source = EmbeddingSource::file_provided;
        } else {
            throw config_error("dense.source must be 'hashed' or 'file', got '" + source + "'");
        }
    }
    if (doc.contains("reward")) {
        const json& r = doc["reward"];
        reject_unknown_keys(
            r, {"eta", "delta", "lambda", "k_star", "rank_cutoff", "top_k", "m_max"}, "reward.");
        config.reward.eta = r.value("eta", config.reward.eta);
        config.reward.delta = r.value("delta", config.reward.delta);
        config.reward.lambda = r.value("lambda", config.reward.lambda);
        config.reward.k_star = r.value("k_star", config.reward.k_star);
        config.reward.rank_cutoff = r.value("rank_cutoff", config.reward.rank_cutoff);
        config.reward.top_k = r.value("top_k", config.reward.top_k);
        config.reward.m_max = r.value("m_max", config.reward.m_max);
    }
    if (doc.contains("curriculum")) {
        const json& c = doc["curriculum"];
        reject_unknown_keys(c, {"tau_thres", "rollouts"}, "curriculum.");
        config.curriculum.tau_thres = c.value("tau_thres", config.curriculum.tau_thres);
        config.curriculum.rollouts = c.value("rollouts", config.curriculum.rollouts);
    }
    if (doc.contains("policy")) {
        const json& p = doc["policy"];
        reject_unknown_keys(
            p, {"seed", "learning_rate", "temperature", "epochs_stage1", "epochs_stage2"},
            "policy.");
        config.policy.seed = p.value("seed", config.policy.seed);
        config.policy.learning_rate = p.value("learning_rate", config.policy.learning_rate);
        config.policy.temperature = p.value("temperature", config.policy.temperature);
        config.policy.epochs_stage1 = p.value("epochs_stage1", config.policy.epochs_stage1);
        config.policy.epochs_stage2 = p.value("epochs_stage2", config.policy.epochs_stage2);
    }
    if (doc.contains("eval")) {
        const json& e = doc["eval"];
        reject_unknown_keys(e, {"ks", "candidates", "label"}, "eval.");
        if (e.contains("ks")) config.eval.ks = e["ks"].get<std::vector<int>>();
        config.eval.candidates = e.value("candidates", config.eval.candidates);
        config.eval.label = e.value("label", config.eval.label);
    }
    return config;
}

json run_config_to_json(const RunConfig& config) {
    return json{
        {"corpus", config.corpus_path},
        {"queries", config.queries_path},
        {"embeddings", config.embeddings_path},
        {"output_dir", config.output_dir},
        {"retriever", config.retriever},
        {"sparse", {{"k1", config.sparse.k1}, {"b", config.sparse.b}, {"top_k", config.sparse.top_k}}},
        {"dense",
         {{"dimension", config.dense.dimension},
          {"top_k", config.dense.top_k},
          {"source",
           config.dense.source == EmbeddingSource::hashed_features ? "hashed" : "file"}}},
        {"reward",
         {{"eta", config.reward.eta},
          {"delta", config.reward.delta},
          {"lambda", config.reward.lambda},
          {"k_star", config.reward.k_star},
          {"rank_cutoff", config.reward.rank_cutoff},
          {"top_k", config.reward.top_k},
          {"m_max", config.reward.m_max}}},
        {"curriculum",
         {{"tau_thres", config.curriculum.tau_thres},
          {"rollouts", config.curriculum.rollouts}}},
        {"policy",
         {{"seed", config.policy.seed},
          {"learning_rate", config.policy.learning_rate},
          {"temperature", config.policy.temperature},
          {"epochs_stage1", config.policy.epochs_stage1},
          {"epochs_stage2", config.policy.epochs_stage2}}},
        {"eval",
         {{"ks", config.eval.ks},
          {"candidates", config.eval.candidates},
          // Raw field, not the derived name: the label keeps tracking the
          // candidates mode when a written config is replayed with overrides.
          {"label", config.eval.label}}}};
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config '" + path + "'");
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw parse_error("config '" + path + "' is not valid JSON");
    return run_config_from_json(doc);
}

Phase parse_phase(const std::string& name) {
    if (name == "index") return Phase::index;
    if (name == "stage1") return Phase::stage1;
    if (name == "curriculum") return Phase::curriculum;
    if (name == "stage2") return Phase::stage2;
    if (name == "eval") return Phase::eval;
    throw config_error("unknown phase '" + name + "'");
}

namespace {

struct Retriever {
    std::string kind;
    SparseIndex sparse;
    DenseIndex dense;
    EmbeddingStore store;  // keeps file-provided vectors alive for dense

    SearchFn fn() const {
        if (kind == "sparse") {
            const SparseIndex* index = &sparse;
            return [index](const std::string& query, int top_k) {
                return index->search(query, top_k);
            };
        }
        const DenseIndex* index = &dense;
        return [index](const std::string& query, int top_k) {
            return index->search(query, top_k);
        };
    }
};

struct PipelineContext {
    RunConfig config;
    Corpus corpus;
    std::vector<QueryInstance> queries;
    Retriever retriever;

    fs::path out() const { return fs::path(config.output_dir); }
};

PipelineContext load_context(const RunConfig& config) {
    PipelineContext ctx;
    ctx.config = config;
    ctx.corpus = load_corpus(config.corpus_path);
    ctx.queries = load_queries(config.queries_path, ctx.corpus);

    ValidationReport validation = validate_dataset(ctx.corpus, ctx.queries);
    if (!validation.pipeline_ready()) {
        throw validation_error("dataset validation failed: " + validation.errors.front());
    }

    ctx.retriever.kind = config.retriever;
    if (config.retriever == "sparse") {
        ctx.retriever.sparse = SparseIndex::build(ctx.corpus, config.sparse);
    } else {
        const EmbeddingStore* store = nullptr;
        if (config.dense.source == EmbeddingSource::file_provided) {
            ctx.retriever.store = EmbeddingStore::load(config.embeddings_path);
            store = &ctx.retriever.store;
        }
        ctx.retriever.dense = DenseIndex::build(ctx.corpus, config.dense, store);
    }
    return ctx;
}

void write_text(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path.string() + "'");
    out << content;
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

void require_artifact(const fs::path& path, const std::string& producer) {
    if (!fs::exists(path)) {
        throw dependency_error("missing artifact '" + path.string() + "'; run the " + producer +
                               " phase first");
    }
}

PolicyState rebuild_policy(const PipelineContext& ctx) {
    return init_policy(ctx.queries, ctx.config.reward.m_max, ctx.config.policy.learning_rate,
                       ctx.config.policy.temperature, ctx.config.policy.seed);
}

void phase_index(const PipelineContext& ctx) {
    json meta;
    if (ctx.config.retriever == "sparse") {
        const SparseIndex& index = ctx.retriever.sparse;
        meta = {{"type", "sparse"},
                {"doc_count", index.doc_count()},
                {"vocabulary_size", index.vocabulary_size()},
                {"avg_doc_length", index.avg_doc_length()},
                {"k1", index.config().k1},
                {"b", index.config().b}};
    } else {
        const DenseIndex& index = ctx.retriever.dense;
        meta = {{"type", "dense"},
                {"doc_count", index.doc_count()},
                {"dimension", index.config().dimension},
                {"source",
                 index.config().source == EmbeddingSource::hashed_features ? "hashed" : "file"}};
    }
    write_json(ctx.out() / "index" / "index_meta.json", meta);
}

void phase_stage1(const PipelineContext& ctx) {
    PolicyState policy = rebuild_policy(ctx);
    TrainLog log = run_stage(Stage::one, ctx.queries, policy, ctx.retriever.fn(),
                             ctx.config.reward, ctx.config.curriculum.rollouts,
                             ctx.config.policy.epochs_stage1);
    fs::create_directories(ctx.out() / "stage1");
    save_checkpoint((ctx.out() / "stage1" / "checkpoint.json").string(), policy);
    save_train_log((ctx.out() / "stage1" / "train_log.jsonl").string(), log);
}

void phase_curriculum(const PipelineContext& ctx) {
    fs::path checkpoint = ctx.out() / "stage1" / "checkpoint.json";
    require_artifact(checkpoint, "stage1");

    PolicyState policy = rebuild_policy(ctx);
    load_checkpoint(checkpoint.string(), policy);

    std::vector<ComplexityRecord> records;
    records.reserve(ctx.queries.size());
    SearchFn search = ctx.retriever.fn();
    for (const QueryInstance& q : ctx.queries) {
        records.push_back(complexity_score(q, policy, search, ctx.config.reward,
                                           ctx.config.curriculum.rollouts));
    }
    CurriculumResult result = build_curriculum(records, ctx.config.curriculum);

    std::string ids;
    for (const std::string& id : result.retained_ids) ids += id + "\n";
    write_text(ctx.out() / "curriculum" / "curriculum.txt", ids);

    std::string record_lines;
    for (const ComplexityRecord& r : records) {
        record_lines += json{{"query_id", r.query_id},
                             {"tau", r.tau},
                             {"rollout_rewards", r.rollout_rewards}}
                            .dump() +
                        "\n";
    }
    write_text(ctx.out() / "curriculum" / "records.jsonl", record_lines);

    write_json(ctx.out() / "curriculum" / "summary.json",
               {{"retained", result.retained_ids.size()},
                {"total", result.total},
                {"tau_thres", result.tau_thres},
                {"rollouts", result.rollouts},
                {"retained_fraction", result.retained_fraction()}});
    if (result.retained_ids.empty()) {
        std::cerr << "warning: curriculum is empty; every tau exceeds tau_thres = "
                  << result.tau_thres << "\n";
    }
}

void phase_stage2(const PipelineContext& ctx) {
    fs::path checkpoint = ctx.out() / "stage1" / "checkpoint.json";
    fs::path curriculum_file = ctx.out() / "curriculum" / "curriculum.txt";
    require_artifact(curriculum_file, "curriculum");
    require_artifact(checkpoint, "stage1");

    std::ifstream in(curriculum_file);
    std::set<std::string> retained;
    std::string line;
    while (std::getline(in, line)) {
        if (!trim(line).empty()) retained.insert(std::string(trim(line)));
    }
    std::vector<QueryInstance> subset;
    for (const QueryInstance& q : ctx.queries) {
        if (retained.count(q.id)) subset.push_back(q);
    }
    if (subset.empty()) {
        throw dependency_error("curriculum '" + curriculum_file.string() +
                               "' retains no queries; stage2 has nothing to train on");
    }

    PolicyState policy = rebuild_policy(ctx);
    load_checkpoint(checkpoint.string(), policy);
    TrainLog log =
        run_stage(Stage::two, subset, policy, ctx.retriever.fn(), ctx.config.reward,
                  ctx.config.curriculum.rollouts, ctx.config.policy.epochs_stage2);
    fs::create_directories(ctx.out() / "stage2");
    save_checkpoint((ctx.out() / "stage2" / "checkpoint.json").string(), policy);
    save_train_log((ctx.out() / "stage2" / "train_log.jsonl").string(), log);
}

void phase_eval(const PipelineContext& ctx) {
    int depth = ctx.config.reward.top_k;
    for (int k : ctx.config.eval.ks) depth = std::max(depth, k);

    PolicyState policy;
    bool use_policy = ctx.config.eval.candidates == "checkpoint";
    if (use_policy) {
        policy = rebuild_policy(ctx);
        fs::path stage2_ckpt = ctx.out() / "stage2" / "checkpoint.json";
        fs::path stage1_ckpt = ctx.out() / "stage1" / "checkpoint.json";
        if (fs::exists(stage2_ckpt)) {
            load_checkpoint(stage2_ckpt.string(), policy);
        } else if (fs::exists(stage1_ckpt)) {
            load_checkpoint(stage1_ckpt.string(), policy);
        } else {
            throw dependency_error("eval with candidates=checkpoint needs '" +
                                   stage2_ckpt.string() + "' or '" + stage1_ckpt.string() +
                                   "'; run stage1/stage2 first or use candidates=raw");
        }
    }

    SearchFn search = ctx.retriever.fn();
    std::vector<FusedRanking> fused;
    fused.reserve(ctx.queries.size());
    json choices = json::object();
    for (const QueryInstance& q : ctx.queries) {
        SubQuerySet chosen;
        if (use_policy) {
            int index = policy_argmax(policy, q.id);
            chosen = policy.pools.at(q.id)[static_cast<std::size_t>(index)];
        } else {
            chosen.sub_queries = {q.text};
        }
        std::vector<RankedList> lists;
        lists.reserve(chosen.sub_queries.size());
        for (const std::string& sq : chosen.sub_queries) lists.push_back(search(sq, depth));
        fused.push_back(rsf_fuse(lists, depth));
        choices[q.id] = chosen.sub_queries;
    }

    EvalResult result = evaluate(ctx.queries, fused, ctx.config.eval.ks);

    json per_query = json::object();
    for (const auto& [qid, row] : result.per_query) per_query[qid] = row;
    const std::string label = ctx.config.eval_label();
    write_json(ctx.out() / "eval" / (label + ".json"), {{"label", label},
                                                        {"retriever", ctx.config.retriever},
                                                        {"means", result.means},
                                                        {"per_query", per_query},
                                                        {"chosen_sub_queries", choices}});
    write_text(ctx.out() / "eval" / (label + ".txt"), format_eval_table({{label, result}}));
}

}  // namespace

void run_pipeline(const RunConfig& config, const std::set<Phase>& phases) {
    config.validate();
    if (phases.empty()) throw config_error("no phases requested");

    PipelineContext ctx = load_context(config);
    fs::create_directories(ctx.out());
    write_json(ctx.out() / "config.effective.json", run_config_to_json(config));

    if (phases.count(Phase::index)) phase_index(ctx);
    if (phases.count(Phase::stage1)) phase_stage1(ctx);
    if (phases.count(Phase::curriculum)) phase_curriculum(ctx);
    if (phases.count(Phase::stage2)) phase_stage2(ctx);
    if (phases.count(Phase::eval)) phase_eval(ctx);
}

std::string report(const std::string& run_dir) {
    fs::path eval_dir = fs::path(run_dir) / "eval";
    if (!fs::exists(eval_dir)) {
        throw dependency_error("no eval artifacts under '" + eval_dir.string() + "'");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(eval_dir)) {
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw dependency_error("no eval artifacts under '" + eval_dir.string() + "'");
    }

    std::vector<std::pair<std::string, EvalResult>> rows;
    for (const fs::path& file : files) {
        std::ifstream in(file);
        json doc = json::parse(in, nullptr, false);
        if (doc.is_discarded() || !doc.is_object() || !doc.contains("means")) {
            throw parse_error("corrupt eval artifact '" + file.string() + "'");
        }
        EvalResult result;
        for (const auto& [name, value] : doc["means"].items()) {
            if (!value.is_number()) {
                throw parse_error("corrupt eval artifact '" + file.string() + "'");
            }
            result.means[name] = value.get<double>();
        }
        rows.emplace_back(doc.value("label", file.stem().string()), result);
    }
    return format_eval_table(rows);
}

}  // namespace mqr
