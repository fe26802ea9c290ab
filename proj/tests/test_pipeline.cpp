#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "mqr/errors.hpp"
#include "mqr/pipeline.hpp"
#include "test_util.hpp"

using namespace mqr;
using testutil::TempDir;
using testutil::write_file;

namespace fs = std::filesystem;

namespace {

RunConfig toy_config(const std::string& output_dir) {
    RunConfig config;
    config.corpus_path = std::string(MQR_TOY_DATA_DIR) + "/corpus.jsonl";
    config.queries_path = std::string(MQR_TOY_DATA_DIR) + "/queries.jsonl";
    config.output_dir = output_dir;
    config.retriever = "sparse";
    config.sparse = {1.2, 0.75, 10};
    config.reward.eta = 0.6;
    config.reward.top_k = 10;
    config.curriculum.rollouts = 8;
    config.policy.seed = 17;
    config.policy.epochs_stage1 = 6;
    config.policy.epochs_stage2 = 6;
    config.eval.ks = {1, 3, 10};
    return config;
}

std::set<Phase> all_phases() {
    return {Phase::index, Phase::stage1, Phase::curriculum, Phase::stage2, Phase::eval};
}

std::map<std::string, std::string> snapshot_dir(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::stringstream buf;
        buf << in.rdbuf();
        files[fs::relative(entry.path(), dir).string()] = buf.str();
    }
    return files;
}

}  // namespace

TEST_CASE("full phase sequence writes every artifact and is rerun-stable") {
    TempDir dir("pipeline");
    RunConfig config = toy_config(dir.file("run"));

    run_pipeline(config, all_phases());

    const fs::path out(config.output_dir);
    for (const char* artifact :
         {"config.effective.json", "index/index_meta.json", "stage1/checkpoint.json",
          "stage1/train_log.jsonl", "curriculum/curriculum.txt", "curriculum/summary.json",
          "stage2/checkpoint.json", "stage2/train_log.jsonl", "eval/trained.json",
          "eval/trained.txt"}) {
        CHECK_MESSAGE(fs::exists(out / artifact), artifact);
    }

    // The curriculum retained something and stage two trained on it.
    std::ifstream summary(out / "curriculum" / "summary.json");
    nlohmann::json s = nlohmann::json::parse(summary);
    CHECK(s["retained"].get<int>() > 0);
    CHECK(s["total"].get<int>() == 12);

    // Rerunning the identical config is byte-identical everywhere.
    auto before = snapshot_dir(out);
    run_pipeline(config, all_phases());
    auto after = snapshot_dir(out);
    CHECK(before == after);
}

TEST_CASE("effective config replays the run") {
    TempDir dir("pipeline");
    RunConfig config = toy_config(dir.file("run"));
    run_pipeline(config, {Phase::index, Phase::stage1});

    RunConfig replayed =
        load_run_config((fs::path(config.output_dir) / "config.effective.json").string());
    CHECK(replayed.reward.eta == config.reward.eta);
    CHECK(replayed.policy.seed == config.policy.seed);

    auto before = snapshot_dir(fs::path(config.output_dir) / "stage1");
    run_pipeline(replayed, {Phase::stage1});
    auto after = snapshot_dir(fs::path(config.output_dir) / "stage1");
    CHECK(before == after);
}

TEST_CASE("stage2 without a curriculum artifact is a dependency error") {
    TempDir dir("pipeline");
    RunConfig config = toy_config(dir.file("run"));
    run_pipeline(config, {Phase::stage1});
    CHECK_THROWS_WITH_AS(run_pipeline(config, {Phase::stage2}),
                         doctest::Contains("curriculum"), dependency_error);
}

TEST_CASE("eval in raw mode needs no checkpoint and makes the baseline row") {
    TempDir dir("pipeline");
    RunConfig config = toy_config(dir.file("run"));
    config.eval.candidates = "raw";
    run_pipeline(config, {Phase::index, Phase::eval});

    const fs::path artifact = fs::path(config.output_dir) / "eval" / "raw.json";
    REQUIRE(fs::exists(artifact));
    std::ifstream in(artifact);
    nlohmann::json doc = nlohmann::json::parse(in);
    CHECK(doc["label"] == "raw");
    // Raw query text is the sole sub-query for every query.
    for (const auto& [qid, subs] : doc["chosen_sub_queries"].items()) {
        CHECK(subs.size() == 1);
    }
    CHECK(doc["means"].contains("MRR@3"));
}

TEST_CASE("eval in checkpoint mode without any checkpoint is a dependency error") {
    TempDir dir("pipeline");
    RunConfig config = toy_config(dir.file("run"));
    CHECK_THROWS_AS(run_pipeline(config, {Phase::eval}), dependency_error);
}

TEST_CASE("report tabulates one row per eval artifact") {
    TempDir dir("pipeline");
    RunConfig config = toy_config(dir.file("run"));

    config.eval.candidates = "raw";
    run_pipeline(config, {Phase::eval});
    std::string one_row = report(config.output_dir);
    CHECK(one_row.find("raw") != std::string::npos);

    config.eval.candidates = "checkpoint";
    run_pipeline(config, {Phase::stage1});
    run_pipeline(config, {Phase::eval});
    std::string two_rows = report(config.output_dir);
    CHECK(two_rows.find("raw") != std::string::npos);
    CHECK(two_rows.find("trained") != std::string::npos);

    // Both rows share the column header line.
    CHECK(two_rows.find("MRR@3") != std::string::npos);
}

TEST_CASE("report errors: no artifacts, corrupt artifact") {
    TempDir dir("pipeline");
    CHECK_THROWS_AS(report(dir.file("nothing")), dependency_error);

    fs::create_directories(fs::path(dir.file("run")) / "eval");
    write_file((fs::path(dir.file("run")) / "eval" / "broken.json").string(), "{not json");
    CHECK_THROWS_WITH_AS(report(dir.file("run")), doctest::Contains("broken.json"), parse_error);
}

TEST_CASE("config validation names unknown or invalid fields") {
    CHECK_THROWS_WITH_AS(run_config_from_json(nlohmann::json{{"retreiver", "sparse"}}),
                         doctest::Contains("retreiver"), config_error);

    RunConfig config = toy_config("/tmp/unused");
    config.reward.eta = 2.0;
    CHECK_THROWS_WITH_AS(config.validate(), doctest::Contains("eta"), config_error);

    config = toy_config("/tmp/unused");
    config.corpus_path = "/nonexistent/corpus.jsonl";
    CHECK_THROWS_WITH_AS(config.validate(), doctest::Contains("corpus"), config_error);
}

TEST_CASE("dense retriever drives the same pipeline") {
    TempDir dir("pipeline");
    RunConfig config = toy_config(dir.file("run"));
    config.retriever = "dense";
    config.dense = {64, 10, EmbeddingSource::hashed_features};
    config.policy.epochs_stage1 = 3;
    run_pipeline(config, {Phase::index, Phase::stage1});

    std::ifstream meta(fs::path(config.output_dir) / "index" / "index_meta.json");
    nlohmann::json doc = nlohmann::json::parse(meta);
    CHECK(doc["type"] == "dense");
    CHECK(doc["doc_count"] == 30);
}

#ifdef MQR_CLI_PATH
namespace {

int run_cli(const std::string& args, const std::string& stderr_file) {
    std::string cmd = std::string(MQR_CLI_PATH) + " " + args + " 2>" + stderr_file;
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("cli runs phases and reports machine-parsable errors") {
    TempDir dir("cli");
    RunConfig config = toy_config(dir.file("run"));
    std::string config_path = dir.file("config.json");
    write_file(config_path, run_config_to_json(config).dump(2));

    CHECK(run_cli("index --config " + config_path, dir.file("e1")) == 0);
    CHECK(fs::exists(fs::path(config.output_dir) / "index" / "index_meta.json"));

    // stage2 before curriculum: dependency category, nonzero exit.
    int code = run_cli("stage2 --config " + config_path, dir.file("e2"));
    CHECK(code != 0);
    std::string err = slurp(dir.file("e2"));
    CHECK(err.find("error[dependency]:") == 0);

    // Unknown config field: config category.
    write_file(dir.file("bad.json"), R"({"retreiver": "sparse"})");
    code = run_cli("index --config " + dir.file("bad.json"), dir.file("e3"));
    CHECK(code != 0);
    CHECK(slurp(dir.file("e3")).find("error[config]:") == 0);

    // Raw eval then report through the CLI.
    CHECK(run_cli("eval --candidates raw --config " + config_path, dir.file("e4")) == 0);
    CHECK(run_cli("report " + config.output_dir + " >" + dir.file("table"), dir.file("e5")) == 0);
    std::string table = slurp(dir.file("table"));
    CHECK(table.find("raw") != std::string::npos);
}
#endif
