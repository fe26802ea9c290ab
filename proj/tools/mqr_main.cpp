// Command-line front end: one subcommand per pipeline phase plus report.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mqr/errors.hpp"
#include "mqr/pipeline.hpp"

namespace {

struct GlobalFlags {
    std::string config_path;
    std::string output_dir;
    std::string retriever;
    std::optional<std::uint64_t> seed;
};

mqr::RunConfig effective_config(const GlobalFlags& flags) {
    if (flags.config_path.empty()) throw mqr::config_error("--config is required");
    mqr::RunConfig config = mqr::load_run_config(flags.config_path);
    if (!flags.output_dir.empty()) config.output_dir = flags.output_dir;
    if (!flags.retriever.empty()) config.retriever = flags.retriever;
    if (flags.seed) config.policy.seed = *flags.seed;
    return config;
}

int exit_code_for(const char* category) {
    if (std::string(category) == "config") return 2;
    if (std::string(category) == "io") return 3;
    if (std::string(category) == "parse") return 4;
    if (std::string(category) == "validation") return 5;
    if (std::string(category) == "dependency") return 6;
    return 10;
}

int fail(const char* category, const std::string& message) {
    std::cerr << "error[" << category << "]: " << message << "\n";
    return exit_code_for(category);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Complex-query retrieval pipeline: multi-sub-query search, "
                 "rank-score fusion, two-stage reward training, evaluation"};
    app.require_subcommand(1);

    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "Run configuration file (JSON)");
    app.add_option("--output-dir", flags.output_dir, "Override the configured output directory");
    app.add_option("--retriever", flags.retriever, "Override the retriever: sparse | dense")
        ->check(CLI::IsMember({"sparse", "dense"}));
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "Override the policy seed");

    auto* cmd_index = app.add_subcommand("index", "Build the retrieval index and write its stats");
    auto* cmd_stage1 = app.add_subcommand("stage1", "Train the exploration stage");
    auto* cmd_curriculum =
        app.add_subcommand("curriculum", "Score learning complexity and filter the training set");
    auto* cmd_stage2 = app.add_subcommand("stage2", "Train the convergence stage on the curriculum");
    auto* cmd_eval = app.add_subcommand("eval", "Evaluate fused rankings against the gold labels");
    // Global flags are accepted on either side of the subcommand name.
    for (auto* sub : {cmd_index, cmd_stage1, cmd_curriculum, cmd_stage2, cmd_eval}) {
        sub->fallthrough();
    }
    std::string eval_candidates;
    cmd_eval->add_option("--candidates", eval_candidates,
                         "Candidate source: checkpoint (default) or raw query only")
        ->check(CLI::IsMember({"checkpoint", "raw"}));
    std::string eval_label;
    cmd_eval->add_option("--label", eval_label, "Name of the eval artifact");

    auto* cmd_report = app.add_subcommand("report", "Tabulate every eval artifact in a run dir");
    cmd_report->fallthrough();
    std::string report_dir;
    cmd_report->add_option("run_dir", report_dir, "Run directory holding eval artifacts");

    CLI11_PARSE(app, argc, argv);
    if (seed_opt->count() > 0) flags.seed = seed_value;

    try {
        if (cmd_report->parsed()) {
            if (report_dir.empty()) {
                if (flags.config_path.empty()) throw mqr::config_error("report needs a run_dir or --config");
                report_dir = effective_config(flags).output_dir;
            }
            std::cout << mqr::report(report_dir);
            return 0;
        }

        mqr::RunConfig config = effective_config(flags);
        std::set<mqr::Phase> phases;
        if (cmd_index->parsed()) phases.insert(mqr::Phase::index);
        if (cmd_stage1->parsed()) phases.insert(mqr::Phase::stage1);
        if (cmd_curriculum->parsed()) phases.insert(mqr::Phase::curriculum);
        if (cmd_stage2->parsed()) phases.insert(mqr::Phase::stage2);
        if (cmd_eval->parsed()) {
            phases.insert(mqr::Phase::eval);
            if (!eval_candidates.empty()) config.eval.candidates = eval_candidates;
            if (!eval_label.empty()) config.eval.label = eval_label;
        }
        mqr::run_pipeline(config, phases);
        return 0;
    } catch (const mqr::config_error& e) {
        return fail("config", e.what());
    } catch (const mqr::io_error& e) {
        return fail("io", e.what());
    } catch (const mqr::parse_error& e) {
        return fail("parse", e.what());
    } catch (const mqr::validation_error& e) {
        return fail("validation", e.what());
    } catch (const mqr::dependency_error& e) {
        return fail("dependency", e.what());
    } catch (const std::exception& e) {
        return fail("internal", e.what());
    }
}
