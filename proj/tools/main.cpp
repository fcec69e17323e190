#include <iostream>

#include <CLI11.hpp>

#include "promptopt/app.hpp"

int main(int argc, char** argv) {
    using namespace promptopt;

    CLI::App app{"Prompt optimization with group-relative policy updates"};
    app.require_subcommand(1);

    TrainOptions train;
    std::string resume;
    std::uint64_t seed = 0;
    std::string out_dir;
    auto* train_cmd = app.add_subcommand("train", "Run the optimization loop");
    train_cmd->add_option("--config", train.config, "Run configuration (INI)")->required();
    auto* resume_opt = train_cmd->add_option("--resume", resume, "Checkpoint to continue from");
    auto* seed_opt = train_cmd->add_option("--seed", seed, "Override [run] seed");
    auto* out_opt = train_cmd->add_option("--out", out_dir, "Override [run] out");
    train_cmd->add_flag("--quiet", train.quiet, "Suppress progress lines");

    ScoreOptions score;
    auto* score_cmd = app.add_subcommand("score", "Score a prompt on a dataset");
    score_cmd->add_option("--prompt", score.prompt_file, "File holding the prompt")->required();
    score_cmd->add_option("--data", score.data, "JSONL dataset")->required();
    score_cmd->add_option("--config", score.config, "Run configuration (INI)")->required();
    score_cmd->add_flag("--json", score.json, "Print the metric value only");

    SelectOptions select;
    int n_test = 0;
    auto* select_cmd = app.add_subcommand("select", "Run one prompt selection from a checkpoint");
    select_cmd->add_option("--config", select.config, "Run configuration (INI)")->required();
    select_cmd->add_option("--checkpoint", select.checkpoint, "Checkpoint file")->required();
    auto* n_test_opt = select_cmd->add_option("--n-test", n_test, "Override [run] n_test")->check(CLI::PositiveNumber);
    select_cmd->add_flag("--json", select.json, "Machine-readable output");

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate-config", "Check a configuration and its datasets");
    validate_cmd->add_option("--config", validate_path, "Run configuration (INI)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (*train_cmd) {
        if (*resume_opt) train.resume = resume;
        if (*seed_opt) train.seed = seed;
        if (*out_opt) train.out_dir = out_dir;
        return cmd_train(train, std::cout, std::cerr);
    }
    if (*score_cmd) return cmd_score(score, std::cout, std::cerr);
    if (*select_cmd) {
        if (*n_test_opt) select.n_test = n_test;
        return cmd_select(select, std::cout, std::cerr);
    }
    return cmd_validate_config(validate_path, std::cout, std::cerr);
}
