#pragma once
// Run configuration file: INI sections [run], [task], [evaluator], [policy].
// List and rulebook values are JSON on a single line. Relative paths are
// resolved against the directory of the config file.

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "promptopt/core.hpp"
#include "promptopt/gateway.hpp"
#include "promptopt/generator.hpp"

namespace promptopt {

struct RemoteModelConfig {
    std::string endpoint;
    std::string model;
    int max_tokens = 256;
    double temperature = 0.0;
    std::chrono::milliseconds timeout{60'000};
    int max_retries = 3;
};

struct EvaluatorConfig {
    std::string kind = "mock";  // mock | remote
    nlohmann::json rules;       // mock: list of rule objects
    nlohmann::json fallback;    // mock: default action object
    RemoteModelConfig remote;
    int parallelism = 8;
};

struct PolicyConfig {
    std::string kind = "slot";  // slot | remote
    // slot
    std::vector<std::string> instructions;
    std::string template_text = "{instruction}";
    int max_shots = 3;
    int bank_size = 8;                // examples taken for the demonstration bank
    std::filesystem::path bank_path;  // empty: bank comes from the head of the train file
    std::vector<LabeledExample> synthetic_examples;  // hand-written demonstrations appended to the bank
    // remote
    RemoteModelConfig remote;
    std::string system_prompt;
    std::string user_template;
};

struct AppConfig {
    std::filesystem::path source;
    RunConfig run;
    TaskSpec spec;
    std::filesystem::path train_path;
    std::filesystem::path valid_path;
    std::optional<std::size_t> valid_cap;
    std::filesystem::path out_dir = "promptopt-out";  // relative to the working directory unless set in [run]
    EvaluatorConfig evaluator;
    PolicyConfig policy;
};

/// Throws ConfigError naming the section and key on malformed values.
AppConfig load_config(const std::filesystem::path& path);
AppConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);

/// Every problem found (run, task, evaluator, policy), empty when valid.
std::vector<std::string> validate_app_config(const AppConfig& cfg);

inline constexpr std::size_t kMaxBankEntries = 16;

struct TaskData {
    std::vector<LabeledExample> train;  // demonstration bank removed when drawn from train
    std::vector<LabeledExample> valid;  // capped when valid_cap is set
    std::vector<LabeledExample> bank;
};

TaskData load_task_data(const AppConfig& cfg);

std::unique_ptr<Evaluator> make_evaluator(const AppConfig& cfg);
std::unique_ptr<PromptGenerator> make_generator(const AppConfig& cfg, const std::vector<LabeledExample>& bank);

}  // namespace promptopt
