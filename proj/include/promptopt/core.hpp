#pragma once
// Shared domain types and run configuration.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace promptopt {

enum class TaskKind { classification, summarization, simplification, multiple_choice, math };
enum class Metric { accuracy, rouge_avg, sari, exact_integer };

std::string_view to_string(TaskKind kind);
std::string_view to_string(Metric metric);
std::optional<TaskKind> parse_task_kind(std::string_view name);
std::optional<Metric> parse_metric(std::string_view name);

/// The metric each task kind is scored with.
Metric metric_for(TaskKind kind);

/// Task description: what the evaluator is asked to do and how its answers are scored.
struct TaskSpec {
    TaskKind task_kind = TaskKind::classification;
    std::vector<std::string> label_set;  // canonical lowercase, classification / multiple_choice only
    Metric metric = Metric::accuracy;
    double r_format = 1.0;
    double r_alignment = 1.0;
    std::string base_prompt;
    std::string output_suffix;  // appended to candidate prompts for constrained tasks
    bool strict_numeric = false;  // math: accept only a bare integer answer
    std::string description;      // short task phrase for the remote generator ("sentiment classification")
};

/// Empty iff every TaskSpec invariant holds. Each entry names the field and the rule.
std::vector<std::string> validate_task_spec(const TaskSpec& spec);

struct LabeledExample {
    std::string input;
    std::string gold;
    std::vector<std::string> extra_refs;  // simplification only

    bool operator==(const LabeledExample&) const = default;
};

/// One emission of the prompt generator, with the segments the tag parser found.
struct GeneratorOutput {
    std::string raw;
    std::optional<std::string> think;
    std::optional<std::string> answer;
    bool parse_ok = false;
};

struct RewardBreakdown {
    double token = 0.0;
    double structure = 0.0;
    double format = 0.0;
    double alignment = 0.0;
    double total = 0.0;
};

/// Run hyperparameters. Defaults reproduce the reference training setup.
struct RunConfig {
    int n = 4;              // group size
    int k = 100;            // examples per training batch
    int iterations = 2000;  // I
    int t = 100;            // selection period
    int n_test = 10;        // prompts sampled per selection
    double epsilon = 0.2;
    double beta = 0.04;
    double r_token = 0.75;
    double r_structure = 0.75;
    double learning_rate = 0.05;
    double weight_decay = 0.1;
    std::uint64_t seed = 0;
    double advantage_std_floor = 1e-8;
};

std::vector<std::string> validate_run_config(const RunConfig& cfg);

enum class CandidateOrigin { training_sample, selection_sample };

struct CandidateRecord {
    std::string prompt;
    double score = 0.0;
    int iteration = 0;
    CandidateOrigin origin = CandidateOrigin::selection_sample;
};

// Text helpers shared by the parsers and scorers.
std::string_view trim(std::string_view text);
std::string casefold(std::string_view text);

}  // namespace promptopt
