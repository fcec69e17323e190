#pragma once
// The training loop: grouped sampling, reward computation, policy update and
// periodic prompt selection with best-prompt retention.

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "promptopt/core.hpp"
#include "promptopt/gateway.hpp"
#include "promptopt/generator.hpp"
#include "promptopt/metrics.hpp"
#include "promptopt/rng.hpp"

namespace promptopt {

struct SelectionEvent {
    std::vector<double> scores;  // one per sampled prompt; unparsed samples score 0
    std::size_t chosen_index = 0;
    double chosen_score = 0.0;
    std::string chosen_prompt;
    bool improved = false;
    bool params_unchanged = true;  // generator state identical before and after
};

struct IterationStats {
    int iteration = 0;
    std::vector<double> rewards;
    double mean_reward = 0.0;
    double mean_abs_advantage = 0.0;
    double clip_fraction = 0.0;
    double kl_mean = 0.0;
    int parse_failures = 0;
    int eval_failures = 0;
    double best_score = 0.0;
    std::optional<SelectionEvent> selection;
};

nlohmann::json to_json(const IterationStats& stats);
IterationStats iteration_from_json(const nlohmann::json& j);

struct RunState {
    int iteration = 0;  // completed iterations
    CandidateRecord best;
    Rng rng;
    std::vector<IterationStats> history;
};

RunState initial_run_state(const RunConfig& cfg);

/// Metric f over the whole dataset: accuracy / exact-match rate for labelled and
/// math tasks, mean rouge_avg for summarization, mean SARI for simplification.
MetricScore evaluate_prompt(std::string_view prompt, std::span<const LabeledExample> data, const TaskSpec& spec,
                            const Evaluator& evaluator);

struct SelectionResult {
    CandidateRecord best;
    SelectionEvent event;
};

/// Samples n_test prompts, scores each on `valid`, and keeps the argmax (lowest
/// index on ties) only if it strictly beats current_best.score. Never mutates
/// the generator.
SelectionResult select_best_prompt(const PromptGenerator& generator, std::span<const LabeledExample> valid,
                                   const TaskSpec& spec, const Evaluator& evaluator, int n_test,
                                   const CandidateRecord& current_best, Rng& rng, int iteration = 0);

/// Draws min(k, |train|) distinct indices.
std::vector<std::size_t> sample_batch_indices(std::size_t population, std::size_t k, Rng& rng);

struct TrainingInputs {
    RunConfig cfg;
    TaskSpec spec;
    std::span<const LabeledExample> train;
    std::span<const LabeledExample> valid;  // already capped by the caller if desired
};

struct TrainingHooks {
    std::function<void(const IterationStats&)> on_iteration;
    /// Called after every selection event with the post-selection state.
    std::function<void(const RunState&)> on_selection;
};

/// Continues `state` until cfg.iterations. On an evaluator failure `state` is
/// left at the last completed iteration (rng included) and the error propagates.
void run_training(RunState& state, const TrainingInputs& inputs, PromptGenerator& generator,
                  const Evaluator& evaluator, const TrainingHooks& hooks = {});

struct TrainingResult {
    CandidateRecord best;
    std::vector<IterationStats> history;
};

TrainingResult run_training(const TrainingInputs& inputs, PromptGenerator& generator, const Evaluator& evaluator);

// Checkpoint file: a "promptopt-checkpoint <version>" line followed by one JSON
// document holding the run state and the generator state.
inline constexpr std::string_view kCheckpointMagic = "promptopt-checkpoint";
inline constexpr int kCheckpointVersion = 1;

std::string serialize_checkpoint(const RunState& state, const PromptGenerator& generator);
/// Restores both; the generator is only touched once the whole file parsed.
/// Throws CheckpointError on a wrong header, version mismatch or bad body.
RunState parse_checkpoint(std::string_view text, PromptGenerator& generator);

/// Writes atomically (temp file + rename).
void save_checkpoint(const std::filesystem::path& path, const RunState& state, const PromptGenerator& generator);
RunState load_checkpoint(const std::filesystem::path& path, PromptGenerator& generator);

}  // namespace promptopt
