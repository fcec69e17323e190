#pragma once
// Evaluation-side rewards and the composite reward per generator output.

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptopt/core.hpp"
#include "promptopt/gateway.hpp"

namespace promptopt {

struct EvalOutcome {
    std::size_t example_index = 0;
    std::string evaluator_text;
    double format_reward = 0.0;
    double alignment_reward = 0.0;
    bool failed = false;  // evaluator error after retries; scored 0
    std::string error;
};

struct BatchScore {
    double mean_format = 0.0;
    double mean_alignment = 0.0;
    std::vector<EvalOutcome> outcomes;  // ordered by example index
    std::size_t failed = 0;

    double mean_eval_reward() const noexcept { return mean_format + mean_alignment; }
};

/// The prompt actually shown to the evaluator: the task's output suffix is
/// appended unless the prompt already ends with it.
std::string with_output_suffix(std::string_view prompt, const TaskSpec& spec);

double format_reward(const TaskSpec& spec, std::string_view evaluator_text);
double alignment_reward(const TaskSpec& spec, std::string_view evaluator_text, const LabeledExample& example);

/// Task-metric value of one evaluator answer: 0/1 correctness for labelled and
/// math tasks, rouge_avg (unit) for summarization, SARI (percent) for simplification.
double metric_value(const TaskSpec& spec, std::string_view evaluator_text, const LabeledExample& example);

/// References used for SARI: gold followed by extra_refs.
std::vector<std::string> references_of(const LabeledExample& example);

/// Queries the evaluator once per example (up to evaluator.parallelism() in
/// flight) and averages format + alignment rewards over the batch. An example
/// whose query fails after retries scores 0 and is flagged; if every query in
/// the batch fails the first error is rethrown.
BatchScore score_prompt_on_batch(std::string_view prompt, std::span<const LabeledExample> batch,
                                 const TaskSpec& spec, const Evaluator& evaluator);

/// R = R_token + R_structure + mean format + mean alignment. A generator output
/// that failed to parse must come with an empty (all-zero) batch score.
RewardBreakdown total_reward(const GeneratorOutput& gen_out, const BatchScore& eval, const RunConfig& cfg);

/// Runs `fn(i)` for i in [0, count) on at most `parallelism` threads.
void parallel_for(std::size_t count, int parallelism, const std::function<void(std::size_t)>& fn);

}  // namespace promptopt
