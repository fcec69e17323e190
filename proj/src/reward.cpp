#include "promptopt/reward.hpp"

#include <atomic>
#include <cctype>
#include <exception>
#include <stdexcept>
#include <thread>

#include "promptopt/errors.hpp"
#include "promptopt/metrics.hpp"
#include "promptopt/tags.hpp"

namespace promptopt {
namespace {

NumberMode number_mode(const TaskSpec& spec) { return spec.strict_numeric ? NumberMode::strict : NumberMode::lenient; }

std::optional<char> valid_option(const TaskSpec& spec, std::string_view text) {
    const auto letter = match_option_letter(text);
    if (!letter) return std::nullopt;
    const std::string lower(1, static_cast<char>(std::tolower(static_cast<unsigned char>(*letter))));
    for (const auto& l : spec.label_set)
        if (l == lower) return letter;
    return std::nullopt;
}

bool is_correct(const TaskSpec& spec, std::string_view text, const LabeledExample& example) {
    switch (spec.task_kind) {
        case TaskKind::classification: {
            const auto label = match_label(text, spec.label_set);
            return label && *label == casefold(trim(example.gold));
        }
        case TaskKind::multiple_choice: {
            const auto letter = valid_option(spec, text);
            return letter && casefold(std::string(1, *letter)) == casefold(trim(example.gold));
        }
        case TaskKind::math: {
            const auto number = extract_final_number(text, number_mode(spec));
            return number && numbers_equal(*number, example.gold);
        }
        default: return false;
    }
}

}  // namespace

std::string with_output_suffix(std::string_view prompt, const TaskSpec& spec) {
    const std::string_view suffix = trim(spec.output_suffix);
    if (suffix.empty() || trim(prompt).ends_with(suffix)) return std::string(prompt);
    std::string out(prompt);
    out.append("\n").append(suffix);
    return out;
}

double format_reward(const TaskSpec& spec, std::string_view evaluator_text) {
    if (spec.r_format == 0.0) return 0.0;
    switch (spec.task_kind) {
        case TaskKind::classification:
            return match_label(evaluator_text, spec.label_set) ? spec.r_format : 0.0;
        case TaskKind::multiple_choice: return valid_option(spec, evaluator_text) ? spec.r_format : 0.0;
        case TaskKind::math:
            return extract_final_number(evaluator_text, number_mode(spec)) ? spec.r_format : 0.0;
        case TaskKind::summarization:
        case TaskKind::simplification: return 0.0;
    }
    return 0.0;
}

std::vector<std::string> references_of(const LabeledExample& example) {
    std::vector<std::string> refs{example.gold};
    refs.insert(refs.end(), example.extra_refs.begin(), example.extra_refs.end());
    return refs;
}

double metric_value(const TaskSpec& spec, std::string_view evaluator_text, const LabeledExample& example) {
    switch (spec.task_kind) {
        case TaskKind::summarization: return rouge_avg(evaluator_text, example.gold).value;
        case TaskKind::simplification: return sari(example.input, evaluator_text, references_of(example)).value;
        default: return is_correct(spec, evaluator_text, example) ? 1.0 : 0.0;
    }
}

double alignment_reward(const TaskSpec& spec, std::string_view evaluator_text, const LabeledExample& example) {
    switch (spec.task_kind) {
        case TaskKind::summarization: return spec.r_alignment * rouge_avg(evaluator_text, example.gold).value;
        case TaskKind::simplification:
            return spec.r_alignment * sari(example.input, evaluator_text, references_of(example)).value / 100.0;
        default: return is_correct(spec, evaluator_text, example) ? spec.r_alignment : 0.0;
    }
}

void parallel_for(std::size_t count, int parallelism, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(parallelism, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = next++; i < count; i = next++) fn(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

BatchScore score_prompt_on_batch(std::string_view prompt, std::span<const LabeledExample> batch,
                                 const TaskSpec& spec, const Evaluator& evaluator) {
    if (batch.empty()) throw std::invalid_argument("score_prompt_on_batch: empty batch");
    if (trim(prompt).empty()) throw std::invalid_argument("score_prompt_on_batch: empty prompt");
    const std::string shown = with_output_suffix(prompt, spec);

    BatchScore out;
    out.outcomes.resize(batch.size());
    std::vector<std::exception_ptr> errors(batch.size());
    parallel_for(batch.size(), evaluator.parallelism(), [&](std::size_t i) {
        EvalOutcome& o = out.outcomes[i];
        o.example_index = i;
        try {
            o.evaluator_text = evaluator.evaluate(shown, batch[i]);
            o.format_reward = format_reward(spec, o.evaluator_text);
            o.alignment_reward = alignment_reward(spec, o.evaluator_text, batch[i]);
        } catch (const EvaluatorError& e) {
            o.failed = true;
            o.error = e.what();
            errors[i] = std::current_exception();
        }
    });

    for (const auto& o : out.outcomes) {
        out.mean_format += o.format_reward;
        out.mean_alignment += o.alignment_reward;
        out.failed += o.failed;
    }
    if (out.failed == batch.size()) std::rethrow_exception(errors.front());
    out.mean_format /= static_cast<double>(batch.size());
    out.mean_alignment /= static_cast<double>(batch.size());
    return out;
}

RewardBreakdown total_reward(const GeneratorOutput& gen_out, const BatchScore& eval, const RunConfig& cfg) {
    if (eval.mean_format < 0.0 || eval.mean_alignment < 0.0)
        throw std::invalid_argument("total_reward: evaluation reward must be nonnegative");
    if (!gen_out.parse_ok && eval.mean_eval_reward() != 0.0)
        throw std::invalid_argument("total_reward: an unparsed output has no prompt to evaluate");
    RewardBreakdown r;
    r.token = token_usage_reward(count_tokens(gen_out.raw), cfg.r_token);
    r.structure = structure_reward(gen_out.raw, cfg.r_structure);
    r.format = eval.mean_format;
    r.alignment = eval.mean_alignment;
    r.total = r.token + r.structure + r.format + r.alignment;
    return r;
}

}  // namespace promptopt
