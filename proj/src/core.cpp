#include "promptopt/core.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <utility>

namespace promptopt {
namespace {

constexpr std::array<std::pair<TaskKind, std::string_view>, 5> kTaskNames{{
    {TaskKind::classification, "classification"},
    {TaskKind::summarization, "summarization"},
    {TaskKind::simplification, "simplification"},
    {TaskKind::multiple_choice, "multiple_choice"},
    {TaskKind::math, "math"},
}};

constexpr std::array<std::pair<Metric, std::string_view>, 4> kMetricNames{{
    {Metric::accuracy, "accuracy"},
    {Metric::rouge_avg, "rouge_avg"},
    {Metric::sari, "sari"},
    {Metric::exact_integer, "exact_integer"},
}};

bool has_labels(TaskKind kind) {
    return kind == TaskKind::classification || kind == TaskKind::multiple_choice;
}

}  // namespace

Metric metric_for(TaskKind kind) {
    switch (kind) {
        case TaskKind::classification:
        case TaskKind::multiple_choice: return Metric::accuracy;
        case TaskKind::summarization: return Metric::rouge_avg;
        case TaskKind::simplification: return Metric::sari;
        case TaskKind::math: return Metric::exact_integer;
    }
    return Metric::accuracy;
}

std::string_view to_string(TaskKind kind) {
    for (const auto& [k, name] : kTaskNames)
        if (k == kind) return name;
    return "unknown";
}

std::string_view to_string(Metric metric) {
    for (const auto& [m, name] : kMetricNames)
        if (m == metric) return name;
    return "unknown";
}

std::optional<TaskKind> parse_task_kind(std::string_view name) {
    for (const auto& [k, n] : kTaskNames)
        if (n == name) return k;
    return std::nullopt;
}

std::optional<Metric> parse_metric(std::string_view name) {
    for (const auto& [m, n] : kMetricNames)
        if (n == name) return m;
    return std::nullopt;
}

std::vector<std::string> validate_task_spec(const TaskSpec& spec) {
    std::vector<std::string> out;
    const bool labelled = has_labels(spec.task_kind);
    if (labelled && spec.label_set.empty())
        out.emplace_back("label_set: must be nonempty for " + std::string(to_string(spec.task_kind)));
    if (!labelled && !spec.label_set.empty())
        out.emplace_back("label_set: must be empty for " + std::string(to_string(spec.task_kind)));
    for (const auto& label : spec.label_set) {
        if (label.empty() || label != casefold(trim(label))) {
            out.emplace_back("label_set: '" + label + "' is not canonical (trimmed lowercase, nonempty)");
            break;
        }
    }
    if (spec.metric != metric_for(spec.task_kind))
        out.emplace_back("metric: " + std::string(to_string(spec.metric)) + " is inconsistent with task_kind " +
                         std::string(to_string(spec.task_kind)) + " (expected " +
                         std::string(to_string(metric_for(spec.task_kind))) + ")");
    if (!(spec.r_format >= 0.0) || !std::isfinite(spec.r_format))
        out.emplace_back("r_format: must be a finite nonnegative real");
    if (!(spec.r_alignment >= 0.0) || !std::isfinite(spec.r_alignment))
        out.emplace_back("r_alignment: must be a finite nonnegative real");
    if ((spec.task_kind == TaskKind::summarization || spec.task_kind == TaskKind::simplification) &&
        spec.r_format != 0.0)
        out.emplace_back("r_format: must be 0 for " + std::string(to_string(spec.task_kind)) +
                         " (no format constraint)");
    if (spec.strict_numeric && spec.task_kind != TaskKind::math)
        out.emplace_back("strict_numeric: only meaningful for math");
    return out;
}

std::vector<std::string> validate_run_config(const RunConfig& cfg) {
    std::vector<std::string> out;
    if (cfg.n < 2) out.emplace_back("n: group size must be >= 2");
    if (cfg.k < 1) out.emplace_back("k: batch size must be >= 1");
    if (cfg.iterations < 0) out.emplace_back("iterations: must be >= 0");
    if (cfg.t < 1) out.emplace_back("t: selection period must be >= 1");
    if (cfg.t > cfg.iterations) out.emplace_back("t: selection period must not exceed iterations");
    if (cfg.n_test < 1) out.emplace_back("n_test: must be >= 1");
    if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) out.emplace_back("epsilon: must lie in (0, 1)");
    if (!(cfg.beta >= 0.0)) out.emplace_back("beta: must be >= 0");
    if (!(cfg.r_token >= 0.0)) out.emplace_back("r_token: must be >= 0");
    if (!(cfg.r_structure >= 0.0)) out.emplace_back("r_structure: must be >= 0");
    if (!(cfg.learning_rate > 0.0)) out.emplace_back("learning_rate: must be > 0");
    if (!(cfg.weight_decay >= 0.0)) out.emplace_back("weight_decay: must be >= 0");
    if (!(cfg.advantage_std_floor > 0.0)) out.emplace_back("advantage_std_floor: must be > 0");
    return out;
}

std::string_view trim(std::string_view text) {
    auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
    while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
    return text;
}

std::string casefold(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace promptopt
