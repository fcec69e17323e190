#include "promptopt/training.hpp"

#include <exception>
#include <fstream>
#include <sstream>
#include <numeric>
#include <stdexcept>

#include "promptopt/errors.hpp"
#include "promptopt/reward.hpp"

namespace promptopt {
namespace {

nlohmann::json selection_json(const SelectionEvent& e) {
    return {{"scores", e.scores},       {"chosen_index", e.chosen_index},
            {"chosen_score", e.chosen_score}, {"chosen_prompt", e.chosen_prompt},
            {"improved", e.improved},   {"params_unchanged", e.params_unchanged}};
}

SelectionEvent selection_from_json(const nlohmann::json& j) {
    SelectionEvent e;
    e.scores = j.at("scores").get<std::vector<double>>();
    e.chosen_index = j.at("chosen_index").get<std::size_t>();
    e.chosen_score = j.at("chosen_score").get<double>();
    e.chosen_prompt = j.at("chosen_prompt").get<std::string>();
    e.improved = j.at("improved").get<bool>();
    e.params_unchanged = j.at("params_unchanged").get<bool>();
    return e;
}

std::string_view to_string(CandidateOrigin origin) {
    return origin == CandidateOrigin::training_sample ? "training_sample" : "selection_sample";
}

}  // namespace

nlohmann::json to_json(const IterationStats& s) {
    nlohmann::json j = {
        {"iteration", s.iteration},
        {"rewards", s.rewards},
        {"mean_reward", s.mean_reward},
        {"mean_abs_advantage", s.mean_abs_advantage},
        {"clip_fraction", s.clip_fraction},
        {"kl_mean", s.kl_mean},
        {"parse_failures", s.parse_failures},
        {"eval_failures", s.eval_failures},
        {"best_score", s.best_score},
    };
    if (s.selection) j["selection"] = selection_json(*s.selection);
    return j;
}

IterationStats iteration_from_json(const nlohmann::json& j) {
    IterationStats s;
    s.iteration = j.at("iteration").get<int>();
    s.rewards = j.at("rewards").get<std::vector<double>>();
    s.mean_reward = j.at("mean_reward").get<double>();
    s.mean_abs_advantage = j.at("mean_abs_advantage").get<double>();
    s.clip_fraction = j.at("clip_fraction").get<double>();
    s.kl_mean = j.at("kl_mean").get<double>();
    s.parse_failures = j.at("parse_failures").get<int>();
    s.eval_failures = j.at("eval_failures").get<int>();
    s.best_score = j.at("best_score").get<double>();
    if (j.contains("selection")) s.selection = selection_from_json(j.at("selection"));
    return s;
}

RunState initial_run_state(const RunConfig& cfg) {
    RunState s;
    s.rng = Rng(cfg.seed);
    s.best = CandidateRecord{"", 0.0, 0, CandidateOrigin::selection_sample};
    return s;
}

MetricScore evaluate_prompt(std::string_view prompt, std::span<const LabeledExample> data, const TaskSpec& spec,
                            const Evaluator& evaluator) {
    if (data.empty()) throw std::invalid_argument("evaluate_prompt: empty dataset");
    const Scale scale = spec.task_kind == TaskKind::simplification ? Scale::percent : Scale::unit;
    if (trim(prompt).empty()) return {0.0, scale};
    const std::string shown = with_output_suffix(prompt, spec);

    std::vector<double> values(data.size(), 0.0);
    std::vector<std::exception_ptr> errors(data.size());
    parallel_for(data.size(), evaluator.parallelism(), [&](std::size_t i) {
        try {
            values[i] = metric_value(spec, evaluator.evaluate(shown, data[i]), data[i]);
        } catch (const EvaluatorError&) {
            errors[i] = std::current_exception();
        }
    });
    std::size_t failed = 0;
    for (const auto& e : errors) failed += e != nullptr;
    if (failed == data.size()) std::rethrow_exception(errors.front());
    const double sum = std::accumulate(values.begin(), values.end(), 0.0);
    return {sum / static_cast<double>(data.size()), scale};
}

SelectionResult select_best_prompt(const PromptGenerator& generator, std::span<const LabeledExample> valid,
                                   const TaskSpec& spec, const Evaluator& evaluator, int n_test,
                                   const CandidateRecord& current_best, Rng& rng, int iteration) {
    if (n_test < 1) throw std::invalid_argument("select_best_prompt: n_test must be >= 1");
    if (valid.empty()) throw std::invalid_argument("select_best_prompt: empty validation set");

    const nlohmann::json before = generator.state();
    SelectionResult out;
    out.best = current_best;
    std::vector<std::string> prompts;
    for (int j = 0; j < n_test; ++j) {
        const Rollout r = generator.generate(rng);
        prompts.push_back(r.prompt());
        out.event.scores.push_back(r.output.parse_ok ? evaluate_prompt(r.prompt(), valid, spec, evaluator).value
                                                     : 0.0);
    }
    for (std::size_t j = 1; j < out.event.scores.size(); ++j)
        if (out.event.scores[j] > out.event.scores[out.event.chosen_index]) out.event.chosen_index = j;
    out.event.chosen_score = out.event.scores[out.event.chosen_index];
    out.event.chosen_prompt = prompts[out.event.chosen_index];
    if (out.event.chosen_score > current_best.score && !out.event.chosen_prompt.empty()) {
        out.event.improved = true;
        out.best = CandidateRecord{out.event.chosen_prompt, out.event.chosen_score, iteration,
                                   CandidateOrigin::selection_sample};
    }
    out.event.params_unchanged = generator.state() == before;
    return out;
}

std::vector<std::size_t> sample_batch_indices(std::size_t population, std::size_t k, Rng& rng) {
    std::vector<std::size_t> idx(population);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t take = std::min(k, population);
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(population - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(take);
    return idx;
}

void run_training(RunState& state, const TrainingInputs& in, PromptGenerator& generator, const Evaluator& evaluator,
                  const TrainingHooks& hooks) {
    const RunConfig& cfg = in.cfg;
    if (in.train.empty() || in.valid.empty()) throw std::invalid_argument("run_training: empty train or valid set");
    if (cfg.n < 2) throw std::invalid_argument("run_training: group size must be >= 2");
    if (cfg.t < 1 || cfg.k < 1) throw std::invalid_argument("run_training: t and k must be positive");

    std::vector<LabeledExample> batch;
    while (state.iteration < cfg.iterations) {
        const int i = state.iteration + 1;
        const Rng rng_at_start = state.rng;
        try {
            batch.clear();
            for (auto idx : sample_batch_indices(in.train.size(), static_cast<std::size_t>(cfg.k), state.rng))
                batch.push_back(in.train[idx]);

            std::vector<Rollout> group;
            group.reserve(cfg.n);
            for (int j = 0; j < cfg.n; ++j) group.push_back(generator.generate(state.rng));

            IterationStats st;
            st.iteration = i;
            for (const auto& r : group) {
                BatchScore eval;
                if (r.output.parse_ok && !trim(r.prompt()).empty()) {
                    eval = score_prompt_on_batch(r.prompt(), batch, in.spec, evaluator);
                    st.eval_failures += static_cast<int>(eval.failed);
                } else {
                    ++st.parse_failures;
                    eval = BatchScore{};
                }
                GeneratorOutput out = r.output;
                out.parse_ok = out.parse_ok && !eval.outcomes.empty();
                st.rewards.push_back(total_reward(out, eval, cfg).total);
            }

            const StepStats step = generator.update(group, st.rewards, cfg);
            st.mean_reward = step.mean_reward;
            st.mean_abs_advantage = step.mean_abs_advantage;
            st.clip_fraction = step.clip_fraction;
            st.kl_mean = step.kl_mean;

            if (i % cfg.t == 0) {
                SelectionResult sel =
                    select_best_prompt(generator, in.valid, in.spec, evaluator, cfg.n_test, state.best, state.rng, i);
                state.best = std::move(sel.best);
                st.selection = std::move(sel.event);
            }
            st.best_score = state.best.score;
            state.history.push_back(std::move(st));
            state.iteration = i;
        } catch (const EvaluatorError&) {
            state.rng = rng_at_start;
            throw;
        }
        if (hooks.on_iteration) hooks.on_iteration(state.history.back());
        if (state.history.back().selection && hooks.on_selection) hooks.on_selection(state);
    }
}

TrainingResult run_training(const TrainingInputs& inputs, PromptGenerator& generator, const Evaluator& evaluator) {
    RunState state = initial_run_state(inputs.cfg);
    run_training(state, inputs, generator, evaluator);
    return {state.best, std::move(state.history)};
}

std::string serialize_checkpoint(const RunState& state, const PromptGenerator& generator) {
    nlohmann::json history = nlohmann::json::array();
    for (const auto& h : state.history) history.push_back(to_json(h));
    const nlohmann::json body = {
        {"iteration", state.iteration},
        {"best",
         {{"prompt", state.best.prompt},
          {"score", state.best.score},
          {"iteration", state.best.iteration},
          {"origin", to_string(state.best.origin)}}},
        {"rng", state.rng.state()},
        {"history", std::move(history)},
        {"generator", generator.state()},
    };
    return std::string(kCheckpointMagic) + " " + std::to_string(kCheckpointVersion) + "\n" + body.dump() + "\n";
}

RunState parse_checkpoint(std::string_view text, PromptGenerator& generator) {
    const auto eol = text.find('\n');
    const std::string_view header = text.substr(0, eol);
    const std::string magic = std::string(kCheckpointMagic) + " ";
    if (header.substr(0, magic.size()) != magic) throw CheckpointError("not a promptopt checkpoint (bad header)");
    const std::string_view version = trim(header.substr(magic.size()));
    if (version != std::to_string(kCheckpointVersion))
        throw CheckpointError("checkpoint version mismatch: file has '" + std::string(version) + "', expected " +
                              std::to_string(kCheckpointVersion));
    if (eol == std::string_view::npos) throw CheckpointError("checkpoint body missing");

    RunState state;
    nlohmann::json generator_state;
    try {
        const auto body = nlohmann::json::parse(text.substr(eol + 1));
        state.iteration = body.at("iteration").get<int>();
        const auto& best = body.at("best");
        state.best.prompt = best.at("prompt").get<std::string>();
        state.best.score = best.at("score").get<double>();
        state.best.iteration = best.at("iteration").get<int>();
        state.best.origin = best.at("origin").get<std::string>() == "training_sample"
                                ? CandidateOrigin::training_sample
                                : CandidateOrigin::selection_sample;
        state.rng.restore(body.at("rng").get<std::string>());
        for (const auto& h : body.at("history")) state.history.push_back(iteration_from_json(h));
        generator_state = body.at("generator");
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
    }
    if (state.iteration < 0 || state.history.size() != static_cast<std::size_t>(state.iteration))
        throw CheckpointError("corrupt checkpoint: history length does not match iteration");
    generator.restore(generator_state);
    return state;
}

void save_checkpoint(const std::filesystem::path& path, const RunState& state, const PromptGenerator& generator) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << serialize_checkpoint(state, generator);
        if (!out) throw CheckpointError("cannot write checkpoint " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

RunState load_checkpoint(const std::filesystem::path& path, PromptGenerator& generator) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_checkpoint(buf.str(), generator);
}

}  // namespace promptopt
