#include "promptopt/app.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "promptopt/config.hpp"
#include "promptopt/dataset.hpp"
#include "promptopt/errors.hpp"
#include "promptopt/training.hpp"

namespace promptopt {
namespace {

namespace fs = std::filesystem;

int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const CheckpointError& e) {
        err << "checkpoint error: " << e.what() << '\n';
        return kExitData;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const EvaluatorError& e) {
        err << "evaluator error: " << e.what() << '\n';
        return kExitTransport;
    } catch (const fs::filesystem_error& e) {
        err << "file error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }
}

AppConfig checked_config(const fs::path& path) {
    AppConfig cfg = load_config(path);
    const auto problems = validate_app_config(cfg);
    if (!problems.empty()) {
        std::string msg = path.string() + " is invalid:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ConfigError(msg);
    }
    return cfg;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw DataError("cannot write " + path.string());
}

std::string format_score(double value) {
    std::ostringstream os;
    os << std::setprecision(6) << std::fixed << value;
    return os.str();
}

nlohmann::json record_json(const CandidateRecord& r) {
    return {{"prompt", r.prompt}, {"score", r.score}, {"iteration", r.iteration}};
}

std::int64_t unix_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

}  // namespace

std::string checkpoint_name(int iteration) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "ckpt-%06d.ckpt", iteration);
    return buf;
}

int cmd_train(const TrainOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        AppConfig cfg = checked_config(opts.config);
        if (opts.seed) cfg.run.seed = *opts.seed;
        if (opts.out_dir) cfg.out_dir = *opts.out_dir;

        const TaskData data = load_task_data(cfg);
        const auto evaluator = make_evaluator(cfg);
        const auto generator = make_generator(cfg, data.bank);

        RunState state = initial_run_state(cfg.run);
        if (opts.resume) {
            state = load_checkpoint(*opts.resume, *generator);
            if (state.iteration > cfg.run.iterations)
                throw CheckpointError("checkpoint is at iteration " + std::to_string(state.iteration) +
                                      ", beyond the configured " + std::to_string(cfg.run.iterations));
        }

        const fs::path ckpt_dir = cfg.out_dir / kCheckpointDir;
        fs::create_directories(ckpt_dir);
        std::ofstream history(cfg.out_dir / kHistoryFile, std::ios::binary | std::ios::trunc);
        std::ofstream timing(cfg.out_dir / kTimingFile,
                             std::ios::binary | (opts.resume ? std::ios::app : std::ios::trunc));
        if (!history || !timing) throw DataError("cannot write logs under " + cfg.out_dir.string());
        for (const auto& h : state.history) history << to_json(h).dump() << '\n';

        const auto started = std::chrono::steady_clock::now();
        TrainingHooks hooks;
        hooks.on_iteration = [&](const IterationStats& st) {
            history << to_json(st).dump() << '\n';
            const auto elapsed =
                std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
            timing << nlohmann::json{{"iteration", st.iteration}, {"unix_ms", unix_ms()},
                                     {"elapsed_ms", elapsed.count()}}
                          .dump()
                   << '\n';
        };
        hooks.on_selection = [&](const RunState& s) {
            history.flush();
            timing.flush();
            save_checkpoint(ckpt_dir / checkpoint_name(s.iteration), s, *generator);
            save_checkpoint(ckpt_dir / kLatestCheckpoint, s, *generator);
            const auto& sel = *s.history.back().selection;
            if (!opts.quiet)
                out << "iteration " << s.iteration << ": mean reward " << format_score(s.history.back().mean_reward)
                    << ", selection best-of-" << sel.scores.size() << " " << format_score(sel.chosen_score)
                    << ", retained best " << format_score(s.best.score) << '\n';
        };

        const TrainingInputs inputs{cfg.run, cfg.spec, data.train, data.valid};
        try {
            run_training(state, inputs, *generator, *evaluator, hooks);
        } catch (const EvaluatorError&) {
            history.flush();
            save_checkpoint(ckpt_dir / kLatestCheckpoint, state, *generator);
            err << "checkpoint written to " << (ckpt_dir / kLatestCheckpoint).string() << " at iteration "
                << state.iteration << '\n';
            throw;
        }
        history.flush();

        save_checkpoint(ckpt_dir / kFinalCheckpoint, state, *generator);
        write_text(cfg.out_dir / kBestPromptFile, state.best.prompt);
        write_text(cfg.out_dir / kBestRecordFile, record_json(state.best).dump(2) + "\n");
        if (!opts.quiet) {
            if (state.best.prompt.empty())
                out << "no prompt selected (no selection event improved on score 0)\n";
            else
                out << "best score " << format_score(state.best.score) << " from iteration " << state.best.iteration
                    << "\n";
            out << "artifacts in " << cfg.out_dir.string() << '\n';
        }
        return int{kExitOk};
    });
}

int cmd_score(const ScoreOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const AppConfig cfg = checked_config(opts.config);
        std::string prompt = read_text(opts.prompt_file);
        while (!prompt.empty() && (prompt.back() == '\n' || prompt.back() == '\r')) prompt.pop_back();
        if (trim(prompt).empty()) throw DataError(opts.prompt_file.string() + ": prompt is empty");
        const auto data = load_dataset(opts.data, cfg.spec);
        const auto evaluator = make_evaluator(cfg);
        const MetricScore score = evaluate_prompt(prompt, data, cfg.spec, *evaluator);
        if (opts.json)
            out << nlohmann::json(score.value).dump() << '\n';
        else
            out << to_string(cfg.spec.metric) << " " << format_score(score.value) << " on " << data.size()
                << " examples\n";
        return int{kExitOk};
    });
}

int cmd_select(const SelectOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const AppConfig cfg = checked_config(opts.config);
        const TaskData data = load_task_data(cfg);
        const auto evaluator = make_evaluator(cfg);
        const auto generator = make_generator(cfg, data.bank);
        RunState state = load_checkpoint(opts.checkpoint, *generator);
        const int n_test = opts.n_test.value_or(cfg.run.n_test);
        const SelectionResult sel = select_best_prompt(*generator, data.valid, cfg.spec, *evaluator, n_test,
                                                       state.best, state.rng, state.iteration);
        const CandidateRecord candidate{sel.event.chosen_prompt, sel.event.chosen_score, state.iteration,
                                        CandidateOrigin::selection_sample};
        if (opts.json) {
            out << nlohmann::json{{"candidate", record_json(candidate)},
                                  {"scores", sel.event.scores},
                                  {"best", record_json(sel.best)},
                                  {"improved", sel.event.improved}}
                       .dump(2)
                << '\n';
        } else {
            out << "sampled " << n_test << " prompt(s); top candidate scores " << format_score(candidate.score)
                << ":\n"
                << candidate.prompt << "\n\n"
                << (sel.event.improved ? "new best" : "retained best") << " " << format_score(sel.best.score)
                << '\n';
        }
        return int{kExitOk};
    });
}

int cmd_validate_config(const fs::path& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const AppConfig cfg = checked_config(config);
        const TaskData data = load_task_data(cfg);
        make_evaluator(cfg);
        make_generator(cfg, data.bank);
        out << config.string() << ": ok (" << data.train.size() << " train, " << data.valid.size() << " valid, "
            << data.bank.size() << " demonstrations)\n";
        return int{kExitOk};
    });
}

}  // namespace promptopt
