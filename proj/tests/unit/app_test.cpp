#include <doctest.h>

#include <sstream>

#include "promptopt/app.hpp"
#include "promptopt/config.hpp"
#include "promptopt/dataset.hpp"
#include "promptopt/training.hpp"
#include "run_config.hpp"
#include "test_util.hpp"

using namespace promptopt;

namespace {

struct Captured {
    int code = 0;
    std::string out, err;
};

template <class Fn>
Captured capture(Fn&& fn) {
    std::ostringstream out, err;
    Captured c;
    c.code = fn(out, err);
    c.out = out.str();
    c.err = err.str();
    return c;
}

}  // namespace

TEST_CASE("checkpoint names") {
    CHECK(checkpoint_name(100) == "ckpt-000100.ckpt");
    CHECK(checkpoint_name(2000) == "ckpt-002000.ckpt");
}

TEST_CASE("validate-config") {
    const auto ok = capture([](auto& o, auto& e) {
        return cmd_validate_config(testutil::data_path("configs/synthetic_sst2.ini"), o, e);
    });
    CHECK(ok.code == kExitOk);
    CHECK(ok.out.find("ok (114 train, 40 valid, 10 demonstrations)") != std::string::npos);

    const auto missing = capture([](auto& o, auto& e) {
        return cmd_validate_config(testutil::data_path("configs/missing_dataset.ini"), o, e);
    });
    CHECK(missing.code == kExitData);
    CHECK(missing.err.find("no_such_train.jsonl") != std::string::npos);

    testutil::TempDir dir("cfg");
    testutil::spit(dir / "bad.ini", "[run]\ngroup_size = 1\n");
    const auto bad = capture([&](auto& o, auto& e) { return cmd_validate_config(dir / "bad.ini", o, e); });
    CHECK(bad.code == kExitConfig);
    CHECK(bad.err.find("group_size") != std::string::npos);
    const auto absent = capture([&](auto& o, auto& e) { return cmd_validate_config(dir / "nope.ini", o, e); });
    CHECK(absent.code == kExitConfig);
}

TEST_CASE("score matches evaluate_prompt") {
    const auto prompt_file = testutil::data_path("prompts/sst2_two_shot_prompt.txt");
    const auto data_file = testutil::data_path("tasks/classification.jsonl");
    const auto config = testutil::data_path("configs/sst2_score.ini");

    const auto json = capture([&](auto& o, auto& e) { return cmd_score({prompt_file, data_file, config, true}, o, e); });
    CHECK(json.code == kExitOk);
    CHECK(json.out == "1.0\n");

    const auto cfg = load_config(config);
    const auto ev = make_evaluator(cfg);
    std::string prompt = testutil::slurp(prompt_file);
    while (!prompt.empty() && prompt.back() == '\n') prompt.pop_back();
    const auto data = load_dataset(data_file, cfg.spec);
    CHECK(evaluate_prompt(prompt, data, cfg.spec, *ev).value == 1.0);

    testutil::TempDir dir("score");
    testutil::spit(dir / "plain.txt", "Return only the label.\n");
    const auto text = capture([&](auto& o, auto& e) { return cmd_score({dir / "plain.txt", data_file, config, false}, o, e); });
    CHECK(text.out.find("accuracy 0.000000 on 20 examples") != std::string::npos);

    testutil::spit(dir / "empty.txt", "\n");
    CHECK(capture([&](auto& o, auto& e) { return cmd_score({dir / "empty.txt", data_file, config, true}, o, e); }).code ==
          kExitData);
    testutil::spit(dir / "bad.jsonl", "{\"input\": \"x\", \"gold\": \"neutral\"}\n");
    const auto bad = capture([&](auto& o, auto& e) { return cmd_score({prompt_file, dir / "bad.jsonl", config, true}, o, e); });
    CHECK(bad.code == kExitData);
    CHECK(bad.err.find("line 1") != std::string::npos);
}

TEST_CASE("train, then rescore and reselect") {
    testutil::TempDir dir("train");
    const auto config = testutil::write_config_copy("configs/synthetic_sst2.ini", dir / "run.ini",
                                                    {{"iterations", "300"}, {"out", (dir / "out").string()}});
    const auto run = capture([&](auto& o, auto& e) { return cmd_train({config, {}, {}, {}, false}, o, e); });
    REQUIRE(run.code == kExitOk);
    CHECK(run.out.find("iteration 300:") != std::string::npos);

    const auto out = dir / "out";
    for (const char* f : {kBestPromptFile, kBestRecordFile, kHistoryFile, kTimingFile})
        CHECK(std::filesystem::exists(out / f));
    for (int i : {100, 200, 300}) CHECK(std::filesystem::exists(out / kCheckpointDir / checkpoint_name(i)));
    CHECK(std::filesystem::exists(out / kCheckpointDir / kFinalCheckpoint));
    CHECK(testutil::read_jsonl(out / kHistoryFile).size() == 300);

    const auto best = nlohmann::json::parse(testutil::slurp(out / kBestRecordFile));
    const std::string best_prompt = testutil::slurp(out / kBestPromptFile);
    CHECK(best["prompt"] == best_prompt);

    // the stored best prompt re-scores to the recorded value
    const auto cfg = load_config(config);
    const auto data = load_task_data(cfg);
    const auto ev = make_evaluator(cfg);
    if (!best_prompt.empty())
        CHECK(evaluate_prompt(best_prompt, data.valid, cfg.spec, *ev).value == best["score"].get<double>());

    const auto sel = capture([&](auto& o, auto& e) {
        return cmd_select({config, out / kCheckpointDir / kFinalCheckpoint, 1, true}, o, e);
    });
    REQUIRE(sel.code == kExitOk);
    const auto j = nlohmann::json::parse(sel.out);
    CHECK(j["scores"].size() == 1);
    CHECK(j["best"]["score"].get<double>() >= best["score"].get<double>());

    SUBCASE("resume from a middle checkpoint reproduces the logs") {
        const auto resumed = dir / "resumed";
        const auto r = capture([&](auto& o, auto& e) {
            return cmd_train({config, out / kCheckpointDir / checkpoint_name(200), {}, resumed, true}, o, e);
        });
        REQUIRE(r.code == kExitOk);
        CHECK(r.out.empty());
        CHECK(testutil::slurp(resumed / kHistoryFile) == testutil::slurp(out / kHistoryFile));
        CHECK(testutil::slurp(resumed / kBestPromptFile) == best_prompt);
        CHECK(testutil::slurp(resumed / kCheckpointDir / kFinalCheckpoint) ==
              testutil::slurp(out / kCheckpointDir / kFinalCheckpoint));
    }
    SUBCASE("corrupt checkpoints exit with the data code") {
        testutil::spit(dir / "junk.ckpt", "promptopt-checkpoint 9\n{}\n");
        const auto r = capture([&](auto& o, auto& e) { return cmd_select({config, dir / "junk.ckpt", {}, false}, o, e); });
        CHECK(r.code == kExitData);
        CHECK(r.err.find("version mismatch") != std::string::npos);
        const auto t = capture([&](auto& o, auto& e) { return cmd_train({config, dir / "junk.ckpt", {}, dir / "x", true}, o, e); });
        CHECK(t.code == kExitData);
    }
}

TEST_CASE("an unreachable evaluator exits with the transport code and leaves a checkpoint") {
    testutil::TempDir dir("remote");
    std::string text = testutil::slurp(testutil::write_config_copy("configs/synthetic_sst2.ini", dir / "base.ini",
                                                                   {{"iterations", "20"}, {"selection_period", "10"}, {"out", (dir / "out").string()}}));
    const auto at = text.find("[evaluator]");
    const auto end = text.find("[policy]");
    text.replace(at, end - at,
                 "[evaluator]\nkind = remote\nendpoint = http://127.0.0.1:1\nmodel = m\nmax_retries = 0\n"
                 "timeout_ms = 500\n\n");
    testutil::spit(dir / "remote.ini", text);
    const auto r = capture([&](auto& o, auto& e) { return cmd_train({dir / "remote.ini", {}, {}, {}, true}, o, e); });
    CHECK(r.code == kExitTransport);
    CHECK(r.err.find("evaluator error") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "out" / kCheckpointDir / kLatestCheckpoint));
}
