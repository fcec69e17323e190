#include <doctest.h>

#include "promptopt/config.hpp"
#include "promptopt/dataset.hpp"
#include "promptopt/errors.hpp"
#include "test_util.hpp"

using namespace promptopt;

namespace {

TaskSpec sentiment() {
    TaskSpec s;
    s.label_set = {"positive", "negative"};
    return s;
}

std::size_t line_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const DataError& e) {
        return e.line();
    }
    return 0;
}

const char* kMinimalConfig = R"(
[run]
train = data/train.jsonl
valid = data/valid.jsonl

[task]
kind = classification
labels = ["positive", "negative"]

[evaluator]
default = {"behavior": "echo_gold"}

[policy]
instructions = ["Label it."]
)";

}  // namespace

TEST_CASE("datasets load in file order") {
    const std::string text =
        "{\"input\": \"a\", \"gold\": \"Positive\"}\n\n{\"input\": \"b\", \"gold\": \"negative\"}\n"
        "{\"input\": \"c\", \"gold\": \"positive\"}\n";
    const auto rows = parse_dataset(text, sentiment());
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == LabeledExample{"a", "positive", {}});
    CHECK(rows[2].input == "c");
}

TEST_CASE("dataset errors carry the line number") {
    const auto spec = sentiment();
    const std::string neutral =
        "{\"input\": \"a\", \"gold\": \"positive\"}\n{\"input\": \"b\", \"gold\": \"negative\"}\n"
        "{\"input\": \"c\", \"gold\": \"neutral\"}\n";
    CHECK(line_of([&] { parse_dataset(neutral, spec); }) == 3);
    try {
        parse_dataset(neutral, spec, "train.jsonl");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("train.jsonl") != std::string::npos);
        CHECK(msg.find("neutral") != std::string::npos);
        CHECK(msg.find("(line 3)") != std::string::npos);
    }
    CHECK(line_of([&] { parse_dataset("{\"input\": \"a\", \"gold\": \"positive\"}\n{oops\n", spec); }) == 2);
    CHECK(line_of([&] { parse_dataset("[1, 2]\n", spec); }) == 1);
    CHECK(line_of([&] { parse_dataset("{\"input\": 3, \"gold\": \"positive\"}\n", spec); }) == 1);
    CHECK(line_of([&] { parse_dataset("{\"input\": \"a\", \"gold\": \"\"}\n", spec); }) == 1);
    CHECK(line_of([&] { parse_dataset("{\"input\": \"a\", \"gold\": \"positive\", \"refs\": [\"x\"]}\n", spec); }) == 1);
    CHECK_THROWS_WITH_AS(parse_dataset("\n\n", spec), doctest::Contains("empty"), DataError);

    TaskSpec math;
    math.task_kind = TaskKind::math;
    math.metric = Metric::exact_integer;
    math.label_set.clear();
    CHECK(parse_dataset("{\"input\": \"2+2\", \"gold\": \"4\"}\n", math).size() == 1);
    CHECK(line_of([&] { parse_dataset("{\"input\": \"2+2\", \"gold\": \"four\"}\n", math); }) == 1);
}

TEST_CASE("dataset files round-trip") {
    testutil::TempDir dir("data");
    TaskSpec simp;
    simp.task_kind = TaskKind::simplification;
    simp.metric = Metric::sari;
    simp.label_set.clear();
    simp.r_format = 0;
    const std::vector<LabeledExample> rows = {{"The feline rested.", "The cat slept.", {"A cat slept."}},
                                              {"Utilize it.", "Use it.", {}}};
    write_dataset(dir / "s.jsonl", rows);
    CHECK(load_dataset(dir / "s.jsonl", simp) == rows);
    CHECK_THROWS_WITH_AS(load_dataset(dir / "none.jsonl", simp), doctest::Contains("none.jsonl"), DataError);
}

TEST_CASE("bundled task fixtures load") {
    for (const char* name : {"classification", "summarization", "simplification", "multiple_choice", "math"}) {
        TaskSpec spec;
        spec.task_kind = *parse_task_kind(name);
        spec.metric = metric_for(spec.task_kind);
        if (spec.task_kind == TaskKind::classification) spec.label_set = {"positive", "negative"};
        if (spec.task_kind == TaskKind::multiple_choice) spec.label_set = {"a", "b", "c", "d", "e"};
        CHECK(load_dataset(testutil::data_path(std::string("tasks/") + name + ".jsonl"), spec).size() == 20);
    }
}

TEST_CASE("config parsing") {
    const auto cfg = parse_config(kMinimalConfig, "/base");
    CHECK(cfg.train_path == std::filesystem::path("/base/data/train.jsonl"));
    CHECK(cfg.out_dir == std::filesystem::path("promptopt-out"));
    CHECK(cfg.run.n == 4);
    CHECK(cfg.run.weight_decay == 0.1);
    CHECK(cfg.spec.label_set == std::vector<std::string>{"positive", "negative"});
    CHECK(cfg.spec.r_format == 1.0);
    CHECK(cfg.policy.max_shots == 3);
    CHECK(cfg.policy.remote.temperature == 1.0);
    CHECK(validate_app_config(cfg).empty());

    const auto summ = parse_config("[task]\nkind = summarization\n", "/");
    CHECK(summ.spec.metric == Metric::rouge_avg);
    CHECK(summ.spec.r_format == 0.0);

    const auto quoted = parse_config("[task]\noutput_suffix = \"  padded; not a comment \"\n", "/");
    CHECK(quoted.spec.output_suffix == "  padded; not a comment ");
}

TEST_CASE("config errors name section and key") {
    CHECK_THROWS_WITH_AS(parse_config("[run]\nbogus = 1\n", "/"), "[run] bogus: unknown key", ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("[extra]\nx = 1\n", "/"), doctest::Contains("[extra]"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("[run]\ngroup_size = four\n", "/"), doctest::Contains("[run] group_size"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("[task]\nkind = poetry\n", "/"), doctest::Contains("[task] kind"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("[policy]\ninstructions = [1]\n", "/"),
                         doctest::Contains("[policy] instructions"), ConfigError);

    auto cfg = parse_config(kMinimalConfig, "/base");
    cfg.run.n = 1;
    cfg.evaluator.fallback = nullptr;
    cfg.policy.instructions.clear();
    const auto problems = validate_app_config(cfg);
    auto mentions = [&](const std::string& s) {
        return std::any_of(problems.begin(), problems.end(), [&](const std::string& p) { return p.find(s) != std::string::npos; });
    };
    CHECK(mentions("[run]"));
    CHECK(mentions("[evaluator]"));
    CHECK(mentions("[policy] instructions"));

    auto remote = parse_config(kMinimalConfig, "/base");
    remote.evaluator.kind = "remote";
    const auto remote_problems = validate_app_config(remote);
    CHECK(std::count_if(remote_problems.begin(), remote_problems.end(),
                        [](const std::string& p) { return p.rfind("[evaluator]", 0) == 0; }) == 2);
}

TEST_CASE("task data from the synthetic config") {
    const auto cfg = load_config(testutil::data_path("configs/synthetic_sst2.ini"));
    CHECK(cfg.run.weight_decay == 0.01);
    const auto data = load_task_data(cfg);
    CHECK(data.train.size() == 114);
    CHECK(data.valid.size() == 40);
    CHECK(data.bank.size() == 10);
    // the bank is held out of the training set
    for (const auto& b : data.bank)
        CHECK(std::find(data.train.begin(), data.train.end(), b) == data.train.end());

    auto capped = cfg;
    capped.valid_cap = 7;
    CHECK(load_task_data(capped).valid.size() == 7);
}
