#include <doctest.h>

#include "promptopt/core.hpp"

using namespace promptopt;

namespace {

TaskSpec classification_spec() {
    TaskSpec s;
    s.task_kind = TaskKind::classification;
    s.label_set = {"positive", "negative"};
    s.metric = Metric::accuracy;
    return s;
}

}  // namespace

TEST_CASE("default run config carries the reference constants") {
    const RunConfig c;
    CHECK(c.n == 4);
    CHECK(c.k == 100);
    CHECK(c.t == 100);
    CHECK(c.n_test == 10);
    CHECK(c.epsilon == 0.2);
    CHECK(c.beta == 0.04);
    CHECK(c.r_token == 0.75);
    CHECK(c.r_structure == 0.75);
    CHECK(c.weight_decay == 0.1);
    CHECK(c.advantage_std_floor == 1e-8);
    CHECK(validate_run_config(c).empty());
}

TEST_CASE("validate_task_spec") {
    SUBCASE("well-formed classification spec") { CHECK(validate_task_spec(classification_spec()).empty()); }
    SUBCASE("summarization with a format reward") {
        TaskSpec s;
        s.task_kind = TaskKind::summarization;
        s.metric = Metric::rouge_avg;
        s.r_format = 1.0;
        const auto v = validate_task_spec(s);
        REQUIRE(v.size() == 1);
        CHECK(v[0].find("r_format") != std::string::npos);
    }
    SUBCASE("classification without labels") {
        auto s = classification_spec();
        s.label_set.clear();
        const auto v = validate_task_spec(s);
        REQUIRE(v.size() == 1);
        CHECK(v[0].find("label_set") != std::string::npos);
    }
    SUBCASE("metric must follow the task kind") {
        auto s = classification_spec();
        s.metric = Metric::sari;
        CHECK(validate_task_spec(s).size() == 1);
    }
    SUBCASE("labels must be canonical") {
        auto s = classification_spec();
        s.label_set = {"Positive"};
        CHECK(validate_task_spec(s).size() == 1);
    }
    SUBCASE("labels only for labelled tasks") {
        TaskSpec s;
        s.task_kind = TaskKind::math;
        s.metric = Metric::exact_integer;
        s.label_set = {"1"};
        CHECK(validate_task_spec(s).size() == 1);
    }
    SUBCASE("strict numeric only for math") {
        auto s = classification_spec();
        s.strict_numeric = true;
        CHECK(validate_task_spec(s).size() == 1);
    }
    SUBCASE("deterministic") { CHECK(validate_task_spec(classification_spec()) == validate_task_spec(classification_spec())); }
}

TEST_CASE("validate_run_config flags each broken field") {
    RunConfig c;
    c.n = 1;
    c.t = c.iterations + 1;
    c.epsilon = 1.0;
    c.beta = -1;
    const auto v = validate_run_config(c);
    CHECK(v.size() == 4);
}

TEST_CASE("task kind and metric names round-trip") {
    for (auto k : {TaskKind::classification, TaskKind::summarization, TaskKind::simplification,
                   TaskKind::multiple_choice, TaskKind::math}) {
        CHECK(parse_task_kind(to_string(k)) == k);
        CHECK(parse_metric(to_string(metric_for(k))) == metric_for(k));
    }
    CHECK_FALSE(parse_task_kind("poetry"));
}

TEST_CASE("trim and casefold") {
    CHECK(trim("  a b \n") == "a b");
    CHECK(trim(" \t") == "");
    CHECK(casefold("MiXeD") == "mixed");
}
