#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "finite_difference.hpp"
#include "promptopt/grpo.hpp"
#include "random_policy.hpp"

using namespace promptopt;

namespace {

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double pop_std(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

/// Group of n draws with logprob_old perturbed so that ratios spread across
/// the clip boundaries, and random rewards.
std::vector<GroupSample> random_group(const SlotPolicyParams& p, std::mt19937& gen, Rng& rng, int n) {
    std::normal_distribution<double> shift(0.0, 0.3);
    std::uniform_real_distribution<double> reward(0.0, 3.5);
    std::vector<GroupSample> g;
    for (int i = 0; i < n; ++i) {
        const auto d = sample(p, rng);
        double lp_old = d.logprob + shift(gen);
        // keep every ratio away from the kinks at 1 +- eps
        for (double edge : {std::log(0.8), std::log(1.2)})
            if (std::abs((d.logprob - lp_old) - edge) < 1e-3) lp_old += 0.01;
        g.push_back({d.choices, lp_old, reward(gen)});
    }
    return g;
}

std::vector<double> rewards_of(const std::vector<GroupSample>& g) {
    std::vector<double> r;
    for (const auto& s : g) r.push_back(s.reward);
    return r;
}

}  // namespace

TEST_CASE("group_advantages examples") {
    const auto a = group_advantages(std::vector<double>{1, 2, 3, 4}, 1e-8);
    const std::vector<double> expect = {-1.3416, -0.4472, 0.4472, 1.3416};
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(a[i] - expect[i]) < 1e-4);
    CHECK(group_advantages(std::vector<double>{2, 2, 2, 2}, 1e-8) == std::vector<double>(4, 0.0));
    const auto shifted = group_advantages(std::vector<double>{11, 12, 13, 14}, 1e-8);
    for (std::size_t i = 0; i < 4; ++i) CHECK(shifted[i] == doctest::Approx(a[i]).epsilon(1e-12));
    CHECK_THROWS_AS(group_advantages(std::vector<double>{1}, 1e-8), std::invalid_argument);
    CHECK_THROWS_AS(group_advantages(std::vector<double>{1, 2}, 0.0), std::invalid_argument);
}

TEST_CASE("group_advantages: zero mean, unit std, shift and scale invariance") {
    std::mt19937 gen(11);
    std::uniform_real_distribution<double> r(0, 3.5), shift(-100, 100), scale(0.01, 100);
    std::uniform_int_distribution<int> size(2, 16);
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> rewards(static_cast<std::size_t>(size(gen)));
        for (auto& x : rewards) x = r(gen);
        const auto a = group_advantages(rewards, 1e-8);
        CHECK(std::abs(mean(a)) < 1e-12);
        CHECK(std::abs(pop_std(a) - 1.0) < 1e-9);
        const double c = shift(gen), k = scale(gen);
        std::vector<double> moved, scaled;
        for (double x : rewards) {
            moved.push_back(x + c);
            scaled.push_back(x * k);
        }
        const auto am = group_advantages(moved, 1e-8), as = group_advantages(scaled, 1e-8);
        for (std::size_t j = 0; j < a.size(); ++j) {
            CHECK(std::abs(am[j] - a[j]) < 1e-9);
            CHECK(std::abs(as[j] - a[j]) < 1e-9);
        }
    }
}

TEST_CASE("clipped_term") {
    CHECK(clipped_term(1.5, 1.0, 0.2) == doctest::Approx(1.2));
    CHECK(clipped_term(0.5, -1.0, 0.2) == doctest::Approx(-0.8));
    CHECK(clipped_term(1.0, 0.37, 0.2) == 0.37);
    std::mt19937 gen(12);
    std::uniform_real_distribution<double> ratio(0.01, 5), adv(-5, 5), eps(0.01, 0.99);
    for (int i = 0; i < 100000; ++i) {
        const double p = ratio(gen), a = adv(gen);
        CHECK(clipped_term(p, a, eps(gen)) <= p * a);
    }
}

TEST_CASE("kl_estimate") {
    CHECK(kl_estimate(-1.3, -1.3) == 0.0);
    CHECK(kl_estimate(std::log(2.0), 0.0) == doctest::Approx(2.0 - std::log(2.0) - 1.0).epsilon(1e-14));
    CHECK(kl_estimate(0.0, std::log(2.0)) == doctest::Approx(0.5 + std::log(2.0) - 1.0).epsilon(1e-14));
    CHECK(kl_estimate(std::log(2.0), 0.0) == doctest::Approx(0.3069).epsilon(1e-4));
    CHECK(kl_estimate(0.0, std::log(2.0)) == doctest::Approx(0.1931).epsilon(1e-4));
    CHECK(kl_estimate(0.0, 1e-9) > 0.0);
    std::mt19937 gen(13);
    std::uniform_real_distribution<double> lp(-30, 0);
    for (int i = 0; i < 100000; ++i) {
        const double a = lp(gen), b = lp(gen);
        const double k = kl_estimate(a, b);
        CHECK(k >= 0.0);
        if (a != b) CHECK(k > 0.0);
        CHECK(kl_estimate(a, a) == 0.0);
    }
}

TEST_CASE("grad_logprob matches central differences") {
    std::mt19937 gen(21);
    Rng rng(21);
    for (int i = 0; i < 100; ++i) {
        const auto p = testutil::random_three_slot_policy(gen);
        const auto choices = sample(p, rng).choices;
        const auto fd = testutil::central_difference(p, [&](const SlotPolicyParams& q) { return logprob(q, choices); });
        CHECK(testutil::relative_error(grad_logprob(p, choices), fd) < 1e-5);
    }
}

TEST_CASE("objective gradient matches central differences") {
    std::mt19937 gen(22);
    Rng rng(22);
    RunConfig cfg;
    for (int i = 0; i < 100; ++i) {
        const auto p = testutil::random_three_slot_policy(gen);
        std::normal_distribution<double> noise(0.0, 0.5);
        auto ref = p;
        for (auto& slot : ref.slots)
            for (auto& l : slot.logits) l += noise(gen);
        const auto group = random_group(p, gen, rng, cfg.n);
        const auto adv = group_advantages(rewards_of(group), cfg.advantage_std_floor);
        const auto analytic = grpo_objective_gradient(p, group, adv, ref, cfg);
        const auto fd = testutil::central_difference(
            p, [&](const SlotPolicyParams& q) { return grpo_objective(q, group, adv, ref, cfg); });
        CHECK(testutil::relative_error(analytic, fd) < 1e-4);
    }
}

TEST_CASE("grpo_step") {
    RunConfig cfg;
    SUBCASE("equal rewards at the reference: only weight decay moves the logits") {
        SlotPolicyParams p{{{"instruction", SlotKind::instruction_variant, {"a", "b", "c"}, {0.4, -0.2, 1.0}}}};
        Rng rng(3);
        std::vector<GroupSample> g;
        for (int i = 0; i < cfg.n; ++i) {
            const auto d = sample(p, rng);
            g.push_back({d.choices, d.logprob, 2.0});
        }
        const auto step = grpo_step(p, g, p, cfg);
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(step.params.slots[0].logits[c] ==
                  doctest::Approx(p.slots[0].logits[c] * (1 - cfg.learning_rate * cfg.weight_decay)).epsilon(1e-14));
        CHECK(step.stats.mean_abs_advantage == 0.0);
        CHECK(step.stats.kl_mean == 0.0);
        CHECK(step.stats.clip_fraction == 0.0);
        CHECK(step.stats.mean_reward == 2.0);
    }
    SUBCASE("rewarded choice gains probability") {
        SlotPolicyParams p{{{"instruction", SlotKind::instruction_variant, {"bad", "good"}, {0.0, 0.0}}}};
        const double lp = std::log(0.5);
        const std::vector<GroupSample> g = {{{{1}}, lp, 3.5}, {{{0}}, lp, 1.5}, {{{1}}, lp, 3.5}, {{{0}}, lp, 1.5}};
        const auto step = grpo_step(p, g, p, cfg);
        CHECK(softmax(step.params.slots[0].logits)[1] > 0.5);
    }
    SUBCASE("group size must match") {
        SlotPolicyParams p{{{"instruction", SlotKind::instruction_variant, {"a", "b"}, {0.0, 0.0}}}};
        const std::vector<GroupSample> g = {{{{1}}, std::log(0.5), 1.0}, {{{0}}, std::log(0.5), 0.0}};
        CHECK_THROWS_AS(grpo_step(p, g, p, cfg), std::invalid_argument);
    }
    SUBCASE("clip fraction counts ratios outside the trust region") {
        SlotPolicyParams p{{{"instruction", SlotKind::instruction_variant, {"a", "b"}, {0.0, 0.0}}}};
        const double lp = std::log(0.5);
        const std::vector<GroupSample> g = {
            {{{0}}, lp + 0.5, 1.0}, {{{1}}, lp, 0.0}, {{{0}}, lp - 0.5, 2.0}, {{{1}}, lp, 3.0}};
        CHECK(grpo_step(p, g, p, cfg).stats.clip_fraction == 0.5);
    }
}
