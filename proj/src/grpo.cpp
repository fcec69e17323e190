#include "promptopt/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace promptopt {
namespace {

void check_group(std::span<const GroupSample> group, std::span<const double> advantages) {
    if (group.size() != advantages.size())
        throw std::invalid_argument("grpo: one advantage per group sample required");
}

}  // namespace

std::vector<double> group_advantages(std::span<const double> rewards, double std_floor) {
    if (rewards.size() < 2) throw std::invalid_argument("group_advantages: need at least two rewards");
    if (!(std_floor > 0.0)) throw std::invalid_argument("group_advantages: std_floor must be positive");
    const double n = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= n;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    const double sd = std::sqrt(var / n);
    std::vector<double> out(rewards.size());
    // Exactly equal rewards give exactly zero advantages.
    const bool constant = std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards[0]; });
    if (constant) return out;
    const double denom = std::max(sd, std_floor);
    for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / denom;
    return out;
}

double clipped_term(double ratio, double advantage, double epsilon) {
    const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
    return std::min(ratio * advantage, clipped * advantage);
}

double kl_estimate(double logprob_ref, double logprob_new) {
    const double log_r = logprob_ref - logprob_new;
    // r - log r - 1 = expm1(d) - d; the series avoids cancellation for small d.
    if (std::abs(log_r) < 1e-4) return log_r * log_r * (0.5 + log_r * (1.0 / 6.0 + log_r / 24.0));
    return std::expm1(log_r) - log_r;
}

double grpo_objective(const SlotPolicyParams& params, std::span<const GroupSample> group,
                      std::span<const double> advantages, const SlotPolicyParams& reference, const RunConfig& cfg) {
    check_group(group, advantages);
    double total = 0.0;
    for (std::size_t i = 0; i < group.size(); ++i) {
        const double lp = logprob(params, group[i].choices);
        const double ratio = std::exp(lp - group[i].logprob_old);
        total += clipped_term(ratio, advantages[i], cfg.epsilon) -
                 cfg.beta * kl_estimate(logprob(reference, group[i].choices), lp);
    }
    return total / static_cast<double>(group.size());
}

SlotGradient grpo_objective_gradient(const SlotPolicyParams& params, std::span<const GroupSample> group,
                                     std::span<const double> advantages, const SlotPolicyParams& reference,
                                     const RunConfig& cfg) {
    check_group(group, advantages);
    SlotGradient grad = zeros_like(params);
    const double inv_n = 1.0 / static_cast<double>(group.size());
    for (std::size_t i = 0; i < group.size(); ++i) {
        const double lp = logprob(params, group[i].choices);
        const double ratio = std::exp(lp - group[i].logprob_old);
        const double a = advantages[i];
        const double clipped = std::clamp(ratio, 1.0 - cfg.epsilon, 1.0 + cfg.epsilon);
        // d/dlogp of the surrogate: ratio * A while the unclipped branch is the minimum.
        const double surrogate = ratio * a <= clipped * a ? ratio * a : 0.0;
        // d/dlogp of -beta * (r - log r - 1), r = exp(logp_ref - logp).
        const double r = std::exp(logprob(reference, group[i].choices) - lp);
        const double penalty = -cfg.beta * (1.0 - r);
        const double coeff = (surrogate + penalty) * inv_n;
        if (coeff == 0.0) continue;
        const SlotGradient g = grad_logprob(params, group[i].choices);
        for (std::size_t s = 0; s < g.size(); ++s)
            for (std::size_t c = 0; c < g[s].size(); ++c) grad[s][c] += coeff * g[s][c];
    }
    return grad;
}

StepResult grpo_step(const SlotPolicyParams& params, std::span<const GroupSample> group,
                     const SlotPolicyParams& reference, const RunConfig& cfg) {
    if (static_cast<int>(group.size()) != cfg.n)
        throw std::invalid_argument("grpo_step: group has " + std::to_string(group.size()) + " samples, expected " +
                                    std::to_string(cfg.n));
    std::vector<double> rewards;
    rewards.reserve(group.size());
    for (const auto& s : group) rewards.push_back(s.reward);
    const std::vector<double> adv = group_advantages(rewards, cfg.advantage_std_floor);

    StepResult out;
    StepStats& st = out.stats;
    for (std::size_t i = 0; i < group.size(); ++i) {
        const double lp = logprob(params, group[i].choices);
        const double ratio = std::exp(lp - group[i].logprob_old);
        st.mean_reward += rewards[i];
        st.mean_abs_advantage += std::abs(adv[i]);
        st.clip_fraction += std::abs(ratio - 1.0) > cfg.epsilon;
        st.kl_mean += kl_estimate(logprob(reference, group[i].choices), lp);
    }
    const double n = static_cast<double>(group.size());
    st.mean_reward /= n;
    st.mean_abs_advantage /= n;
    st.clip_fraction /= n;
    st.kl_mean /= n;
    st.objective = grpo_objective(params, group, adv, reference, cfg);

    const SlotGradient grad = grpo_objective_gradient(params, group, adv, reference, cfg);
    out.params = params;
    for (std::size_t s = 0; s < out.params.slots.size(); ++s) {
        auto& logits = out.params.slots[s].logits;
        for (std::size_t c = 0; c < logits.size(); ++c)
            logits[c] += cfg.learning_rate * grad[s][c] - cfg.learning_rate * cfg.weight_decay * logits[c];
    }
    return out;
}

}  // namespace promptopt
