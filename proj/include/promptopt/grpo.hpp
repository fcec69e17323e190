#pragma once
// Group-relative policy optimization on the slot policy.

#include <span>
#include <vector>

#include "promptopt/core.hpp"
#include "promptopt/policy.hpp"

namespace promptopt {

/// (r_i - mean) / max(population std, std_floor). Throws std::invalid_argument
/// for fewer than two rewards or a nonpositive floor.
std::vector<double> group_advantages(std::span<const double> rewards, double std_floor);

/// min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A).
double clipped_term(double ratio, double advantage, double epsilon);

/// r - log r - 1 with r = pi_ref / pi_theta, from log-probabilities. Always >= 0.
double kl_estimate(double logprob_ref, double logprob_new);

struct GroupSample {
    SlotChoices choices;
    double logprob_old = 0.0;  // at sampling time
    double reward = 0.0;
};

struct StepStats {
    double mean_reward = 0.0;
    double mean_abs_advantage = 0.0;
    double clip_fraction = 0.0;
    double kl_mean = 0.0;
    double objective = 0.0;
};

/// (1/n) sum_i [clipped_term(exp(logp_theta(o_i) - logprob_old_i), A_i, eps) - beta * KL(ref || theta)(o_i)].
double grpo_objective(const SlotPolicyParams& params, std::span<const GroupSample> group,
                      std::span<const double> advantages, const SlotPolicyParams& reference, const RunConfig& cfg);

/// Analytic gradient of grpo_objective with respect to every logit.
SlotGradient grpo_objective_gradient(const SlotPolicyParams& params, std::span<const GroupSample> group,
                                     std::span<const double> advantages, const SlotPolicyParams& reference,
                                     const RunConfig& cfg);

struct StepResult {
    SlotPolicyParams params;
    StepStats stats;
};

/// One ascent step: theta += lr * grad J - lr * weight_decay * theta.
/// Throws std::invalid_argument when the group size differs from cfg.n.
StepResult grpo_step(const SlotPolicyParams& params, std::span<const GroupSample> group,
                     const SlotPolicyParams& reference, const RunConfig& cfg);

}  // namespace promptopt
