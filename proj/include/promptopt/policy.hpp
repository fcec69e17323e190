#pragma once
// Slot-template prompt policy: a product of independent categorical
// distributions over instruction wording, demonstration count and
// demonstration choice, parameterized by per-choice logits.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "promptopt/core.hpp"
#include "promptopt/rng.hpp"

namespace promptopt {

enum class SlotKind { instruction_variant, shot_count, example_choice };

std::string_view to_string(SlotKind kind);

struct Slot {
    std::string name;
    SlotKind kind = SlotKind::instruction_variant;
    std::vector<std::string> choices;
    std::vector<double> logits;

    bool operator==(const Slot&) const = default;
};

struct SlotPolicyParams {
    std::vector<Slot> slots;

    bool operator==(const SlotPolicyParams&) const = default;
};

/// Chosen index per slot, in slot order.
struct SlotChoices {
    std::vector<int> index;

    bool operator==(const SlotChoices&) const = default;
};

/// Same shape as the logits of a SlotPolicyParams.
using SlotGradient = std::vector<std::vector<double>>;

/// Empty iff every slot has choices, one finite logit per choice, and the
/// shot-count slot offers 0..(number of example slots).
std::vector<std::string> validate_params(const SlotPolicyParams& params);

std::vector<double> softmax(std::span<const double> logits);

struct SampledChoices {
    SlotChoices choices;
    double logprob = 0.0;
};

/// Independent draw per slot, including example slots beyond the drawn shot count.
SampledChoices sample(const SlotPolicyParams& params, Rng& rng);

/// Throws std::out_of_range when a choice index is outside its slot.
double logprob(const SlotPolicyParams& params, const SlotChoices& choices);
SlotGradient grad_logprob(const SlotPolicyParams& params, const SlotChoices& choices);

SlotGradient zeros_like(const SlotPolicyParams& params);

/// `"input" -> label` on one line.
std::string render_demonstration(const LabeledExample& example);

/// Policy over `instructions` with zero logits, a shot-count slot 0..max_shots
/// and max_shots example slots that each draw from `bank`.
SlotPolicyParams build_slot_policy(const std::vector<std::string>& instructions,
                                   const std::vector<LabeledExample>& bank, int max_shots);

int chosen_shot_count(const SlotPolicyParams& params, const SlotChoices& choices);

/// Fills `{slot_name}` holes in the template, then appends an "Examples:"
/// block with the first shot_count chosen demonstrations, then the suffix.
/// Throws ConfigError on a hole that names no slot.
std::string render_prompt(std::string_view template_text, const SlotPolicyParams& params,
                          const SlotChoices& choices, std::string_view output_suffix);

/// Slot names referenced by `{...}` holes, in order of appearance.
std::vector<std::string> template_holes(std::string_view template_text);

// Checkpoint text: a magic/version line followed by one JSON record per slot.
inline constexpr std::string_view kPolicyMagic = "promptopt-slot-policy";
inline constexpr int kPolicyVersion = 1;

std::string serialize_params(const SlotPolicyParams& params);
nlohmann::json slot_to_json(const Slot& slot);
Slot slot_from_json(const nlohmann::json& record);
/// Throws CheckpointError on a wrong header, version mismatch or bad record.
SlotPolicyParams parse_params(std::string_view text);

}  // namespace promptopt
