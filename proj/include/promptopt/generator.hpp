#pragma once
// Prompt generators: the trainable slot policy and a sample-only remote LLM.

#include <optional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "promptopt/core.hpp"
#include "promptopt/gateway.hpp"
#include "promptopt/grpo.hpp"
#include "promptopt/policy.hpp"
#include "promptopt/rng.hpp"

namespace promptopt {

struct Rollout {
    GeneratorOutput output;
    std::optional<SampledChoices> choices;  // slot policy only

    /// Extracted candidate prompt, empty when the emission did not parse.
    const std::string& prompt() const;
};

class PromptGenerator {
public:
    virtual ~PromptGenerator() = default;

    virtual Rollout generate(Rng& rng) const = 0;

    virtual bool trainable() const { return false; }

    /// Applies one policy update for a scored group. Generators that cannot be
    /// trained in-process leave their state untouched and report the group's
    /// reward and advantage statistics only.
    virtual StepStats update(std::span<const Rollout> group, std::span<const double> rewards, const RunConfig& cfg);

    /// Complete mutable state, for checkpoints and purity checks.
    virtual nlohmann::json state() const { return nlohmann::json::object(); }
    virtual void restore(const nlohmann::json& state) { (void)state; }
};

class SlotPromptGenerator final : public PromptGenerator {
public:
    /// The reference policy for the KL penalty is a copy of `params`.
    SlotPromptGenerator(SlotPolicyParams params, std::string template_text, std::string output_suffix);

    Rollout generate(Rng& rng) const override;
    bool trainable() const override { return true; }
    StepStats update(std::span<const Rollout> group, std::span<const double> rewards, const RunConfig& cfg) override;
    nlohmann::json state() const override;
    void restore(const nlohmann::json& state) override;

    const SlotPolicyParams& params() const noexcept { return params_; }
    const SlotPolicyParams& reference() const noexcept { return reference_; }
    const std::string& template_text() const noexcept { return template_; }

    std::string render(const SlotChoices& choices) const;

private:
    SlotPolicyParams params_;
    SlotPolicyParams reference_;
    std::string template_;
    std::string suffix_;
};

/// Default generator messages; both can be overridden from the config.
std::string default_generator_system_prompt();
/// `{task}` and `{base_prompt}` holes are filled from the task spec.
std::string default_generator_user_template();
std::string fill_generator_user_prompt(std::string_view user_template, const TaskSpec& spec);

class RemotePromptGenerator final : public PromptGenerator {
public:
    /// `request` carries endpoint, model, decoding settings and both messages.
    RemotePromptGenerator(ChatClient client, ChatRequest request)
        : client_(std::move(client)), request_(std::move(request)) {}

    Rollout generate(Rng& rng) const override;

private:
    ChatClient client_;
    ChatRequest request_;
};

}  // namespace promptopt
