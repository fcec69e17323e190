#include "promptopt/generator.hpp"

#include <cmath>

#include "promptopt/errors.hpp"
#include "promptopt/reward.hpp"
#include "promptopt/tags.hpp"

namespace promptopt {
namespace {

const std::string kEmpty;

nlohmann::json params_json(const SlotPolicyParams& params) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& slot : params.slots) out.push_back(slot_to_json(slot));
    return out;
}

SlotPolicyParams params_from(const nlohmann::json& j) {
    SlotPolicyParams p;
    for (const auto& record : j) p.slots.push_back(slot_from_json(record));
    if (auto problems = validate_params(p); !problems.empty())
        throw CheckpointError("invalid policy: " + problems.front());
    return p;
}

bool same_layout(const SlotPolicyParams& a, const SlotPolicyParams& b) {
    if (a.slots.size() != b.slots.size()) return false;
    for (std::size_t s = 0; s < a.slots.size(); ++s)
        if (a.slots[s].name != b.slots[s].name || a.slots[s].choices != b.slots[s].choices) return false;
    return true;
}

std::string replace_all(std::string text, std::string_view hole, std::string_view value) {
    for (auto pos = text.find(hole); pos != std::string::npos; pos = text.find(hole, pos + value.size()))
        text.replace(pos, hole.size(), value);
    return text;
}

}  // namespace

const std::string& Rollout::prompt() const { return output.answer ? *output.answer : kEmpty; }

StepStats PromptGenerator::update(std::span<const Rollout> group, std::span<const double> rewards,
                                  const RunConfig& cfg) {
    (void)group;
    StepStats st;
    const auto adv = group_advantages(rewards, cfg.advantage_std_floor);
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        st.mean_reward += rewards[i];
        st.mean_abs_advantage += std::abs(adv[i]);
    }
    st.mean_reward /= static_cast<double>(rewards.size());
    st.mean_abs_advantage /= static_cast<double>(rewards.size());
    return st;
}

SlotPromptGenerator::SlotPromptGenerator(SlotPolicyParams params, std::string template_text, std::string output_suffix)
    : params_(std::move(params)), reference_(params_), template_(std::move(template_text)),
      suffix_(std::move(output_suffix)) {
    if (auto problems = validate_params(params_); !problems.empty())
        throw ConfigError("slot policy: " + problems.front());
    for (const auto& hole : template_holes(template_)) {
        bool known = false;
        for (const auto& slot : params_.slots) known |= slot.name == hole;
        if (!known) throw ConfigError("prompt template: unknown hole {" + hole + "}");
    }
}

std::string SlotPromptGenerator::render(const SlotChoices& choices) const {
    return render_prompt(template_, params_, choices, suffix_);
}

Rollout SlotPromptGenerator::generate(Rng& rng) const {
    Rollout r;
    SampledChoices drawn = sample(params_, rng);
    const std::string prompt = render(drawn.choices);
    std::string think = "Start from instruction variant " + std::to_string(drawn.choices.index.front() + 1) +
                        " and include " + std::to_string(chosen_shot_count(params_, drawn.choices)) +
                        " demonstration(s).";
    r.output = extract_answer(render_emission(think, prompt));
    r.choices = std::move(drawn);
    return r;
}

StepStats SlotPromptGenerator::update(std::span<const Rollout> group, std::span<const double> rewards,
                                      const RunConfig& cfg) {
    if (group.size() != rewards.size()) throw std::invalid_argument("update: one reward per rollout required");
    std::vector<GroupSample> samples;
    samples.reserve(group.size());
    for (std::size_t i = 0; i < group.size(); ++i) {
        if (!group[i].choices) throw std::invalid_argument("update: rollout was not drawn from the slot policy");
        samples.push_back({group[i].choices->choices, group[i].choices->logprob, rewards[i]});
    }
    StepResult step = grpo_step(params_, samples, reference_, cfg);
    params_ = std::move(step.params);
    return step.stats;
}

nlohmann::json SlotPromptGenerator::state() const {
    return {{"policy", params_json(params_)}, {"reference", params_json(reference_)}};
}

void SlotPromptGenerator::restore(const nlohmann::json& state) {
    SlotPolicyParams params = params_from(state.at("policy"));
    SlotPolicyParams reference = state.contains("reference") ? params_from(state.at("reference")) : params;
    if (!same_layout(params, params_) || !same_layout(reference, params_))
        throw CheckpointError("checkpoint policy layout does not match the configured slots");
    params_ = std::move(params);
    reference_ = std::move(reference);
}

std::string default_generator_system_prompt() {
    return "You improve prompts for another language model. First reason about what would make the prompt "
           "more effective, then give the improved prompt. Put the reasoning inside <think> </think> tags and "
           "the improved prompt inside <answer> </answer> tags, like this: <think> reasoning </think>"
           "<answer> improved prompt </answer>";
}

std::string default_generator_user_template() {
    return "Rewrite the base prompt below so that another model performs the {task} task better. "
           "Return the full improved prompt.\nBase prompt:\n{base_prompt}";
}

std::string fill_generator_user_prompt(std::string_view user_template, const TaskSpec& spec) {
    const std::string task = spec.description.empty() ? std::string(to_string(spec.task_kind)) : spec.description;
    std::string out = replace_all(std::string(user_template), "{task}", task);
    return replace_all(std::move(out), "{base_prompt}", with_output_suffix(spec.base_prompt, spec));
}

Rollout RemotePromptGenerator::generate(Rng& rng) const {
    ChatRequest req = request_;
    req.seed = static_cast<std::int64_t>(rng.next() >> 33);
    Rollout r;
    r.output = extract_answer(client_.complete(req).text);
    return r;
}

}  // namespace promptopt
