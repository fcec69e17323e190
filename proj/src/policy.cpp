#include "promptopt/policy.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "promptopt/errors.hpp"

namespace promptopt {
namespace {

constexpr std::array<std::pair<SlotKind, std::string_view>, 3> kSlotKindNames{{
    {SlotKind::instruction_variant, "instruction_variant"},
    {SlotKind::shot_count, "shot_count"},
    {SlotKind::example_choice, "example_choice"},
}};

SlotKind parse_slot_kind(std::string_view name) {
    for (const auto& [k, n] : kSlotKindNames)
        if (n == name) return k;
    throw CheckpointError("unknown slot kind '" + std::string(name) + "'");
}

// log softmax(logits)[c], stable.
double log_prob_of(std::span<const double> logits, int c) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    return logits[c] - mx - std::log(z);
}

void check_index(const Slot& slot, int c) {
    if (c < 0 || static_cast<std::size_t>(c) >= slot.choices.size())
        throw std::out_of_range("choice index " + std::to_string(c) + " outside slot '" + slot.name + "' (" +
                                std::to_string(slot.choices.size()) + " choices)");
}

void check_shape(const SlotPolicyParams& params, const SlotChoices& choices) {
    if (choices.index.size() != params.slots.size())
        throw std::out_of_range("choices cover " + std::to_string(choices.index.size()) + " slots, policy has " +
                                std::to_string(params.slots.size()));
}

bool is_hole_char(char c, bool first) {
    return c == '_' || std::isalpha(static_cast<unsigned char>(c)) || (!first && std::isdigit(static_cast<unsigned char>(c)));
}

// Calls on_text for literal runs and on_hole for each well-formed `{name}`.
template <typename Text, typename Hole>
void walk_template(std::string_view tpl, Text on_text, Hole on_hole) {
    std::size_t i = 0;
    while (i < tpl.size()) {
        const auto open = tpl.find('{', i);
        if (open == std::string_view::npos) {
            on_text(tpl.substr(i));
            return;
        }
        std::size_t j = open + 1;
        while (j < tpl.size() && is_hole_char(tpl[j], j == open + 1)) ++j;
        if (j < tpl.size() && tpl[j] == '}' && j > open + 1) {
            on_text(tpl.substr(i, open - i));
            on_hole(tpl.substr(open + 1, j - open - 1));
            i = j + 1;
        } else {
            on_text(tpl.substr(i, open + 1 - i));
            i = open + 1;
        }
    }
}

}  // namespace

std::string_view to_string(SlotKind kind) {
    for (const auto& [k, n] : kSlotKindNames)
        if (k == kind) return n;
    return "unknown";
}

std::vector<std::string> validate_params(const SlotPolicyParams& params) {
    std::vector<std::string> out;
    int example_slots = 0;
    const Slot* shots = nullptr;
    for (const auto& slot : params.slots) {
        if (slot.choices.empty()) out.push_back("slot '" + slot.name + "': needs at least one choice");
        if (slot.logits.size() != slot.choices.size())
            out.push_back("slot '" + slot.name + "': one logit per choice required");
        if (!std::all_of(slot.logits.begin(), slot.logits.end(), [](double l) { return std::isfinite(l); }))
            out.push_back("slot '" + slot.name + "': logits must be finite");
        if (slot.kind == SlotKind::example_choice) ++example_slots;
        if (slot.kind == SlotKind::shot_count) {
            if (shots) out.push_back("slot '" + slot.name + "': more than one shot_count slot");
            shots = &slot;
        }
    }
    if (shots) {
        for (std::size_t i = 0; i < shots->choices.size(); ++i) {
            if (shots->choices[i] != std::to_string(i)) {
                out.push_back("slot '" + shots->name + "': choices must be 0..max_shots in order");
                break;
            }
        }
        if (static_cast<int>(shots->choices.size()) != example_slots + 1)
            out.push_back("slot '" + shots->name + "': max shot count must equal the number of example slots");
    } else if (example_slots > 0) {
        out.push_back("example slots present without a shot_count slot");
    }
    return out;
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> p(logits.size());
    if (logits.empty()) return p;
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) z += (p[i] = std::exp(logits[i] - mx));
    for (double& v : p) v /= z;
    return p;
}

SampledChoices sample(const SlotPolicyParams& params, Rng& rng) {
    SampledChoices out;
    out.choices.index.reserve(params.slots.size());
    for (const auto& slot : params.slots) {
        const auto p = softmax(slot.logits);
        const double u = rng.uniform();
        double acc = 0.0;
        int chosen = static_cast<int>(p.size()) - 1;
        for (std::size_t c = 0; c < p.size(); ++c) {
            acc += p[c];
            if (u < acc) {
                chosen = static_cast<int>(c);
                break;
            }
        }
        out.choices.index.push_back(chosen);
    }
    out.logprob = logprob(params, out.choices);
    return out;
}

double logprob(const SlotPolicyParams& params, const SlotChoices& choices) {
    check_shape(params, choices);
    double total = 0.0;
    for (std::size_t s = 0; s < params.slots.size(); ++s) {
        check_index(params.slots[s], choices.index[s]);
        total += log_prob_of(params.slots[s].logits, choices.index[s]);
    }
    return total;
}

SlotGradient grad_logprob(const SlotPolicyParams& params, const SlotChoices& choices) {
    check_shape(params, choices);
    SlotGradient g(params.slots.size());
    for (std::size_t s = 0; s < params.slots.size(); ++s) {
        const Slot& slot = params.slots[s];
        check_index(slot, choices.index[s]);
        g[s] = softmax(slot.logits);
        for (double& v : g[s]) v = -v;
        g[s][choices.index[s]] += 1.0;
    }
    return g;
}

SlotGradient zeros_like(const SlotPolicyParams& params) {
    SlotGradient g(params.slots.size());
    for (std::size_t s = 0; s < params.slots.size(); ++s) g[s].assign(params.slots[s].logits.size(), 0.0);
    return g;
}

std::string render_demonstration(const LabeledExample& example) {
    std::string input(trim(example.input));
    std::replace(input.begin(), input.end(), '\n', ' ');
    return "\"" + input + "\" -> " + std::string(trim(example.gold));
}

SlotPolicyParams build_slot_policy(const std::vector<std::string>& instructions,
                                   const std::vector<LabeledExample>& bank, int max_shots) {
    if (instructions.empty()) throw ConfigError("slot policy: at least one instruction variant is required");
    if (max_shots < 0) throw ConfigError("slot policy: max_shots must be >= 0");
    if (max_shots > 0 && bank.empty()) throw ConfigError("slot policy: demonstrations need a nonempty example bank");

    SlotPolicyParams params;
    params.slots.push_back({"instruction", SlotKind::instruction_variant, instructions,
                            std::vector<double>(instructions.size(), 0.0)});
    Slot shots{"shot_count", SlotKind::shot_count, {}, {}};
    for (int i = 0; i <= max_shots; ++i) shots.choices.push_back(std::to_string(i));
    shots.logits.assign(shots.choices.size(), 0.0);
    params.slots.push_back(std::move(shots));

    std::vector<std::string> demos;
    demos.reserve(bank.size());
    for (const auto& ex : bank) demos.push_back(render_demonstration(ex));
    for (int i = 1; i <= max_shots; ++i)
        params.slots.push_back(
            {"example_" + std::to_string(i), SlotKind::example_choice, demos, std::vector<double>(demos.size(), 0.0)});
    return params;
}

int chosen_shot_count(const SlotPolicyParams& params, const SlotChoices& choices) {
    check_shape(params, choices);
    for (std::size_t s = 0; s < params.slots.size(); ++s) {
        if (params.slots[s].kind != SlotKind::shot_count) continue;
        check_index(params.slots[s], choices.index[s]);
        return std::stoi(params.slots[s].choices[choices.index[s]]);
    }
    return 0;
}

std::vector<std::string> template_holes(std::string_view template_text) {
    std::vector<std::string> holes;
    walk_template(template_text, [](std::string_view) {}, [&](std::string_view h) { holes.emplace_back(h); });
    return holes;
}

std::string render_prompt(std::string_view template_text, const SlotPolicyParams& params,
                          const SlotChoices& choices, std::string_view output_suffix) {
    check_shape(params, choices);
    auto value_of = [&](std::string_view name) -> const std::string& {
        for (std::size_t s = 0; s < params.slots.size(); ++s) {
            if (params.slots[s].name != name) continue;
            check_index(params.slots[s], choices.index[s]);
            return params.slots[s].choices[choices.index[s]];
        }
        throw ConfigError("prompt template: unknown hole {" + std::string(name) + "}");
    };

    std::string out;
    walk_template(template_text, [&](std::string_view t) { out.append(t); },
                  [&](std::string_view h) { out.append(value_of(h)); });

    const int shots = chosen_shot_count(params, choices);
    if (shots > 0) {
        out.append("\nExamples:");
        int emitted = 0;
        for (std::size_t s = 0; s < params.slots.size() && emitted < shots; ++s) {
            if (params.slots[s].kind != SlotKind::example_choice) continue;
            check_index(params.slots[s], choices.index[s]);
            out.append("\n").append(params.slots[s].choices[choices.index[s]]);
            ++emitted;
        }
    }
    if (!output_suffix.empty()) out.append("\n").append(output_suffix);
    return out;
}

nlohmann::json slot_to_json(const Slot& slot) {
    return {{"name", slot.name}, {"kind", to_string(slot.kind)}, {"choices", slot.choices}, {"logits", slot.logits}};
}

Slot slot_from_json(const nlohmann::json& record) {
    try {
        Slot slot;
        slot.name = record.at("name").get<std::string>();
        slot.kind = parse_slot_kind(record.at("kind").get<std::string>());
        slot.choices = record.at("choices").get<std::vector<std::string>>();
        slot.logits = record.at("logits").get<std::vector<double>>();
        return slot;
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("bad slot record: ") + e.what());
    }
}

std::string serialize_params(const SlotPolicyParams& params) {
    std::string out = std::string(kPolicyMagic) + " " + std::to_string(kPolicyVersion) + "\n";
    for (const auto& slot : params.slots) out.append(slot_to_json(slot).dump()).append("\n");
    return out;
}

SlotPolicyParams parse_params(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw CheckpointError("policy checkpoint is empty");
    std::istringstream header(line);
    std::string magic;
    int version = -1;
    header >> magic >> version;
    if (magic != kPolicyMagic) throw CheckpointError("not a slot-policy checkpoint (bad magic header)", 1);
    if (version != kPolicyVersion)
        throw CheckpointError("policy checkpoint version mismatch: file has " + std::to_string(version) +
                                  ", expected " + std::to_string(kPolicyVersion),
                              1);
    SlotPolicyParams params;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto record = nlohmann::json::parse(line, nullptr, false);
        if (record.is_discarded()) throw CheckpointError("slot record is not JSON", lineno);
        params.slots.push_back(slot_from_json(record));
    }
    if (auto problems = validate_params(params); !problems.empty())
        throw CheckpointError("invalid policy: " + problems.front());
    return params;
}

}  // namespace promptopt
