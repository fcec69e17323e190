#pragma once
// `<think>...</think><answer>...</answer>` emission protocol and the
// generator-side rewards computed from it.

#include <array>
#include <string>
#include <string_view>

#include "promptopt/core.hpp"

namespace promptopt {

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kAnswerOpen = "<answer>";
inline constexpr std::string_view kAnswerClose = "</answer>";
inline constexpr std::array<std::string_view, 4> kDelimiters{kThinkOpen, kThinkClose, kAnswerOpen,
                                                             kAnswerClose};

/// Occurrence count of each delimiter, indexed like kDelimiters.
struct TagInventory {
    std::array<int, 4> counts{};

    int count(std::string_view token) const;
};

/// Non-overlapping literal occurrences of every delimiter.
TagInventory count_tokens(std::string_view raw);

/// (r_token / 4) per delimiter that occurs exactly once.
double token_usage_reward(const TagInventory& inv, double r_token);

/// r_structure when the trimmed text is exactly think-block, optional
/// whitespace, answer-block, with no delimiter inside either block; else 0.
double structure_reward(std::string_view raw, double r_structure);

GeneratorOutput extract_answer(std::string_view raw);

/// Inverse of extract_answer for delimiter-free segments.
std::string render_emission(std::string_view think, std::string_view answer);

bool contains_delimiter(std::string_view text);

}  // namespace promptopt
