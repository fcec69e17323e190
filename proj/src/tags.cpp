#include "promptopt/tags.hpp"

#include <cctype>
#include <optional>

namespace promptopt {
namespace {

std::size_t count_literal(std::string_view haystack, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos;
         pos = haystack.find(needle, pos + needle.size()))
        ++n;
    return n;
}

struct Segments {
    std::string_view think;
    std::string_view answer;
};

std::optional<Segments> match_structure(std::string_view raw) {
    std::string_view text = trim(raw);
    if (!text.starts_with(kThinkOpen) || !text.ends_with(kAnswerClose)) return std::nullopt;
    text.remove_prefix(kThinkOpen.size());
    text.remove_suffix(kAnswerClose.size());

    const auto close = text.find(kThinkClose);
    if (close == std::string_view::npos) return std::nullopt;
    const std::string_view think = text.substr(0, close);
    std::string_view rest = text.substr(close + kThinkClose.size());
    while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.front()))) rest.remove_prefix(1);
    if (!rest.starts_with(kAnswerOpen)) return std::nullopt;
    const std::string_view answer = rest.substr(kAnswerOpen.size());

    if (contains_delimiter(think) || contains_delimiter(answer)) return std::nullopt;
    return Segments{think, answer};
}

}  // namespace

int TagInventory::count(std::string_view token) const {
    for (std::size_t i = 0; i < kDelimiters.size(); ++i)
        if (kDelimiters[i] == token) return counts[i];
    return 0;
}

TagInventory count_tokens(std::string_view raw) {
    TagInventory inv;
    for (std::size_t i = 0; i < kDelimiters.size(); ++i)
        inv.counts[i] = static_cast<int>(count_literal(raw, kDelimiters[i]));
    return inv;
}

double token_usage_reward(const TagInventory& inv, double r_token) {
    int exactly_once = 0;
    for (int c : inv.counts) exactly_once += (c == 1);
    return r_token / static_cast<double>(kDelimiters.size()) * exactly_once;
}

double structure_reward(std::string_view raw, double r_structure) {
    return match_structure(raw) ? r_structure : 0.0;
}

GeneratorOutput extract_answer(std::string_view raw) {
    GeneratorOutput out;
    out.raw = std::string(raw);
    if (auto seg = match_structure(raw)) {
        out.think = std::string(seg->think);
        out.answer = std::string(seg->answer);
        out.parse_ok = true;
    }
    return out;
}

std::string render_emission(std::string_view think, std::string_view answer) {
    std::string out;
    out.reserve(think.size() + answer.size() + 32);
    out.append(kThinkOpen).append(think).append(kThinkClose);
    out.append(kAnswerOpen).append(answer).append(kAnswerClose);
    return out;
}

bool contains_delimiter(std::string_view text) {
    for (auto d : kDelimiters)
        if (text.find(d) != std::string_view::npos) return true;
    return false;
}

}  // namespace promptopt
