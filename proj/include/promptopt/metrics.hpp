#pragma once
// Scoring functions and answer-extraction protocols.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace promptopt {

struct TokenSequence {
    std::vector<std::string> tokens;

    std::size_t size() const noexcept { return tokens.size(); }
    bool empty() const noexcept { return tokens.empty(); }
    bool operator==(const TokenSequence&) const = default;
};

enum class Scale { unit, percent };

struct MetricScore {
    double value = 0.0;
    Scale scale = Scale::unit;

    double upper() const noexcept { return scale == Scale::unit ? 1.0 : 100.0; }
};

/// Lowercase, split on whitespace, strip leading/trailing ASCII punctuation, drop empties.
TokenSequence tokenize(std::string_view text);

/// F1 of clipped n-gram overlap; 0 when either side has no n-grams. Requires n >= 1.
MetricScore rouge_n(const TokenSequence& candidate, const TokenSequence& reference, int n);
MetricScore rouge_l(const TokenSequence& candidate, const TokenSequence& reference);
/// Mean of ROUGE-1, ROUGE-2 and ROUGE-L on tokenized text.
MetricScore rouge_avg(std::string_view candidate, std::string_view reference);

/// SARI on a 0-100 scale, n-grams 1..4. Throws std::invalid_argument when references is empty.
///
/// Keep and delete operate on multiset counts with source/candidate counts
/// replicated once per reference; add operates on n-gram sets. Deletion is
/// scored by precision only. A precision or recall whose denominator set is
/// empty counts as 1.
MetricScore sari(std::string_view source, std::string_view candidate, std::span<const std::string> references);

/// Whole-output label match after trim + casefold.
std::optional<std::string> match_label(std::string_view output, std::span<const std::string> label_set);

/// A single letter A-E, optionally followed by '.', ')' or ':'. Returned uppercase.
std::optional<char> match_option_letter(std::string_view output);

enum class NumberMode { lenient, strict };

/// Lenient: last numeric literal in the text with commas, currency symbols and a
/// leading '+' removed. Strict: the trimmed output must be exactly one integer.
std::optional<std::string> extract_final_number(std::string_view output, NumberMode mode = NumberMode::lenient);

/// Numeric equality of two normalized decimal literals.
bool numbers_equal(std::string_view a, std::string_view b);
bool is_numeric_literal(std::string_view text);

/// Fraction of positions whose prediction is present and equal to gold.
/// Throws std::invalid_argument on empty input or length mismatch.
MetricScore accuracy(std::span<const std::optional<std::string>> predictions, std::span<const std::string> golds);

}  // namespace promptopt
