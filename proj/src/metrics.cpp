#include "promptopt/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <set>
#include <stdexcept>

#include "promptopt/core.hpp"

namespace promptopt {
namespace {

using NgramCounts = std::map<std::string, int>;

NgramCounts count_ngrams(const TokenSequence& seq, int n) {
    NgramCounts out;
    if (static_cast<int>(seq.size()) < n) return out;
    for (std::size_t i = 0; i + n <= seq.size(); ++i) {
        std::string gram = seq.tokens[i];
        for (int j = 1; j < n; ++j) gram.append(" ").append(seq.tokens[i + j]);
        ++out[gram];
    }
    return out;
}

double f1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

// Empty denominator set scores 1.
double ratio(double num, std::size_t set_size) { return set_size == 0 ? 1.0 : num / static_cast<double>(set_size); }

struct SariComponents {
    double keep = 0.0;
    double del = 0.0;
    double add = 0.0;
};

SariComponents sari_order(const TokenSequence& source, const TokenSequence& candidate,
                          const std::vector<TokenSequence>& refs, int n) {
    const int num_refs = static_cast<int>(refs.size());
    const NgramCounts src = count_ngrams(source, n);
    const NgramCounts cand = count_ngrams(candidate, n);
    NgramCounts ref_all;
    for (const auto& r : refs)
        for (const auto& [g, c] : count_ngrams(r, n)) ref_all[g] += c;

    auto lookup = [](const NgramCounts& m, const std::string& g) {
        auto it = m.find(g);
        return it == m.end() ? 0 : it->second;
    };

    // keep: source & candidate, replicated per reference
    double keep_p_num = 0.0, keep_r_num = 0.0;
    std::size_t keep_size = 0, keep_all_size = 0;
    for (const auto& [g, sc] : src) {
        const int s_rep = sc * num_refs;
        const int c_rep = lookup(cand, g) * num_refs;
        const int r = lookup(ref_all, g);
        const int kept = std::min(s_rep, c_rep);
        const int kept_good = std::min(kept, r);
        const int kept_all = std::min(s_rep, r);
        if (kept > 0) {
            ++keep_size;
            keep_p_num += static_cast<double>(kept_good) / kept;
        }
        if (kept_all > 0) {
            ++keep_all_size;
            keep_r_num += static_cast<double>(kept_good) / kept_all;
        }
    }

    // delete: source minus candidate, precision only
    double del_num = 0.0;
    std::size_t del_size = 0;
    for (const auto& [g, sc] : src) {
        const int deleted = sc * num_refs - lookup(cand, g) * num_refs;
        if (deleted <= 0) continue;
        ++del_size;
        const int good = std::max(0, deleted - lookup(ref_all, g));
        del_num += static_cast<double>(good) / deleted;
    }

    // add: n-gram sets
    std::size_t added = 0, added_good = 0, added_all = 0;
    for (const auto& [g, c] : cand) {
        if (src.count(g)) continue;
        ++added;
        if (ref_all.count(g)) ++added_good;
    }
    for (const auto& [g, c] : ref_all)
        if (!src.count(g)) ++added_all;

    SariComponents out;
    out.keep = f1(ratio(keep_p_num, keep_size), ratio(keep_r_num, keep_all_size));
    out.del = ratio(del_num, del_size);
    out.add = f1(ratio(static_cast<double>(added_good), added), ratio(static_cast<double>(added_good), added_all));
    return out;
}

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = a.tokens[i - 1] == b.tokens[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Scans one numeric literal starting at `i` (a digit). Accepts digit groups
// separated by single commas and an optional ".digits" tail.
std::string scan_number(std::string_view text, std::size_t& i) {
    std::string out;
    while (i < text.size()) {
        if (is_digit(text[i])) {
            out.push_back(text[i++]);
        } else if (text[i] == ',' && i + 1 < text.size() && is_digit(text[i + 1]) && !out.empty()) {
            ++i;
        } else {
            break;
        }
    }
    if (i + 1 < text.size() && text[i] == '.' && is_digit(text[i + 1])) {
        out.push_back('.');
        ++i;
        while (i < text.size() && is_digit(text[i])) out.push_back(text[i++]);
    }
    return out;
}

// '$' or any byte of a multi-byte UTF-8 symbol such as the euro or pound sign.
bool is_currency_byte(char c) { return c == '$' || static_cast<unsigned char>(c) >= 0x80; }

}  // namespace

TokenSequence tokenize(std::string_view text) {
    TokenSequence out;
    std::size_t i = 0;
    auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    auto is_punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_space(text[j])) ++j;
        std::string_view word = text.substr(i, j - i);
        while (!word.empty() && is_punct(word.front())) word.remove_prefix(1);
        while (!word.empty() && is_punct(word.back())) word.remove_suffix(1);
        if (!word.empty()) out.tokens.push_back(casefold(word));
        i = j;
    }
    return out;
}

MetricScore rouge_n(const TokenSequence& candidate, const TokenSequence& reference, int n) {
    if (n < 1) throw std::invalid_argument("rouge_n: n must be >= 1");
    const NgramCounts cand = count_ngrams(candidate, n);
    const NgramCounts ref = count_ngrams(reference, n);
    if (cand.empty() || ref.empty()) return {0.0, Scale::unit};
    int overlap = 0, cand_total = 0, ref_total = 0;
    for (const auto& [g, c] : cand) {
        cand_total += c;
        if (auto it = ref.find(g); it != ref.end()) overlap += std::min(c, it->second);
    }
    for (const auto& [g, c] : ref) ref_total += c;
    if (overlap == 0) return {0.0, Scale::unit};
    return {f1(static_cast<double>(overlap) / cand_total, static_cast<double>(overlap) / ref_total), Scale::unit};
}

MetricScore rouge_l(const TokenSequence& candidate, const TokenSequence& reference) {
    if (candidate.empty() || reference.empty()) return {0.0, Scale::unit};
    const auto lcs = static_cast<double>(lcs_length(candidate, reference));
    if (lcs == 0.0) return {0.0, Scale::unit};
    return {f1(lcs / candidate.size(), lcs / reference.size()), Scale::unit};
}

MetricScore rouge_avg(std::string_view candidate, std::string_view reference) {
    const TokenSequence c = tokenize(candidate);
    const TokenSequence r = tokenize(reference);
    const double sum = rouge_n(c, r, 1).value + rouge_n(c, r, 2).value + rouge_l(c, r).value;
    return {sum / 3.0, Scale::unit};
}

MetricScore sari(std::string_view source, std::string_view candidate, std::span<const std::string> references) {
    if (references.empty()) throw std::invalid_argument("sari: at least one reference is required");
    const TokenSequence src = tokenize(source);
    const TokenSequence cand = tokenize(candidate);
    std::vector<TokenSequence> refs;
    refs.reserve(references.size());
    for (const auto& r : references) refs.push_back(tokenize(r));

    double keep = 0.0, del = 0.0, add = 0.0;
    for (int n = 1; n <= 4; ++n) {
        const SariComponents c = sari_order(src, cand, refs, n);
        keep += c.keep;
        del += c.del;
        add += c.add;
    }
    return {100.0 * (keep / 4.0 + del / 4.0 + add / 4.0) / 3.0, Scale::percent};
}

std::optional<std::string> match_label(std::string_view output, std::span<const std::string> label_set) {
    const std::string folded = casefold(trim(output));
    for (const auto& label : label_set)
        if (folded == casefold(label)) return label;
    return std::nullopt;
}

std::optional<char> match_option_letter(std::string_view output) {
    const std::string_view t = trim(output);
    if (t.empty() || t.size() > 2) return std::nullopt;
    const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(t[0])));
    if (letter < 'A' || letter > 'E') return std::nullopt;
    if (t.size() == 2 && t[1] != '.' && t[1] != ')' && t[1] != ':') return std::nullopt;
    return letter;
}

std::optional<std::string> extract_final_number(std::string_view output, NumberMode mode) {
    if (mode == NumberMode::strict) {
        std::string_view t = trim(output);
        bool negative = false;
        if (!t.empty() && (t.front() == '-' || t.front() == '+')) {
            negative = t.front() == '-';
            t.remove_prefix(1);
        }
        if (t.empty() || !std::all_of(t.begin(), t.end(), is_digit)) return std::nullopt;
        return negative ? "-" + std::string(t) : std::string(t);
    }

    std::optional<std::string> last;
    std::size_t i = 0;
    while (i < output.size()) {
        if (!is_digit(output[i])) {
            ++i;
            continue;
        }
        // A '-' directly before the digits (or before a currency symbol) is a
        // sign unless it joins two alphanumerics, as in "3-4".
        std::size_t k = i;
        while (k > 0 && is_currency_byte(output[k - 1])) --k;
        const bool negative =
            k > 0 && output[k - 1] == '-' &&
            (k == 1 || !std::isalnum(static_cast<unsigned char>(output[k - 2])));
        std::string digits = scan_number(output, i);
        last = negative ? "-" + digits : digits;
    }
    return last;
}

bool is_numeric_literal(std::string_view text) {
    std::string_view t = trim(text);
    if (!t.empty() && (t.front() == '-' || t.front() == '+')) t.remove_prefix(1);
    if (t.empty() || !is_digit(t.front())) return false;
    std::size_t i = 0;
    while (i < t.size() && is_digit(t[i])) ++i;
    if (i == t.size()) return true;
    if (t[i] != '.' || i + 1 == t.size()) return false;
    ++i;
    while (i < t.size() && is_digit(t[i])) ++i;
    return i == t.size();
}

bool numbers_equal(std::string_view a, std::string_view b) {
    auto parse = [](std::string_view s) -> std::optional<long double> {
        std::string str(trim(s));
        if (!str.empty() && str.front() == '+') str.erase(0, 1);
        if (!is_numeric_literal(str)) return std::nullopt;
        return std::stold(str);
    };
    const auto x = parse(a);
    const auto y = parse(b);
    return x && y && *x == *y;
}

MetricScore accuracy(std::span<const std::optional<std::string>> predictions, std::span<const std::string> golds) {
    if (predictions.empty()) throw std::invalid_argument("accuracy: empty input");
    if (predictions.size() != golds.size()) throw std::invalid_argument("accuracy: length mismatch");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        correct += predictions[i].has_value() && *predictions[i] == golds[i];
    return {static_cast<double>(correct) / static_cast<double>(predictions.size()), Scale::unit};
}

}  // namespace promptopt
