#include "promptopt/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "promptopt/errors.hpp"
#include "promptopt/metrics.hpp"

namespace promptopt {
namespace {

bool has_labels(const TaskSpec& spec) {
    return spec.task_kind == TaskKind::classification || spec.task_kind == TaskKind::multiple_choice;
}

LabeledExample parse_record(std::string_view line, const TaskSpec& spec, const std::string& where, int lineno) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(where + ": invalid JSON: " + e.what(), lineno);
    }
    if (!j.is_object()) throw DataError(where + ": record must be a JSON object", lineno);
    auto text_field = [&](const char* key) {
        if (!j.contains(key) || !j.at(key).is_string())
            throw DataError(where + ": field '" + key + "' must be a string", lineno);
        return j.at(key).get<std::string>();
    };

    LabeledExample ex;
    ex.input = text_field("input");
    ex.gold = text_field("gold");
    if (trim(ex.gold).empty()) throw DataError(where + ": gold is empty", lineno);
    if (j.contains("refs")) {
        const auto& refs = j.at("refs");
        if (!refs.is_array() || !std::all_of(refs.begin(), refs.end(), [](const auto& r) { return r.is_string(); }))
            throw DataError(where + ": refs must be a list of strings", lineno);
        ex.extra_refs = refs.get<std::vector<std::string>>();
        if (!ex.extra_refs.empty() && spec.task_kind != TaskKind::simplification)
            throw DataError(where + ": refs are only allowed for simplification tasks", lineno);
    }

    if (has_labels(spec)) {
        ex.gold = casefold(trim(ex.gold));
        if (std::find(spec.label_set.begin(), spec.label_set.end(), ex.gold) == spec.label_set.end())
            throw DataError(where + ": gold '" + ex.gold + "' is not in the label set", lineno);
    } else if (spec.task_kind == TaskKind::math && !is_numeric_literal(ex.gold)) {
        throw DataError(where + ": math gold '" + ex.gold + "' is not a number", lineno);
    }
    return ex;
}

}  // namespace

std::vector<LabeledExample> parse_dataset(std::string_view text, const TaskSpec& spec, std::string_view source) {
    std::vector<LabeledExample> out;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        out.push_back(parse_record(line, spec, std::string(source), lineno));
    }
    if (out.empty()) throw DataError(std::string(source) + ": dataset is empty", 0);
    return out;
}

std::vector<LabeledExample> load_dataset(const std::filesystem::path& path, const TaskSpec& spec) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset " + path.string(), 0);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_dataset(buf.str(), spec, path.string());
}

nlohmann::json to_json(const LabeledExample& example) {
    nlohmann::json j = {{"input", example.input}, {"gold", example.gold}};
    if (!example.extra_refs.empty()) j["refs"] = example.extra_refs;
    return j;
}

void write_dataset(const std::filesystem::path& path, const std::vector<LabeledExample>& examples) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write dataset " + path.string(), 0);
    for (const auto& ex : examples) out << to_json(ex).dump() << '\n';
    if (!out) throw DataError("write failed for " + path.string(), 0);
}

}  // namespace promptopt
