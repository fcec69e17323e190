#pragma once
// Line-delimited JSON datasets: {"input": ..., "gold": ..., "refs": [...]} per line.

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "promptopt/core.hpp"

namespace promptopt {

/// Parses and validates every record against `spec`, preserving file order.
/// Labels of classification and multiple-choice tasks are casefolded. Blank
/// lines are skipped. Throws DataError carrying the 1-based line number.
std::vector<LabeledExample> load_dataset(const std::filesystem::path& path, const TaskSpec& spec);

/// Same rules as load_dataset, for in-memory text. `source` prefixes messages.
std::vector<LabeledExample> parse_dataset(std::string_view text, const TaskSpec& spec,
                                          std::string_view source = "dataset");

nlohmann::json to_json(const LabeledExample& example);
void write_dataset(const std::filesystem::path& path, const std::vector<LabeledExample>& examples);

}  // namespace promptopt
