#pragma once
// Command implementations behind the `promptopt` executable.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace promptopt {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitData = 2, kExitTransport = 3 };

// Files written to the output directory by `train`.
inline constexpr const char* kBestPromptFile = "best_prompt.txt";
inline constexpr const char* kBestRecordFile = "best.json";
inline constexpr const char* kHistoryFile = "history.jsonl";
inline constexpr const char* kTimingFile = "timing.jsonl";
inline constexpr const char* kCheckpointDir = "checkpoints";
inline constexpr const char* kLatestCheckpoint = "latest.ckpt";
inline constexpr const char* kFinalCheckpoint = "final.ckpt";

/// `ckpt-000100.ckpt` style name for the checkpoint taken after `iteration`.
std::string checkpoint_name(int iteration);

struct TrainOptions {
    std::filesystem::path config;
    std::optional<std::filesystem::path> resume;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out_dir;
    bool quiet = false;
};

struct ScoreOptions {
    std::filesystem::path prompt_file;
    std::filesystem::path data;
    std::filesystem::path config;
    bool json = false;
};

struct SelectOptions {
    std::filesystem::path config;
    std::filesystem::path checkpoint;
    std::optional<int> n_test;
    bool json = false;
};

int cmd_train(const TrainOptions& opts, std::ostream& out, std::ostream& err);
int cmd_score(const ScoreOptions& opts, std::ostream& out, std::ostream& err);
int cmd_select(const SelectOptions& opts, std::ostream& out, std::ostream& err);
int cmd_validate_config(const std::filesystem::path& config, std::ostream& out, std::ostream& err);

}  // namespace promptopt
