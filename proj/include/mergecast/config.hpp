#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "mergecast/features.hpp"
#include "mergecast/learner.hpp"

namespace mergecast {

// Run-wide settings shared by every subcommand. Defaults are the
// configuration the tool ships with; a config file and command-line flags
// overlay them (flags win, then the file, then MERGECAST_WORKDIR).

struct RunConfig {
    std::filesystem::path workdir = "mergecast-work";
    std::filesystem::path catalog;
    std::size_t merge_limit = 1000;  // newest merges kept per repository
    CombineOp op = CombineOp::Norm1;
    HyperParams params;              // fixed tuple used when grid is off
    bool use_grid = false;           // train picks the tuple by grid search
    int folds = 10;
    std::uint64_t seed = 0;
    std::optional<std::string> language;  // keep only records with this label
    std::size_t jobs = 1;
    std::uint64_t size_cap_bytes = std::uint64_t{1} << 30;
};

// Overlays `key = value` lines onto `config`. `#` starts a comment, blank
// lines are skipped, values may be double-quoted. Unknown keys and
// unparsable values raise ConfigError naming the 1-based line.
void apply_config_file(RunConfig& config, const std::filesystem::path& file);

// Defaults overlaid with one file.
RunConfig load_config(const std::filesystem::path& file);

std::optional<std::filesystem::path> env_workdir();

// Standard artifact locations under the workdir.
std::filesystem::path dataset_path(const RunConfig& config);
std::filesystem::path dataset_meta_path(const RunConfig& config);
std::filesystem::path language_model_path(const RunConfig& config, const std::string& language);

}  // namespace mergecast
