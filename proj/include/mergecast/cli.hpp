#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mergecast/config.hpp"

namespace mergecast {

// Subcommand bodies behind the mergecast binary. Each reports through the
// given streams and returns a process exit code, so tests drive them
// without spawning the tool.

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;      // any error not covered below
inline constexpr int kExitEnvironment = 2;  // missing git, unusable workdir or catalog
inline constexpr int kExitUnrelated = 3;    // predict: refs share no history
inline constexpr int kExitConflict = 10;    // predict: conflict verdict

// Acquires every catalog row, replays its merges, extracts features and
// appends new records, skipping scenario keys already in the dataset.
// Per-repo failures are reported and skipped, never fatal. Exit 0 iff the
// dataset holds at least one record when the run completes.
int cmd_mine(const RunConfig& config, std::ostream& out, std::ostream& err);

// Exports the mined dataset (honoring the language filter) as CSV.
int cmd_extract(const RunConfig& config, const std::filesystem::path& csv_out, std::ostream& out,
                std::ostream& err);

// Trains `classifier` (dt, rf, baseline1, baseline2), picking the tuple by
// grid search first when configured, cross-validates it, then fits the
// final model on the full dataset. Writes the model to `model_out` and the
// cv report next to it (.report.json).
int cmd_train(const RunConfig& config, const std::string& classifier,
              const std::filesystem::path& model_out, std::ostream& out, std::ostream& err);

// Held-out evaluation of a stored model against the dataset; `refit_cv`
// instead re-runs cross-validation with the stored kind and
// hyperparameters. Writes the report JSON and prints the table.
int cmd_evaluate(const RunConfig& config, const std::filesystem::path& model_path,
                 const std::filesystem::path& report_out, bool refit_cv, std::ostream& out,
                 std::ostream& err);

// Correlation screening plus decision-tree importances over the dataset.
// Writes correlation.json and importance.json under the workdir.
int cmd_correlate(const RunConfig& config, std::ostream& out, std::ostream& err);

// Live verdict for merging ref2 into ref1 at `repo_path`: extracts the
// feature vector against their merge base (no replay, read-only) and asks
// the model. Without `model_path` the per-language model under the workdir
// is used. Exit 0 safe, 10 conflict, 3 unrelated refs.
int cmd_predict(const RunConfig& config, const std::filesystem::path& repo_path,
                const std::string& ref1, const std::string& ref2,
                const std::optional<std::filesystem::path>& model_path, std::ostream& out,
                std::ostream& err);

// Renders stored evaluation reports as one side-by-side table.
int cmd_report(const std::vector<std::filesystem::path>& report_paths, std::ostream& out,
               std::ostream& err);

}  // namespace mergecast
