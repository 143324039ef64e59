#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mergecast/merge_miner.hpp"

namespace mergecast {

// Lightweight features over git history for one merge scenario: one
// merge-level count (simultaneously changed files) plus eight branch-level
// sets computed per parent branch and folded together by a combination
// operator.

inline constexpr int kKeywordCount = 12;
inline constexpr std::array<const char*, kKeywordCount> kKeywords = {
    "fix",      "bug",    "feature", "improve", "document", "refactor",
    "update",   "add",    "remove",  "use",     "delete",   "change"};

inline constexpr const char* kFeatureSchemaVersion = "1";

struct BranchFeatures {
    std::uint64_t commit_count = 0;              // set 2
    std::uint64_t commits_last_week = 0;         // set 3, window anchored at tip
    std::array<std::uint64_t, 5> file_changes{}; // set 4: added,deleted,renamed,modified,copied
    std::uint64_t lines_added = 0;               // set 5
    std::uint64_t lines_deleted = 0;
    std::uint64_t active_developers = 0;         // set 6
    std::array<std::uint64_t, kKeywordCount> keyword_freqs{};  // set 7
    double msg_len_min = 0;                      // set 8, characters
    double msg_len_max = 0;
    double msg_len_mean = 0;
    double msg_len_median = 0;
    double duration_hours = 0;                   // set 9, floored at 0

    // The frozen 27-slot branch layout used by combine().
    std::array<double, 27> as_array() const;
};

enum class CombineOp { Min, Max, Avg, Median, Norm1, Norm2, Concat };

const char* to_string(CombineOp op);
CombineOp combine_op_from_string(const std::string& name);  // ConfigError on junk

// Number of values in a full feature vector under `op` (28, or 55 for
// concatenation: 1 merge-level slot + two 27-slot branch blocks).
std::size_t vector_width(CombineOp op);

struct FeatureInfo {
    std::string name;
    int feature_set = 0;  // 1..9
};

// Full vector layout under `op`: slot 0 is the merge-level count, the rest
// follow the frozen branch order. Names and order back feature-schema.json.
const std::vector<FeatureInfo>& feature_schema(CombineOp op);

struct FeatureVector {
    std::string repo;
    std::string merge_commit;
    std::uint64_t simultaneous_files = 0;
    CombineOp op = CombineOp::Norm1;
    std::vector<double> values;  // width = vector_width(op), slot 0 duplicated above
    std::optional<Outcome> label;
};

// --- individual feature queries -------------------------------------------
// All range queries take (ancestor, tip) with ancestor an ancestor of tip;
// anything else raises RangeError. ancestor == tip is the empty range.

std::set<std::string> changed_files(const std::filesystem::path& repo, const std::string& ancestor,
                                    const std::string& tip);

std::uint64_t simultaneous_changes(const std::set<std::string>& files1,
                                   const std::set<std::string>& files2);

std::uint64_t branch_commit_count(const std::filesystem::path& repo, const std::string& ancestor,
                                  const std::string& tip);

// Commits in range whose author time falls in the 168 hours ending at the
// tip's author time.
std::uint64_t commit_density(const std::filesystem::path& repo, const std::string& ancestor,
                             const std::string& tip);

std::array<std::uint64_t, 5> file_change_histogram(const std::filesystem::path& repo,
                                                   const std::string& ancestor,
                                                   const std::string& tip);

std::pair<std::uint64_t, std::uint64_t> line_churn(const std::filesystem::path& repo,
                                                   const std::string& ancestor,
                                                   const std::string& tip);

std::uint64_t active_devs(const std::filesystem::path& repo, const std::string& ancestor,
                          const std::string& tip);

// Case-insensitive token-prefix counts in kKeywords order. A token is a
// maximal alphanumeric run; "Fixed" counts for "fix", "bugs" for "bug".
std::array<std::uint64_t, kKeywordCount> keyword_frequencies(
    const std::vector<std::string>& messages);

struct MsgLenStats {
    double min = 0, max = 0, mean = 0, median = 0;
};

// Lengths in characters (code points) of full messages, trailing newlines
// stripped. Median of an even count is the mean of the middle two.
MsgLenStats message_length_stats(const std::vector<std::string>& messages);

double branch_duration_hours(const std::filesystem::path& repo, const std::string& ancestor,
                             const std::string& tip);

// All branch-level sets in two git calls (log + endpoint diff).
BranchFeatures extract_branch(const std::filesystem::path& repo, const std::string& ancestor,
                              const std::string& tip);

// Element-wise fold of two 27-slot branch blocks; Concat keeps both blocks,
// parent1 first. Median of two values equals their mean.
std::vector<double> combine(const BranchFeatures& a, const BranchFeatures& b, CombineOp op);

// The full pipeline for one scenario. RangeError from a sub-extraction is
// rethrown as ExtractionError naming the feature set that failed.
FeatureVector extract_feature_vector(const std::filesystem::path& repo,
                                     const MergeScenario& scenario, CombineOp op,
                                     std::optional<Outcome> label = std::nullopt);

}  // namespace mergecast
