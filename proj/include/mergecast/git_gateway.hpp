#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mergecast {

// The one place that talks to the external `git` executable. Everything else
// in the pipeline works on the typed records parsed here.

struct CommandResult {
    int exit_code = -1;
    std::string out;  // stdout bytes, verbatim
    std::string err;  // stderr bytes, verbatim
    std::chrono::milliseconds duration{0};

    bool ok() const { return exit_code == 0; }
};

struct CommitMeta {
    std::string id;                       // 40 lowercase hex
    std::vector<std::string> parent_ids;  // 0 = root, 1 = normal, 2 = merge, >2 = octopus
    std::string author_email;
    std::int64_t author_timestamp = 0;  // unix seconds, UTC
    std::string message;                // %B verbatim (usually ends in '\n')
};

enum class ChangeKind { Added, Deleted, Modified, Renamed, Copied };

inline const char* to_string(ChangeKind k) {
    switch (k) {
        case ChangeKind::Added: return "added";
        case ChangeKind::Deleted: return "deleted";
        case ChangeKind::Modified: return "modified";
        case ChangeKind::Renamed: return "renamed";
        case ChangeKind::Copied: return "copied";
    }
    return "?";
}

struct FileChange {
    ChangeKind kind = ChangeKind::Modified;
    std::string path;                      // post-image path for renames/copies
    std::optional<std::string> old_path;   // renames/copies only
    std::optional<std::uint64_t> lines_added;    // nullopt = binary
    std::optional<std::uint64_t> lines_deleted;  // nullopt = binary
};

using EnvMap = std::map<std::string, std::string>;

// Runs an arbitrary executable with an argv list (no shell), a working
// directory and a wall-clock deadline. Captures stdout/stderr verbatim.
// Nonzero exit is NOT an error; callers interpret exit codes.
// Throws TimeoutError past the deadline (with partial output) and
// EnvironmentError when the executable cannot be spawned.
inline constexpr std::chrono::duration<double> kDefaultGitTimeout{120.0};

CommandResult run_process(const std::string& exe,
                          const std::vector<std::string>& args,
                          const std::filesystem::path& cwd,
                          std::chrono::duration<double> timeout,
                          const EnvMap& extra_env = {});

// `git -C repo_path <args...>` through run_process, with a pinned environment
// (C locale, no global/system config, no terminal prompts, fixed fallback
// identity) so output phrasing and replay behavior are machine-independent.
// `extra_env` entries override the pinned ones (fixtures set author dates).
CommandResult run_git(const std::filesystem::path& repo_path,
                      const std::vector<std::string>& args,
                      std::chrono::duration<double> timeout = kDefaultGitTimeout,
                      const EnvMap& extra_env = {});

// Pretty-format handed to `git log -z`; parse_log_records understands exactly
// this shape. Fields are NUL-separated and -z NUL-separates records, so a
// record is simply five consecutive NUL-delimited fields:
//   hash NUL parents NUL author-email NUL author-unix-time NUL raw-body
// Commit bodies cannot contain NUL, which makes the framing unambiguous.
inline constexpr const char* kLogFormat = "%H%x00%P%x00%ae%x00%at%x00%B";

// Arguments for a log/rev walk with the fixed format applied.
std::vector<std::string> log_format_args();

// Parses `git log -z --pretty=format:<kLogFormat>` output. Order preserved,
// multi-line messages intact. Throws ParseError with a byte offset.
std::vector<CommitMeta> parse_log_records(const std::string& output);

// Parses a `--numstat -z` + `--name-status -z` pair taken over the same
// range with rename/copy detection on. Plain (newline/TAB) output from the
// same commands is accepted too, covering hand-written inputs. Every path
// appears exactly once; `-` line counts map to nullopt (binary convention).
// A path present in only one of the two outputs means the invocations were
// inconsistent: ParseError.
std::vector<FileChange> parse_changes(const std::string& numstat_output,
                                      const std::string& name_status_output);

// `git --version`, cached after the first call. Throws EnvironmentError if
// git is not on PATH.
const std::string& git_version();

}  // namespace mergecast
