#pragma once

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mergecast/repo_catalog.hpp"

namespace mergecast {

// Enumerates two-parent merge commits and labels each by replaying the merge
// in an isolated worktree.

struct MergeScenario {
    std::string repo;          // catalog name
    std::string merge_commit;  // the historical merge, exactly 2 parents
    std::string parent1;
    std::string parent2;
    std::string ancestor;  // merge base of the parents
    std::int64_t merge_timestamp = 0;
    bool multi_base = false;  // criss-cross history, first base recorded
};

enum class Outcome { Conflict, Clean, ReplayError };

inline const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::Conflict: return "conflict";
        case Outcome::Clean: return "clean";
        case Outcome::ReplayError: return "replay_error";
    }
    return "?";
}

struct MergeLabel {
    Outcome outcome = Outcome::ReplayError;
    std::vector<std::string> conflicting_paths;  // sorted; empty unless Conflict
    std::string detail;
};

struct MiningStats {
    std::uint64_t merges_found = 0;     // commits with >= 2 parents seen
    std::uint64_t octopus_skipped = 0;  // parent arity > 2
    std::uint64_t no_base_skipped = 0;  // unrelated parent histories
    std::uint64_t replay_errors = 0;
    std::uint64_t conflicts = 0;
    std::uint64_t cleans = 0;
};

struct AncestorResult {
    std::optional<std::string> base;  // first base git reports
    bool multi_base = false;
};

// Walks merge commits reachable from HEAD, newest first in topology order,
// and keeps the first `limit` that have two parents and a merge base. Skips
// feed the stats counters.
std::vector<MergeScenario> enumerate_merges(const LocalRepo& repo, std::size_t limit,
                                            MiningStats* stats = nullptr);

AncestorResult find_ancestor(const std::filesystem::path& repo_path, const std::string& p1,
                             const std::string& p2);

// Replays one scenario inside `worktree`: detached checkout of parent1, then
// a merge of parent2 stopped before committing. Conflict means nonzero exit
// plus unmerged paths plus git's conflict phrase; the detectors disagreeing
// is reported as ReplayError so it can be audited. The worktree is restored
// to its entry state afterward and verified clean; failing that raises
// EnvironmentError and the worktree must be retired.
MergeLabel replay(const std::filesystem::path& worktree, const MergeScenario& scenario);

// Fixed pool of linked worktrees so replays parallelize without re-cloning.
class WorktreePool {
public:
    WorktreePool(std::filesystem::path repo_path, std::filesystem::path base_dir,
                 std::size_t count);
    ~WorktreePool();
    WorktreePool(const WorktreePool&) = delete;
    WorktreePool& operator=(const WorktreePool&) = delete;

    class Lease {
    public:
        Lease(WorktreePool* pool, std::filesystem::path path)
            : pool_(pool), path_(std::move(path)) {}
        ~Lease() { release(); }
        Lease(Lease&& other) noexcept : pool_(other.pool_), path_(std::move(other.path_)) {
            other.pool_ = nullptr;
        }
        Lease& operator=(Lease&&) = delete;
        Lease(const Lease&) = delete;
        Lease& operator=(const Lease&) = delete;

        const std::filesystem::path& path() const { return path_; }
        // Drops the worktree from rotation instead of returning it.
        void mark_bad();

    private:
        void release();
        WorktreePool* pool_;
        std::filesystem::path path_;
    };

    // Blocks until a worktree frees up; throws EnvironmentError once every
    // worktree has been retired.
    Lease lease();
    std::size_t alive() const;

private:
    friend class Lease;
    void give_back(const std::filesystem::path& path);
    void retire(const std::filesystem::path& path);

    std::filesystem::path repo_path_;
    std::filesystem::path base_dir_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::vector<std::filesystem::path> free_;
    std::size_t alive_ = 0;
};

struct MinedRecord {
    MergeScenario scenario;
    MergeLabel label;
};

// enumerate + replay with `jobs` workers. Records come back in enumeration
// order regardless of scheduling; stats cover skips and label tallies.
std::pair<std::vector<MinedRecord>, MiningStats> mine_repository(
    const LocalRepo& repo, std::size_t limit, std::size_t jobs,
    const std::filesystem::path& scratch_dir);

}  // namespace mergecast
