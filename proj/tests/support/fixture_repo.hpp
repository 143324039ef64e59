#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mergecast::testing {

struct CommitOpts {
    std::string author_email = "alice@example.com";
    std::int64_t timestamp = 0;  // 0 means advance the internal clock
};

struct MergeOutcome {
    std::string commit_id;
    bool conflicted = false;
};

// Builds throwaway git repositories with pinned author identities and
// timestamps so commit hashes are reproducible across runs.
class FixtureRepo {
public:
    explicit FixtureRepo(std::filesystem::path path);

    const std::filesystem::path& path() const { return path_; }

    void write(const std::string& rel, const std::string& content);
    std::string commit(const std::string& message, const CommitOpts& opts = {});
    std::string commit_file(const std::string& rel, const std::string& content,
                            const std::string& message, const CommitOpts& opts = {});
    void branch(const std::string& name);           // create at HEAD and switch
    void checkout(const std::string& name);
    void orphan(const std::string& name);           // new rootless branch, empty tree
    // plain merge refuses unrelated histories; this one allows them
    MergeOutcome merge_unrelated(const std::string& ref, const std::string& message,
                                 const CommitOpts& opts = {});
    std::string move_file(const std::string& from, const std::string& to,
                          const std::string& message, const CommitOpts& opts = {});
    // Merges `ref` into the current branch. Conflicts are resolved by taking
    // the incoming side wholesale so history construction can continue.
    MergeOutcome merge(const std::string& ref, const std::string& message,
                       const CommitOpts& opts = {});
    std::string merge_octopus(const std::vector<std::string>& refs, const std::string& message,
                              const CommitOpts& opts = {});
    std::string rev_parse(const std::string& ref) const;
    std::string head() const { return rev_parse("HEAD"); }

private:
    std::int64_t pick_ts(const CommitOpts& opts);

    std::filesystem::path path_;
    std::int64_t clock_ = 1700000000;
};

// The shared history used by mining and extraction tests: five two-parent
// merges (three clean, two conflicting), one rename, one octopus merge.
struct StandardFixture {
    std::string c0;                 // root commit
    std::string m1_clean;           // disjoint file merge
    std::string mc1_conflict;       // both sides edit base.txt line 2
    std::string mc1_parent1;        // first parent of mc1 (main side)
    std::string mc1_parent2;        // second parent of mc1 (branch side)
    std::string mc1_ancestor;       // merge base of mc1's parents (= m1_clean)
    std::string m3_clean;           // merge carrying a rename
    std::string m4_clean;           // disjoint edits
    std::string mc2_conflict;       // both sides edit notes-renamed.md
    std::string octopus;            // three-parent merge, must be skipped
    std::vector<std::string> merge_ids_newest_first;  // two-parent merges only
};

StandardFixture build_standard_fixture(FixtureRepo& repo);

}  // namespace mergecast::testing
