#include "mergecast/merge_miner.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>

#include "mergecast/errors.hpp"
#include "mergecast/git_gateway.hpp"

namespace mergecast {
namespace {

// Printed by git when a merge stops on conflicts; kept as a cross-check next
// to the unmerged-paths query. Locale is pinned to C by run_git.
constexpr const char* kConflictPhrase =
    "Automatic merge failed; fix conflicts and then commit the result.";

std::string first_line(const std::string& s) {
    return s.substr(0, s.find_first_of("\r\n"));
}

std::vector<std::string> nonempty_lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

bool worktree_clean(const std::filesystem::path& wt) {
    auto st = run_git(wt, {"status", "--porcelain"});
    return st.ok() && st.out.empty();
}

}  // namespace

std::vector<MergeScenario> enumerate_merges(const LocalRepo& repo, std::size_t limit,
                                            MiningStats* stats) {
    if (repo.status != RepoStatus::Ready)
        throw PreconditionError("repository " + repo.spec.name + " is not ready");
    if (limit == 0) throw PreconditionError("limit must be >= 1");

    auto args = log_format_args();
    args.insert(args.begin(), "log");
    args.push_back("--min-parents=2");
    args.push_back("--topo-order");
    args.push_back("HEAD");
    auto res = run_git(repo.path, args, std::chrono::duration<double>(600.0));
    if (!res.ok()) {
        // a repo with no commits yields exit 128; treat as no merges
        if (res.out.empty()) return {};
        throw EnvironmentError("log failed in " + repo.path.string() + ": " + first_line(res.err));
    }

    std::vector<MergeScenario> scenarios;
    for (const auto& rec : parse_log_records(res.out)) {
        if (rec.parent_ids.size() < 2) continue;  // --min-parents already filters
        if (stats) ++stats->merges_found;
        if (rec.parent_ids.size() > 2) {
            if (stats) ++stats->octopus_skipped;
            continue;
        }
        auto anc = find_ancestor(repo.path, rec.parent_ids[0], rec.parent_ids[1]);
        if (!anc.base) {
            if (stats) ++stats->no_base_skipped;
            continue;
        }
        MergeScenario sc;
        sc.repo = repo.spec.name;
        sc.merge_commit = rec.id;
        sc.parent1 = rec.parent_ids[0];
        sc.parent2 = rec.parent_ids[1];
        sc.ancestor = *anc.base;
        sc.merge_timestamp = rec.author_timestamp;
        sc.multi_base = anc.multi_base;
        scenarios.push_back(std::move(sc));
        if (scenarios.size() == limit) break;
    }
    return scenarios;
}

AncestorResult find_ancestor(const std::filesystem::path& repo_path, const std::string& p1,
                             const std::string& p2) {
    auto res = run_git(repo_path, {"merge-base", "--all", p1, p2});
    AncestorResult out;
    if (!res.ok()) return out;  // exit 1: unrelated histories
    auto bases = nonempty_lines(res.out);
    if (bases.empty()) return out;
    out.base = bases.front();
    out.multi_base = bases.size() > 1;
    return out;
}

MergeLabel replay(const std::filesystem::path& worktree, const MergeScenario& scenario) {
    if (!worktree_clean(worktree))
        throw PreconditionError("worktree dirty before replay: " + worktree.string());
    auto entry_head = run_git(worktree, {"rev-parse", "HEAD"});
    if (!entry_head.ok())
        throw PreconditionError("worktree has no HEAD: " + worktree.string());
    const std::string entry = first_line(entry_head.out);

    MergeLabel label;
    auto checkout = run_git(worktree, {"checkout", "-q", "--detach", scenario.parent1});
    if (!checkout.ok()) {
        label.outcome = Outcome::ReplayError;
        label.detail = "checkout failed: " + first_line(checkout.err);
    } else {
        // --no-commit keeps the object store free of synthetic merge commits;
        // conflict behavior and exit status are unchanged by it
        auto merge = run_git(worktree, {"merge", "--no-commit", "--no-edit", scenario.parent2},
                             std::chrono::duration<double>(600.0));
        if (merge.ok()) {
            label.outcome = Outcome::Clean;
        } else {
            auto unmerged = run_git(worktree, {"diff", "--name-only", "--diff-filter=U"});
            auto paths = nonempty_lines(unmerged.out);
            bool phrase = merge.out.find(kConflictPhrase) != std::string::npos ||
                          merge.err.find(kConflictPhrase) != std::string::npos;
            if (!paths.empty() && phrase) {
                std::sort(paths.begin(), paths.end());
                label.outcome = Outcome::Conflict;
                label.conflicting_paths = std::move(paths);
            } else if (paths.empty() && !phrase) {
                label.outcome = Outcome::ReplayError;
                label.detail = "merge failed without conflict markers: " + first_line(merge.err);
            } else {
                label.outcome = Outcome::ReplayError;
                label.detail = paths.empty()
                                   ? "conflict phrase without unmerged paths"
                                   : "unmerged paths without conflict phrase";
            }
        }
    }
    if (scenario.multi_base && label.detail.empty())
        label.detail = "multiple merge bases; used first";

    // restore: abort any half-done merge, then force back to the entry commit
    run_git(worktree, {"merge", "--abort"});
    run_git(worktree, {"reset", "--hard", "-q", entry});
    run_git(worktree, {"clean", "-fdq"});
    run_git(worktree, {"checkout", "-q", "--detach", entry});
    if (!worktree_clean(worktree))
        throw EnvironmentError("worktree not restorable after replay: " + worktree.string());
    auto now_head = run_git(worktree, {"rev-parse", "HEAD"});
    if (!now_head.ok() || first_line(now_head.out) != entry)
        throw EnvironmentError("HEAD not restored after replay: " + worktree.string());
    return label;
}

WorktreePool::WorktreePool(std::filesystem::path repo_path, std::filesystem::path base_dir,
                           std::size_t count)
    : repo_path_(std::move(repo_path)), base_dir_(std::move(base_dir)) {
    if (count == 0) throw PreconditionError("worktree pool needs at least one slot");
    std::filesystem::create_directories(base_dir_);
    for (std::size_t i = 0; i < count; ++i) {
        auto wt = base_dir_ / ("wt-" + std::to_string(i));
        std::error_code ec;
        std::filesystem::remove_all(wt, ec);
        auto res = run_git(repo_path_, {"worktree", "add", "--detach", wt.string(), "HEAD"},
                           std::chrono::duration<double>(600.0));
        if (!res.ok())
            throw EnvironmentError("worktree add failed: " + first_line(res.err));
        free_.push_back(wt);
        ++alive_;
    }
}

WorktreePool::~WorktreePool() {
    std::lock_guard<std::mutex> g(mu_);
    for (const auto& wt : free_)
        run_git(repo_path_, {"worktree", "remove", "--force", wt.string()});
    run_git(repo_path_, {"worktree", "prune"});
}

WorktreePool::Lease WorktreePool::lease() {
    std::unique_lock<std::mutex> g(mu_);
    cv_.wait(g, [&] { return !free_.empty() || alive_ == 0; });
    if (free_.empty())
        throw EnvironmentError("all worktrees retired, cannot continue replaying");
    auto path = free_.back();
    free_.pop_back();
    return Lease(this, path);
}

std::size_t WorktreePool::alive() const {
    std::lock_guard<std::mutex> g(mu_);
    return alive_;
}

void WorktreePool::give_back(const std::filesystem::path& path) {
    {
        std::lock_guard<std::mutex> g(mu_);
        free_.push_back(path);
    }
    cv_.notify_one();
}

void WorktreePool::retire(const std::filesystem::path& path) {
    run_git(repo_path_, {"worktree", "remove", "--force", path.string()});
    run_git(repo_path_, {"worktree", "prune"});
    {
        std::lock_guard<std::mutex> g(mu_);
        --alive_;
    }
    cv_.notify_all();
}

void WorktreePool::Lease::mark_bad() {
    if (!pool_) return;
    pool_->retire(path_);
    pool_ = nullptr;
}

void WorktreePool::Lease::release() {
    if (!pool_) return;
    pool_->give_back(path_);
    pool_ = nullptr;
}

std::pair<std::vector<MinedRecord>, MiningStats> mine_repository(
    const LocalRepo& repo, std::size_t limit, std::size_t jobs,
    const std::filesystem::path& scratch_dir) {
    MiningStats stats;
    auto scenarios = enumerate_merges(repo, limit, &stats);
    std::vector<MinedRecord> records(scenarios.size());
    if (scenarios.empty()) return {std::move(records), stats};

    jobs = std::max<std::size_t>(1, std::min(jobs, scenarios.size()));
    WorktreePool pool(repo.path, scratch_dir / clone_dir_name(repo.spec.name), jobs);

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;

    auto worker = [&] {
        try {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= scenarios.size()) return;
                MergeLabel label;
                for (int attempt = 0;; ++attempt) {
                    auto wt = pool.lease();
                    try {
                        label = replay(wt.path(), scenarios[i]);
                        break;
                    } catch (const EnvironmentError&) {
                        wt.mark_bad();
                        if (attempt >= 1) throw;
                    } catch (const Error& e) {
                        label.outcome = Outcome::ReplayError;
                        label.detail = e.what();
                        break;
                    }
                }
                records[i] = MinedRecord{scenarios[i], label};
            }
        } catch (...) {
            std::lock_guard<std::mutex> g(error_mu);
            if (!first_error) first_error = std::current_exception();
            next.store(scenarios.size());  // drain remaining work
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(jobs);
    for (std::size_t t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);

    for (const auto& rec : records) {
        switch (rec.label.outcome) {
            case Outcome::Conflict: ++stats.conflicts; break;
            case Outcome::Clean: ++stats.cleans; break;
            case Outcome::ReplayError: ++stats.replay_errors; break;
        }
    }
    return {std::move(records), stats};
}

}  // namespace mergecast
