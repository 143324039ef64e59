#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "mergecast/errors.hpp"
#include "mergecast/git_gateway.hpp"
#include "mergecast/merge_miner.hpp"
#include "support/fixture_repo.hpp"
#include "support/temp_dir.hpp"

using namespace mergecast;
using mergecast::testing::FixtureRepo;
using mergecast::testing::StandardFixture;
using mergecast::testing::TempDir;

namespace {

LocalRepo as_local(const std::string& name, const FixtureRepo& repo) {
    LocalRepo local;
    local.spec.name = name;
    local.spec.url = repo.path().string();
    local.spec.language = "C";
    local.path = repo.path();
    local.head = repo.rev_parse("HEAD");
    local.status = RepoStatus::Ready;
    return local;
}

}  // namespace

TEST_CASE("enumerate_merges: finds every two-parent merge, newest first") {
    TempDir dir("mine");
    FixtureRepo repo(dir / "r");
    auto fx = build_standard_fixture(repo);
    auto local = as_local("o/std", repo);

    MiningStats stats;
    auto scenarios = enumerate_merges(local, 1000, &stats);
    REQUIRE(scenarios.size() == 5);
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(scenarios[i].merge_commit == fx.merge_ids_newest_first[i]);
    CHECK(stats.merges_found == 6);
    CHECK(stats.octopus_skipped == 1);
    CHECK(stats.no_base_skipped == 0);
    for (const auto& sc : scenarios) {
        CHECK(sc.repo == "o/std");
        CHECK_FALSE(sc.multi_base);
        CHECK(sc.merge_timestamp > 0);
        CHECK(sc.merge_commit != fx.octopus);
    }
}

TEST_CASE("enumerate_merges: limit keeps only the newest scenarios") {
    TempDir dir("mine");
    FixtureRepo repo(dir / "r");
    auto fx = build_standard_fixture(repo);

    auto scenarios = enumerate_merges(as_local("o/std", repo), 2);
    REQUIRE(scenarios.size() == 2);
    CHECK(scenarios[0].merge_commit == fx.merge_ids_newest_first[0]);
    CHECK(scenarios[1].merge_commit == fx.merge_ids_newest_first[1]);
}

TEST_CASE("enumerate_merges: records the parents and ancestor seen at merge time") {
    TempDir dir("mine");
    FixtureRepo repo(dir / "r");
    auto fx = build_standard_fixture(repo);

    auto scenarios = enumerate_merges(as_local("o/std", repo), 1000);
    const MergeScenario* mc1 = nullptr;
    for (const auto& sc : scenarios)
        if (sc.merge_commit == fx.mc1_conflict) mc1 = &sc;
    REQUIRE(mc1 != nullptr);
    CHECK(mc1->parent1 == fx.mc1_parent1);
    CHECK(mc1->parent2 == fx.mc1_parent2);
    CHECK(mc1->ancestor == fx.mc1_ancestor);
}

TEST_CASE("enumerate_merges: merge of unrelated roots is counted, not emitted") {
    TempDir dir("mine");
    FixtureRepo repo(dir / "r");
    repo.commit_file("a.txt", "a\n", "main root");
    repo.orphan("isle");
    repo.commit_file("b.txt", "b\n", "island root");
    repo.checkout("main");
    repo.merge_unrelated("isle", "join islands");

    MiningStats stats;
    auto scenarios = enumerate_merges(as_local("o/isles", repo), 1000, &stats);
    CHECK(scenarios.empty());
    CHECK(stats.merges_found == 1);
    CHECK(stats.no_base_skipped == 1);
}

TEST_CASE("enumerate_merges: refuses repositories that are not Ready") {
    TempDir dir("mine");
    LocalRepo bad;
    bad.spec.name = "o/bad";
    bad.status = RepoStatus::CloneFailed;
    CHECK_THROWS_AS(enumerate_merges(bad, 1000), PreconditionError);
}

TEST_CASE("find_ancestor: degenerate shapes") {
    TempDir dir("mine");
    FixtureRepo repo(dir / "r");
    auto c1 = repo.commit_file("a.txt", "1\n", "one");
    auto c2 = repo.commit_file("a.txt", "2\n", "two");

    auto self = find_ancestor(repo.path(), c1, c1);
    REQUIRE(self.base.has_value());
    CHECK(*self.base == c1);
    CHECK_FALSE(self.multi_base);

    auto ff = find_ancestor(repo.path(), c1, c2);
    REQUIRE(ff.base.has_value());
    CHECK(*ff.base == c1);
}

TEST_CASE("find_ancestor: unrelated roots have no base") {
    TempDir dir("mine");
    FixtureRepo repo(dir / "r");
    auto a = repo.commit_file("a.txt", "a\n", "main root");
    repo.orphan("isle");
    auto b = repo.commit_file("b.txt", "b\n", "island root");

    CHECK_FALSE(find_ancestor(repo.path(), a, b).base.has_value());
}

TEST_CASE("find_ancestor: criss-cross history flags multiple bases") {
    TempDir dir("mine");
    FixtureRepo repo(dir / "r");
    repo.commit_file("seed.txt", "s\n", "seed");
    repo.branch("a");
    auto a1 = repo.commit_file("fa.txt", "a\n", "side a");
    repo.checkout("main");
    repo.branch("b");
    auto b1 = repo.commit_file("fb.txt", "b\n", "side b");
    repo.checkout("a");
    auto ma = repo.merge(b1, "a absorbs b").commit_id;
    repo.checkout("b");
    auto mb = repo.merge(a1, "b absorbs a").commit_id;

    auto res = find_ancestor(repo.path(), ma, mb);
    REQUIRE(res.base.has_value());
    CHECK(res.multi_base);
    // the reported base must be one of the two true common ancestors
    std::set<std::string> expected = {a1, b1};
    CHECK(expected.count(*res.base) == 1);

    auto all = run_git(repo.path(), {"merge-base", "--all", ma, mb});
    CHECK(all.out.find(a1) != std::string::npos);
    CHECK(all.out.find(b1) != std::string::npos);
    CHECK(all.out.substr(0, 40) == *res.base);
}

TEST_CASE("replay: labels match the outcomes recorded at construction time") {
    TempDir dir("mine");
    FixtureRepo repo(dir / "r");
    auto fx = build_standard_fixture(repo);
    auto local = as_local("o/std", repo);
    auto scenarios = enumerate_merges(local, 1000);

    WorktreePool pool(local.path, dir / "wt", 1);
    auto wt = pool.lease();

    std::map<std::string, Outcome> expect = {
        {fx.m1_clean, Outcome::Clean},       {fx.mc1_conflict, Outcome::Conflict},
        {fx.m3_clean, Outcome::Clean},       {fx.m4_clean, Outcome::Clean},
        {fx.mc2_conflict, Outcome::Conflict},
    };
    for (const auto& sc : scenarios) {
        auto label = replay(wt.path(), sc);
        CHECK(label.outcome == expect.at(sc.merge_commit));
        if (sc.merge_commit == fx.mc1_conflict) {
            REQUIRE(label.conflicting_paths.size() == 1);
            CHECK(label.conflicting_paths[0] == "base.txt");
        }
        if (sc.merge_commit == fx.mc2_conflict) {
            REQUIRE(label.conflicting_paths.size() == 1);
            CHECK(label.conflicting_paths[0] == "notes-renamed.md");
        }
        if (label.outcome != Outcome::Conflict) CHECK(label.conflicting_paths.empty());
    }
}

TEST_CASE("replay: deterministic and pollution-free") {
    TempDir dir("mine");
    FixtureRepo repo(dir / "r");
    auto fx = build_standard_fixture(repo);
    auto local = as_local("o/std", repo);
    auto scenarios = enumerate_merges(local, 1000);
    const MergeScenario* conflict = nullptr;
    for (const auto& sc : scenarios)
        if (sc.merge_commit == fx.mc1_conflict) conflict = &sc;
    REQUIRE(conflict != nullptr);

    WorktreePool pool(local.path, dir / "wt", 1);
    auto wt = pool.lease();
    auto entry_head = run_git(wt.path(), {"rev-parse", "HEAD"}).out;

    auto first = replay(wt.path(), *conflict);
    auto st = run_git(wt.path(), {"status", "--porcelain"});
    CHECK(st.out.empty());
    CHECK(run_git(wt.path(), {"rev-parse", "HEAD"}).out == entry_head);

    auto second = replay(wt.path(), *conflict);
    CHECK(first.outcome == second.outcome);
    CHECK(first.conflicting_paths == second.conflicting_paths);
    CHECK(first.detail == second.detail);
}

TEST_CASE("replay: dirty worktree is rejected up front") {
    TempDir dir("mine");
    FixtureRepo repo(dir / "r");
    build_standard_fixture(repo);
    auto local = as_local("o/std", repo);
    auto scenarios = enumerate_merges(local, 1);
    REQUIRE_FALSE(scenarios.empty());

    WorktreePool pool(local.path, dir / "wt", 1);
    auto wt = pool.lease();
    std::ofstream(wt.path() / "dirt.txt") << "x";
    CHECK_THROWS_AS(replay(wt.path(), scenarios[0]), PreconditionError);
}

TEST_CASE("mine_repository: order is enumeration order and stats add up") {
    TempDir dir("mine");
    FixtureRepo repo(dir / "r");
    auto fx = build_standard_fixture(repo);
    auto local = as_local("o/std", repo);

    auto [records, stats] = mine_repository(local, 1000, 2, dir / "scratch");
    REQUIRE(records.size() == 5);
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(records[i].scenario.merge_commit == fx.merge_ids_newest_first[i]);
    CHECK(stats.merges_found == 6);
    CHECK(stats.octopus_skipped == 1);
    CHECK(stats.conflicts == 2);
    CHECK(stats.cleans == 3);
    CHECK(stats.replay_errors == 0);
    CHECK(stats.conflicts + stats.cleans + stats.replay_errors == records.size());
}
