// Acceptance gate for mergecast. Runs nine release criteria end to end and
// prints exactly one PASS/FAIL line per criterion, so the output doubles as
// a checklist. Every tolerance and runtime budget is pinned here next to the
// check that uses it; the process exits nonzero if anything fails, including
// a blown budget.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mergecast/analytics.hpp"
#include "mergecast/cli.hpp"
#include "mergecast/config.hpp"
#include "mergecast/dataset.hpp"
#include "mergecast/evaluator.hpp"
#include "mergecast/features.hpp"
#include "mergecast/learner.hpp"
#include "mergecast/merge_miner.hpp"
#include "support/fixture_repo.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using namespace mergecast;
using mergecast::testing::FixtureRepo;
using mergecast::testing::TempDir;

namespace {

// --- pinned tolerances ------------------------------------------------------

constexpr double kExactTol = 1e-12;       // criteria 1 and 4
constexpr double kBaselineTol = 0.01;     // criterion 2, around the prior law
constexpr double kImportanceFloor = 0.9;  // criterion 6, set-1 share
constexpr double kLatencyBudgetMs = 1000.0;  // criterion 8, median live predict

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw Failure(what);
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    require(in.good(), "cannot read " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
    require(static_cast<bool>(out), "cannot write " + p.string());
}

// Replaces one 1-based line of a tracked file, reading the current worktree
// state so scripted edits stay consistent across merges.
void rewrite_line(FixtureRepo& repo, const std::string& rel, int line, const std::string& text) {
    std::istringstream in(slurp(repo.path() / rel));
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    require(line >= 1 && line <= static_cast<int>(lines.size()),
            "rewrite_line out of range in " + rel);
    lines[line - 1] = text;
    std::string joined;
    for (const auto& l : lines) joined += l + "\n";
    repo.write(rel, joined);
}

std::filesystem::path write_catalog(const std::filesystem::path& dir,
                                    const std::vector<std::pair<std::string, std::string>>& rows) {
    std::filesystem::create_directories(dir);
    std::string text = "name,url,language,skip\n";
    for (const auto& [name, url] : rows) text += name + "," + url + ",cpp,0\n";
    const auto path = dir / "catalog.csv";
    write_file(path, text);
    return path;
}

// State shared between the corpus criteria (7 builds it, 8 reuses it).
struct World {
    TempDir root{"acceptance"};
    std::vector<std::filesystem::path> corpus_repos;
    std::filesystem::path corpus_workdir;
    std::filesystem::path corpus_model;
};

// --- criterion 1: per-class metrics on the worked example -------------------

void c1_worked_example(World&) {
    constexpr auto C = Outcome::Conflict;
    constexpr auto S = Outcome::Clean;
    const std::vector<Outcome> truth = {C, S, S, C, S, S};
    const std::vector<Outcome> pred = {S, S, C, C, S, C};

    const EvaluationReport rep = evaluate_predictions(truth, pred, "desk check", "n=6");
    const auto near = [](double got, double want, const char* name) {
        require(std::fabs(got - want) <= kExactTol,
                std::string(name) + " is " + num(got) + ", expected " + num(want));
    };
    near(rep.pooled_conflict.recall, 0.5, "conflict recall");
    near(rep.pooled_conflict.precision, 1.0 / 3.0, "conflict precision");
    near(rep.pooled_safe.recall, 0.5, "safe recall");
    near(rep.pooled_safe.precision, 2.0 / 3.0, "safe precision");
}

// --- criterion 2: the stratified-random baseline obeys the prior law --------

void c2_baseline_prior_law(World&) {
    constexpr std::size_t kSamples = 100000;
    constexpr std::size_t kConflicts = 8120;  // prior 0.0812
    const double prior = static_cast<double>(kConflicts) / kSamples;

    TrainingView view;
    view.op = CombineOp::Norm1;
    view.width = 28;
    view.x.assign(kSamples, {});  // the baseline never looks at features
    view.y.assign(kSamples, Outcome::Clean);
    std::fill_n(view.y.begin(), kConflicts, Outcome::Conflict);

    const Baseline1Model model = fit_baseline1(view);
    require(std::fabs(model.prior - prior) <= kExactTol, "fitted prior drifted");

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        std::mt19937_64 rng(seed);
        std::vector<Outcome> pred;
        pred.reserve(kSamples);
        for (std::size_t i = 0; i < kSamples; ++i) pred.push_back(predict_baseline1(model, rng));
        const EvaluationReport rep = evaluate_predictions(view.y, pred, "baseline1", "synthetic");
        require(std::fabs(rep.pooled_conflict.f1 - prior) <= kBaselineTol,
                "seed " + std::to_string(seed) + ": conflict f1 " +
                    num(rep.pooled_conflict.f1) + " strays from " + num(prior));
        require(std::fabs(rep.pooled_safe.f1 - (1.0 - prior)) <= kBaselineTol,
                "seed " + std::to_string(seed) + ": safe f1 " + num(rep.pooled_safe.f1) +
                    " strays from " + num(1.0 - prior));
    }
}

// --- criterion 3: fixture mining reproduces labels and hand-computed features

void c3_fixture_ground_truth(World& world) {
    FixtureRepo repo(world.root / "std-repo");
    const auto fx = mergecast::testing::build_standard_fixture(repo);

    RunConfig cfg;
    cfg.workdir = world.root / "std-work";
    cfg.catalog = write_catalog(world.root / "std-cat", {{"demo/std", repo.path().string()}});
    cfg.jobs = 2;
    std::ostringstream out, err;
    require(cmd_mine(cfg, out, err) == kExitOk, "mine failed: " + err.str());

    const LabeledDataset ds = load_dataset(dataset_path(cfg));
    require(ds.records.size() == 5,
            "expected 5 mined records, got " + std::to_string(ds.records.size()));
    const std::map<std::string, Outcome> expected = {
        {fx.m1_clean, Outcome::Clean},       {fx.mc1_conflict, Outcome::Conflict},
        {fx.m3_clean, Outcome::Clean},       {fx.m4_clean, Outcome::Clean},
        {fx.mc2_conflict, Outcome::Conflict},
    };
    for (const auto& rec : ds.records) {
        auto it = expected.find(rec.merge_commit);
        require(it != expected.end(), "unexpected merge " + rec.merge_commit);
        require(rec.label == it->second,
                "label mismatch on " + rec.merge_commit.substr(0, 8) + ": got " +
                    to_string(rec.label));
    }
    const DatasetMeta meta = read_dataset_meta(dataset_meta_path(cfg));
    require(meta.mining.octopus_skipped == 1, "the three-parent merge was not skipped");

    // Hand-computed from the fixture script. The first conflict merges two
    // branches off the m1 merge: main carries one commit by carol ("update
    // beta text", +1/-1 on base.txt, 3h after the base), the topic branch two
    // commits by bob ("fix beta handling", "add delta line", +2/-1, 2h).
    // Slots follow feature-schema.json; the fold is norm1, so each branch
    // slot is the sum of the two per-branch values.
    const std::vector<double> want = {
        1,                                   // base.txt edited on both sides
        3,                                   // 1 + 2 commits
        3,                                   // every commit within a week of its tip
        0, 0, 0, 2, 0,                       // one modified file per side
        3, 2,                                // (1+2) lines added, (1+1) deleted
        2,                                   // carol + bob
        1, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0,  // keywords fix, update, add
        30, 33, 31.5, 31.5,                  // message lengths 16 vs {17, 14}
        5,                                   // 3h + 2h
    };
    const auto rec = std::find_if(ds.records.begin(), ds.records.end(), [&](const auto& r) {
        return r.merge_commit == fx.mc1_conflict;
    });
    require(rec != ds.records.end(), "first conflict merge missing from the dataset");
    require(rec->features.size() == want.size(), "feature vector width drifted");
    const auto& schema = feature_schema(CombineOp::Norm1);
    for (std::size_t i = 0; i < want.size(); ++i)
        require(rec->features[i] == want[i], "slot " + std::to_string(i) + " (" +
                                                 schema[i].name + ") is " +
                                                 num(rec->features[i]) + ", hand value " +
                                                 num(want[i]));
}

// --- criterion 4: spearman against the brute-force oracle -------------------

void c4_spearman_oracle(World&) {
    std::mt19937_64 rng(2026);
    const auto column = [&rng](std::size_t n) {
        std::vector<double> v(n);
        while (true) {
            for (auto& x : v)
                x = (rng() % 2 == 0) ? static_cast<double>(rng() % 6)       // heavy ties
                                     : static_cast<double>(rng() % 9000) / 1000.0;
            if (std::any_of(v.begin(), v.end(), [&](double x) { return x != v.front(); }))
                return v;
        }
    };
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 3 + rng() % 48;
        const std::vector<double> x = column(n);
        const std::vector<double> y = column(n);

        const double rho = spearman(x, y).rho;
        const double ref = mergecast::testing::naive_spearman(x, y);
        require(std::fabs(rho - ref) <= kExactTol,
                "trial " + std::to_string(trial) + ": rho " + num(rho) + " vs oracle " +
                    num(ref));

        // Strictly increasing transforms keep the ranks, hence the exact rho.
        std::vector<double> tx(n), ty(n);
        for (std::size_t i = 0; i < n; ++i) {
            tx[i] = 3.0 * x[i] + 2.0;
            ty[i] = std::exp(y[i] / 8.0);
        }
        require(spearman(tx, ty).rho == rho,
                "trial " + std::to_string(trial) + ": monotone transform moved rho");
    }
}

// --- criterion 5: tree fits match exhaustive split enumeration --------------

void c5_cart_oracle(World&) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 5 + rng() % 26;   // up to 30 samples
        const std::size_t d = 1 + rng() % 3;    // up to 3 features
        TrainingView view;
        view.op = CombineOp::Norm1;
        view.width = d;
        view.x.assign(n, std::vector<double>(d));
        view.y.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j)
                view.x[i][j] = (rng() % 2 == 0) ? static_cast<double>(rng() % 8)
                                                : static_cast<double>(rng() % 1000) / 100.0;
            view.y[i] = (rng() % 2 == 0) ? Outcome::Conflict : Outcome::Clean;
        }
        HyperParams hp;
        hp.min_samples_leaf = 1 + static_cast<int>(rng() % 3);
        hp.min_samples_split = 2 + static_cast<int>(rng() % 3) * 2;
        hp.max_depth = 1 + static_cast<int>(rng() % 4);

        const TreeModel tree = fit_tree(view, hp);
        std::vector<std::size_t> rows(n), feats(d);
        std::iota(rows.begin(), rows.end(), 0);
        std::iota(feats.begin(), feats.end(), 0);
        const auto ref = mergecast::testing::brute_cart(view.x, view.y, rows, feats, hp);

        require(mergecast::testing::same_tree(tree.nodes, 0, *ref),
                "trial " + std::to_string(trial) + ": structures diverge");
        for (std::size_t i = 0; i < n; ++i)
            require(predict(tree, view.x[i]) == mergecast::testing::brute_predict(*ref, view.x[i]),
                    "trial " + std::to_string(trial) + ": predictions diverge on row " +
                        std::to_string(i));
    }
}

// --- criterion 6: a lone informative set dominates importance and correlation

void c6_importance_pattern(World&) {
    std::mt19937_64 rng(404);
    LabeledDataset ds;
    ds.schema_version = kFeatureSchemaVersion;
    const std::size_t width = vector_width(CombineOp::Norm1);
    for (int i = 0; i < 300; ++i) {
        DatasetRecord rec;
        rec.repo = "synthetic";
        rec.merge_commit = std::to_string(i);
        rec.language = "cpp";
        rec.op = CombineOp::Norm1;
        rec.label = (i % 2 == 0) ? Outcome::Conflict : Outcome::Clean;
        rec.features.resize(width);
        // Only slot 0 separates the classes; everything else is shared noise.
        rec.features[0] = rec.label == Outcome::Conflict
                              ? 4.0 + static_cast<double>(rng() % 6)
                              : static_cast<double>(rng() % 3);
        for (std::size_t j = 1; j < width; ++j)
            rec.features[j] = static_cast<double>(rng() % 100) / 10.0;
        if (rec.label == Outcome::Conflict)
            ++ds.class_counts.conflicts;
        else
            ++ds.class_counts.cleans;
        ds.records.push_back(std::move(rec));
    }

    const CorrelationReport corr = correlation_report(ds);
    require(corr.per_set.size() == 9, "expected nine set entries");
    require(corr.per_set[0].feature_set_id == 1, "set ordering drifted");
    require(corr.per_set[0].strength == Strength::Strong,
            "set 1 classified " + std::string(to_string(corr.per_set[0].strength)) +
                ", expected strong (rho " + num(corr.per_set[0].coefficient) + ")");

    HyperParams hp;  // stock tuple: leaf 10, split 5, depth 7
    const TreeModel tree = fit_tree(training_view(ds), hp);
    const ImportanceReport imp = feature_importance(tree, feature_schema(CombineOp::Norm1));
    require(imp.per_set[0].feature_set_id == 1, "importance set ordering drifted");
    require(imp.per_set[0].importance >= kImportanceFloor,
            "set 1 importance " + num(imp.per_set[0].importance) + " below " +
                num(kImportanceFloor));
}

// --- criterion 7: end-to-end corpus run preserves the expected ordering -----

// Scripted development history where conflict odds rise smoothly with several
// weak branch traits (commit count, edit span, author mix) instead of any one
// separating column. Busy branches merge cleanly often enough, and quiet ones
// conflict often enough, that a single greedy tree overfits whichever slice it
// latched onto while an averaged ensemble generalizes.
int build_corpus_repo(FixtureRepo& repo, std::uint64_t seed, int merges) {
    std::mt19937_64 rng(seed);
    const std::vector<std::string> authors = {"alice@example.com", "bob@example.com",
                                              "carol@example.com", "dave@example.com"};
    const std::vector<std::string> phrases = {
        "fix overflow in the parser",   "add coverage for the edge case",
        "update dependency pins",       "refactor config loading",
        "improve error wording",        "document the retry policy",
        "remove a dead branch",         "use the steady clock",
        "change the default timeout",   "bug in the range check",
        "tune the cache size",          "rework queue draining",
        "polish log output",            "trim stale comments",
    };
    std::int64_t clock = 1500000000;
    const auto ts = [&] { return clock += 1200 + static_cast<int>(rng() % 5) * 600; };
    const auto author = [&] { return authors[rng() % authors.size()]; };
    const auto phrase = [&] { return phrases[rng() % phrases.size()]; };
    const auto unit = [&] { return std::ldexp(static_cast<double>(rng() >> 11), -53); };

    constexpr int kLines = 60;
    constexpr int kNoteLines = 30;
    std::string shared, notes;
    for (int i = 1; i <= kLines; ++i) shared += "shared line " + std::to_string(i) + "\n";
    for (int i = 1; i <= kNoteLines; ++i) notes += "notes line " + std::to_string(i) + "\n";
    repo.write("shared.txt", shared);
    repo.write("notes.txt", notes);
    repo.commit("seed corpus layout", {.author_email = "alice@example.com", .timestamp = ts()});

    int conflicts = 0;
    for (int m = 0; m < merges; ++m) {
        const std::string tag = std::to_string(m);
        const bool hot = rng() % 100 < 10;  // quiet branch rewriting a busy file
        const int branch_commits =
            hot ? 1 + static_cast<int>(rng() % 2) : 1 + static_cast<int>(rng() % 4);
        const int edit_span = 1 + static_cast<int>(rng() % 3);  // lines per scratch file
        const bool second_author = rng() % 3 == 0;
        const double risk = hot ? 0.75
                                : 0.02 + 0.15 * (branch_commits - 1) + 0.03 * (edit_span - 1) +
                                      (second_author ? 0.04 : 0.0);
        const bool conflict = unit() < risk;
        const bool overlap = !conflict && !hot && unit() < 0.30;  // same file, far lines
        // Half the ordinary conflicts also brush a second common file on
        // mergeable lines, so the simultaneous-file count is graded rather
        // than binary.
        const bool wide = conflict && !hot && unit() < 0.5;
        const int target = 1 + static_cast<int>(rng() % kLines);
        const std::string lead = author();
        const std::string partner = authors[(rng() % 3 + 1 +
                                             (std::find(authors.begin(), authors.end(), lead) -
                                              authors.begin())) %
                                            authors.size()];

        repo.branch("t" + tag);
        for (int c = 0; c < branch_commits; ++c) {
            if (c == 0 && hot) {
                for (int row = 5; row <= 12; ++row)
                    rewrite_line(repo, "notes.txt", row, "hot " + tag + " row " +
                                                             std::to_string(row));
            } else if (c == 0 && (conflict || overlap)) {
                rewrite_line(repo, "shared.txt", target, "branch " + tag + " rework");
                if (wide) rewrite_line(repo, "notes.txt", 2, "branch " + tag + " note");
            } else {
                std::string body;
                for (int j = 0; j < edit_span; ++j)
                    body += "scratch " + tag + "." + std::to_string(c) + " line " +
                            std::to_string(j) + "\n";
                repo.write("side-" + tag + "-" + std::to_string(c) + ".txt", body);
            }
            const std::string& who = (second_author && c % 2 == 1) ? partner : lead;
            repo.commit(phrase(), {.author_email = who, .timestamp = ts()});
        }

        repo.checkout("main");
        if (hot) {
            rewrite_line(repo, "notes.txt", conflict ? 8 : 25, "main " + tag + " note");
        } else if (conflict) {
            rewrite_line(repo, "shared.txt", target, "main " + tag + " rework");
            if (wide) rewrite_line(repo, "notes.txt", 20, "main " + tag + " note");
        } else if (overlap) {
            const int far = ((target - 1 + kLines / 2) % kLines) + 1;
            rewrite_line(repo, "shared.txt", far, "main " + tag + " edit");
        } else {
            repo.write("main-" + tag + ".txt", "mainline " + tag + "\n");
        }
        repo.commit(phrase(), {.author_email = author(), .timestamp = ts()});
        if (rng() % 2 == 0) {
            repo.write("main-" + tag + "-extra.txt", "extra " + tag + "\n");
            repo.commit(phrase(), {.author_email = author(), .timestamp = ts()});
        }

        const auto merged = repo.merge("t" + tag, "merge topic " + tag,
                                       {.author_email = author(), .timestamp = ts()});
        conflicts += merged.conflicted ? 1 : 0;
    }

    // Two unmerged probe branches stay behind for the live-prediction check.
    repo.branch("warm-a");
    rewrite_line(repo, "shared.txt", 3, "probe a");
    repo.commit("probe change", {.author_email = "alice@example.com", .timestamp = ts()});
    repo.checkout("main");
    repo.branch("warm-b");
    rewrite_line(repo, "shared.txt", 40, "probe b");
    repo.commit("second probe", {.author_email = "bob@example.com", .timestamp = ts()});
    repo.checkout("main");
    return conflicts;
}

void c7_end_to_end(World& world) {
    const std::vector<std::pair<std::uint64_t, int>> plans = {{11, 110}, {22, 105}, {33, 100}};
    std::vector<std::pair<std::string, std::string>> rows;
    for (std::size_t i = 0; i < plans.size(); ++i) {
        FixtureRepo repo(world.root / ("corpus-" + std::to_string(i)));
        build_corpus_repo(repo, plans[i].first, plans[i].second);
        world.corpus_repos.push_back(repo.path());
        rows.push_back({"corpus/r" + std::to_string(i), repo.path().string()});
    }

    RunConfig cfg;
    cfg.workdir = world.root / "corpus-work";
    cfg.catalog = write_catalog(world.root / "corpus-cat", rows);
    cfg.jobs = 2;
    cfg.seed = 7;
    std::ostringstream out, err;
    require(cmd_mine(cfg, out, err) == kExitOk, "mine failed: " + err.str());

    const LabeledDataset ds = load_dataset(dataset_path(cfg));
    require(ds.records.size() >= 200,
            "only " + std::to_string(ds.records.size()) + " scenarios mined, need 200");
    require(ds.class_counts.conflicts >= 30 && ds.class_counts.cleans >= 30,
            "corpus class mix collapsed: " + std::to_string(ds.class_counts.conflicts) +
                " conflicts / " + std::to_string(ds.class_counts.cleans) + " cleans");

    const TrainingView view = training_view(ds);
    HyperParams best;  // the selected tuple: leaf 10, split 5, depth 7, 75 trees
    best.seed = 7;
    const int folds = 5;
    const auto rf = cross_validate({ClassifierKind::RandomForest, best}, view, folds, 7);
    const auto dt = cross_validate({ClassifierKind::DecisionTree, best}, view, folds, 7);
    const auto b2 = cross_validate({ClassifierKind::Baseline2, best}, view, folds, 7);

    for (const auto* rep : {&rf, &dt, &b2})
        require(rep->pooled_safe.f1 > rep->pooled_conflict.f1,
                rep->model_identity + ": safe f1 " + num(rep->pooled_safe.f1) +
                    " not above conflict f1 " + num(rep->pooled_conflict.f1));
    require(rf.pooled_conflict.f1 >= dt.pooled_conflict.f1,
            "rf conflict f1 " + num(rf.pooled_conflict.f1) + " below dt " +
                num(dt.pooled_conflict.f1));
    require(dt.pooled_conflict.f1 >= b2.pooled_conflict.f1,
            "dt conflict f1 " + num(dt.pooled_conflict.f1) + " below the set-1 stump " +
                num(b2.pooled_conflict.f1));

    // Stash a full-data forest for the latency criterion.
    world.corpus_workdir = cfg.workdir;
    world.corpus_model = cfg.workdir / "rf-model.json";
    save_model(world.corpus_model, fit_forest(view, best));
}

// --- criterion 8: live prediction stays under the latency budget ------------

void c8_prediction_latency(World& world) {
    require(!world.corpus_model.empty(), "needs the corpus from criterion 7");
    RunConfig cfg;
    cfg.workdir = world.corpus_workdir;
    cfg.seed = 3;

    std::vector<double> times_ms;
    for (int run = 0; run < 20; ++run) {
        std::ostringstream out, err;
        const auto t0 = std::chrono::steady_clock::now();
        const int code = cmd_predict(cfg, world.corpus_repos.front(), "warm-a", "warm-b",
                                     world.corpus_model, out, err);
        const auto t1 = std::chrono::steady_clock::now();
        require(code == kExitOk || code == kExitConflict, "predict failed: " + err.str());
        times_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    std::sort(times_ms.begin(), times_ms.end());
    const double median = (times_ms[9] + times_ms[10]) / 2.0;
    require(median < kLatencyBudgetMs,
            "median " + num(median) + "ms over the " + num(kLatencyBudgetMs) + "ms budget");
}

// --- criterion 9: the pipeline is byte-deterministic -------------------------

void c9_determinism(World& world) {
    FixtureRepo repo(world.root / "det-repo");
    mergecast::testing::build_standard_fixture(repo);
    const auto catalog =
        write_catalog(world.root / "det-cat", {{"det/std", repo.path().string()}});

    struct Artifacts {
        std::string dataset, meta, model, report;
    };
    const auto pipeline = [&](const std::string& tag) {
        RunConfig cfg;
        cfg.workdir = world.root / ("det-" + tag);
        cfg.catalog = catalog;
        cfg.jobs = 2;
        cfg.seed = 21;
        cfg.folds = 2;
        cfg.params.min_samples_leaf = 1;
        cfg.params.min_samples_split = 2;
        cfg.params.max_depth = 5;
        cfg.params.n_estimators = 15;
        std::ostringstream out, err;
        require(cmd_mine(cfg, out, err) == kExitOk, tag + " mine failed: " + err.str());
        const auto model = cfg.workdir / "model.json";
        require(cmd_train(cfg, "rf", model, out, err) == kExitOk,
                tag + " train failed: " + err.str());
        const auto report = cfg.workdir / "eval.json";
        require(cmd_evaluate(cfg, model, report, /*refit_cv=*/true, out, err) == kExitOk,
                tag + " evaluate failed: " + err.str());
        return Artifacts{slurp(dataset_path(cfg)), slurp(dataset_meta_path(cfg)), slurp(model),
                         slurp(report)};
    };

    const Artifacts a = pipeline("a");
    const Artifacts b = pipeline("b");
    require(a.dataset == b.dataset, "dataset bytes differ between identical runs");
    require(a.meta == b.meta, "dataset metadata differs between identical runs");
    require(a.model == b.model, "model bytes differ between identical runs");
    require(a.report == b.report, "report bytes differ between identical runs");
}

// --- harness -----------------------------------------------------------------

struct Criterion {
    int id;
    const char* title;
    double budget_s;
    std::function<void(World&)> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "per-class metrics match the worked example exactly", 1, c1_worked_example},
        {2, "stratified-random baseline obeys the prior law", 10, c2_baseline_prior_law},
        {3, "fixture mining reproduces labels and hand-computed features", 30,
         c3_fixture_ground_truth},
        {4, "spearman agrees with the brute-force oracle", 10, c4_spearman_oracle},
        {5, "tree fits match exhaustive split enumeration", 60, c5_cart_oracle},
        {6, "a lone informative set dominates importance and correlation", 30,
         c6_importance_pattern},
        {7, "end-to-end corpus run preserves the expected ordering", 900, c7_end_to_end},
        {8, "live prediction stays under the latency budget", 120, c8_prediction_latency},
        {9, "mine-train-evaluate is byte-deterministic", 300, c9_determinism},
    };

    World world;
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string error;
        try {
            c.run(world);
        } catch (const std::exception& e) {
            error = e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                                .count();
        if (error.empty() && secs >= c.budget_s)
            error = "took " + num(secs) + "s, budget " + num(c.budget_s) + "s";
        if (error.empty()) {
            std::printf("PASS  %d  %-60s  %7.2fs / %gs\n", c.id, c.title, secs, c.budget_s);
        } else {
            std::printf("FAIL  %d  %s: %s\n", c.id, c.title, error.c_str());
            ++failures;
        }
        std::fflush(stdout);
    }
    std::printf("%d/%d criteria passed\n", static_cast<int>(criteria.size()) - failures,
                static_cast<int>(criteria.size()));
    return failures == 0 ? 0 : 1;
}
