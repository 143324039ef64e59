#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "mergecast/dataset.hpp"

namespace mergecast {

// CART decision tree, bagged random forest, and the two reference baselines
// (stratified random, FS1-only tree), all trained from scratch. Every fit is
// a pure function of (sample order, hyperparameters, seed).

struct HyperParams {
    int min_samples_leaf = 10;
    int min_samples_split = 5;
    int max_depth = 7;
    int n_estimators = 75;     // forests only
    int feature_subset_size = 0;  // per-node candidates; 0 means ceil(sqrt(d))
    std::uint64_t seed = 0;
    bool bootstrap = true;     // test hook; off trains every tree on the full set
};

// feature == -1 marks a leaf. Counts are the training samples that reached
// the node, kept on internal nodes too so importances can be recomputed from
// a stored model.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    std::int64_t conflicts = 0;
    std::int64_t cleans = 0;
    int left = -1;
    int right = -1;
};

struct TreeModel {
    std::vector<TreeNode> nodes;  // nodes[0] is the root; empty means untrained
    HyperParams params;
    CombineOp op = CombineOp::Norm1;
    std::size_t width = 0;
    std::string schema_version = kFeatureSchemaVersion;

    bool trained() const { return !nodes.empty(); }
};

struct ForestModel {
    std::vector<TreeModel> trees;
    HyperParams params;
    CombineOp op = CombineOp::Norm1;
    std::size_t width = 0;
    std::string schema_version = kFeatureSchemaVersion;

    bool trained() const { return !trees.empty(); }
};

struct Baseline1Model {
    double prior = 0.0;  // conflict fraction seen at fit time
    CombineOp op = CombineOp::Norm1;
    std::size_t width = 0;
    std::string schema_version = kFeatureSchemaVersion;
};

// Flat row-major training matrix pulled out of a dataset.
struct TrainingView {
    std::vector<std::vector<double>> x;
    std::vector<Outcome> y;
    CombineOp op = CombineOp::Norm1;
    std::size_t width = 0;
    std::string schema_version = kFeatureSchemaVersion;
};

TrainingView training_view(const LabeledDataset& dataset);
TrainingView subset(const TrainingView& data, const std::vector<std::size_t>& rows);

// 1 - sum of squared class shares; an empty node is pure.
double gini(std::int64_t conflicts, std::int64_t cleans);

struct SplitChoice {
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

// Best admissible split over `rows` restricted to `candidate_features`.
// Thresholds are midpoints between adjacent distinct observed values; both
// children must keep min_samples_leaf samples. Ties go to the lower feature
// index, then the lower threshold. nullopt when no split has positive gain.
std::optional<SplitChoice> best_split(const TrainingView& data,
                                      const std::vector<std::size_t>& rows,
                                      const std::vector<std::size_t>& candidate_features,
                                      const HyperParams& hp);

// Empty mask means all features. Baseline #2 passes {0}.
using FeatureMask = std::vector<std::size_t>;

TreeModel fit_tree(const TrainingView& data, const HyperParams& hp,
                   const FeatureMask& mask = {});
ForestModel fit_forest(const TrainingView& data, const HyperParams& hp);
Baseline1Model fit_baseline1(const TrainingView& data);
TreeModel fit_baseline2(const TrainingView& data, const HyperParams& hp);

Outcome predict(const TreeModel& model, const std::vector<double>& x);

struct ForestVote {
    Outcome label = Outcome::Clean;
    double conflict_fraction = 0.0;  // share of trees voting Conflict
};

// Majority vote; an exact tie is Clean.
ForestVote predict(const ForestModel& model, const std::vector<double>& x);

// Conflict with probability model.prior, independent per call.
Outcome predict_baseline1(const Baseline1Model& model, std::mt19937_64& rng);

enum class ClassifierKind { DecisionTree, RandomForest, Baseline1, Baseline2 };

const char* to_string(ClassifierKind kind);
ClassifierKind classifier_from_string(const std::string& name);  // ConfigError on junk

struct ModelSpec {
    ClassifierKind kind = ClassifierKind::RandomForest;
    HyperParams params;
};

// Readable one-liner like "rf(leaf=10,split=5,depth=7,trees=75)".
std::string describe(const ModelSpec& spec);

// Train spec on `train` and predict every row of `test`. Baseline #1 draws
// from a fresh rng seeded with `seed`; forests train with that seed too.
std::vector<Outcome> fit_predict(const ModelSpec& spec, const TrainingView& train,
                                 const std::vector<std::vector<double>>& test,
                                 std::uint64_t seed);

struct HyperGrid {
    std::vector<int> min_samples_leaf;
    std::vector<int> min_samples_split;
    std::vector<int> max_depth;
    std::vector<int> n_estimators;
};

// The stock candidate sets the grid search sweeps by default.
HyperGrid default_grid();

struct GridCell {
    HyperParams params;
    double mean_conflict_f1 = 0.0;
    double sd_conflict_f1 = 0.0;
};

struct GridSearchResult {
    HyperParams best;
    std::vector<GridCell> table;  // row-major: estimators, depth, split, leaf
    std::string objective;        // selection rule, recorded alongside the table
};

// Exhaustive k-fold sweep; selection by mean per-fold conflict f1, ties to
// the smaller model (fewer estimators, then shallower, then first cell in
// table order). Tree kinds ignore the estimator axis.
GridSearchResult grid_search(const TrainingView& data, ClassifierKind kind,
                             const HyperGrid& grid, int k, std::uint64_t seed);

using Model = std::variant<TreeModel, ForestModel, Baseline1Model>;

ClassifierKind model_kind(const Model& model);
CombineOp model_op(const Model& model);
std::size_t model_width(const Model& model);

// Versioned JSON on disk; thresholds travel as decimal strings that parse
// back to the identical double. Wrong format or schema version raises
// SchemaError, unreadable files LoadError.
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

}  // namespace mergecast
