#include "mergecast/learner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mergecast/errors.hpp"
#include "mergecast/evaluator.hpp"
#include "mergecast/rng.hpp"

namespace mergecast {

using nlohmann::json;

namespace {

constexpr const char* kModelFormatVersion = "1";

void validate_params(const HyperParams& hp) {
    if (hp.min_samples_leaf < 1) throw TrainingError("min_samples_leaf must be at least 1");
    if (hp.min_samples_split < 2) throw TrainingError("min_samples_split must be at least 2");
    if (hp.max_depth < 1) throw TrainingError("max_depth must be at least 1");
    if (hp.n_estimators < 1) throw TrainingError("n_estimators must be at least 1");
    if (hp.feature_subset_size < 0) throw TrainingError("feature_subset_size cannot be negative");
}

void require_rows(const TrainingView& data) {
    if (data.x.empty()) throw TrainingError("empty dataset");
}

std::vector<std::size_t> all_features(std::size_t width) {
    std::vector<std::size_t> out(width);
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
}

struct TreeBuilder {
    const TrainingView& data;
    const HyperParams& hp;
    const std::vector<std::size_t>& allowed;
    std::size_t subset;       // < allowed.size() turns on per-node sampling
    std::mt19937_64* rng;
    std::vector<TreeNode> nodes;

    std::vector<std::size_t> node_features() {
        if (rng == nullptr || subset >= allowed.size()) return allowed;
        std::vector<std::size_t> pool(allowed);
        for (std::size_t i = 0; i < subset; ++i) {
            std::size_t j = i + rng_below(*rng, pool.size() - i);
            std::swap(pool[i], pool[j]);
        }
        pool.resize(subset);
        std::sort(pool.begin(), pool.end());
        return pool;
    }

    int build(const std::vector<std::size_t>& rows, int depth) {
        std::int64_t conflicts = 0, cleans = 0;
        for (auto r : rows) ++(data.y[r] == Outcome::Conflict ? conflicts : cleans);

        const int index = static_cast<int>(nodes.size());
        nodes.push_back({});
        nodes[index].conflicts = conflicts;
        nodes[index].cleans = cleans;

        const bool can_split = depth < hp.max_depth && conflicts != 0 && cleans != 0 &&
                               rows.size() >= static_cast<std::size_t>(hp.min_samples_split);
        if (!can_split) return index;

        auto split = best_split(data, rows, node_features(), hp);
        if (!split) return index;

        std::vector<std::size_t> left, right;
        for (auto r : rows)
            (data.x[r][split->feature] <= split->threshold ? left : right).push_back(r);

        nodes[index].feature = static_cast<int>(split->feature);
        nodes[index].threshold = split->threshold;
        nodes[index].left = build(left, depth + 1);
        nodes[index].right = build(right, depth + 1);
        return index;
    }
};

Outcome walk(const std::vector<TreeNode>& nodes, const std::vector<double>& x) {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
        const auto& nd = nodes[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(nd.feature)] <= nd.threshold
                                         ? nd.left
                                         : nd.right);
    }
    return nodes[i].conflicts > nodes[i].cleans ? Outcome::Conflict : Outcome::Clean;
}

}  // namespace

TrainingView training_view(const LabeledDataset& dataset) {
    if (dataset.records.empty()) throw TrainingError("empty dataset");
    TrainingView view;
    view.op = dataset.records.front().op;
    view.width = vector_width(view.op);
    view.schema_version = dataset.records.front().schema_version;
    view.x.reserve(dataset.records.size());
    view.y.reserve(dataset.records.size());
    for (const auto& rec : dataset.records) {
        if (rec.op != view.op)
            throw SchemaError("dataset mixes combination operators");
        if (rec.features.size() != view.width)
            throw SchemaError("record width does not match the operator");
        view.x.push_back(rec.features);
        view.y.push_back(rec.label);
    }
    return view;
}

TrainingView subset(const TrainingView& data, const std::vector<std::size_t>& rows) {
    TrainingView out;
    out.op = data.op;
    out.width = data.width;
    out.schema_version = data.schema_version;
    out.x.reserve(rows.size());
    out.y.reserve(rows.size());
    for (auto r : rows) {
        out.x.push_back(data.x[r]);
        out.y.push_back(data.y[r]);
    }
    return out;
}

double gini(std::int64_t conflicts, std::int64_t cleans) {
    const std::int64_t n = conflicts + cleans;
    if (n == 0) return 0.0;
    const double pc = static_cast<double>(conflicts) / static_cast<double>(n);
    const double pk = static_cast<double>(cleans) / static_cast<double>(n);
    return 1.0 - (pc * pc + pk * pk);
}

std::optional<SplitChoice> best_split(const TrainingView& data,
                                      const std::vector<std::size_t>& rows,
                                      const std::vector<std::size_t>& candidate_features,
                                      const HyperParams& hp) {
    const std::int64_t n = static_cast<std::int64_t>(rows.size());
    if (n < hp.min_samples_split) return std::nullopt;

    std::int64_t pc = 0, pk = 0;
    for (auto r : rows) ++(data.y[r] == Outcome::Conflict ? pc : pk);
    const double parent = gini(pc, pk);

    std::vector<std::size_t> feats(candidate_features);
    std::sort(feats.begin(), feats.end());
    feats.erase(std::unique(feats.begin(), feats.end()), feats.end());

    std::optional<SplitChoice> best;
    double best_gain = 0.0;
    std::vector<std::pair<double, Outcome>> col;
    col.reserve(rows.size());
    for (auto f : feats) {
        col.clear();
        for (auto r : rows) col.emplace_back(data.x[r][f], data.y[r]);
        std::sort(col.begin(), col.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::int64_t lc = 0, lk = 0;
        for (std::size_t i = 0; i + 1 < col.size(); ++i) {
            ++(col[i].second == Outcome::Conflict ? lc : lk);
            if (col[i].first == col[i + 1].first) continue;
            const std::int64_t ln = lc + lk;
            const std::int64_t rn = n - ln;
            if (ln < hp.min_samples_leaf || rn < hp.min_samples_leaf) continue;
            const double nn = static_cast<double>(n);
            const double gain = parent - ((static_cast<double>(ln) / nn) * gini(lc, lk) +
                                          (static_cast<double>(rn) / nn) * gini(pc - lc, pk - lk));
            // iteration runs feature- then threshold-ascending, so a strict
            // comparison implements the tie rule
            if (gain > best_gain) {
                best_gain = gain;
                best = SplitChoice{f, (col[i].first + col[i + 1].first) / 2.0, gain};
            }
        }
    }
    return best;
}

TreeModel fit_tree(const TrainingView& data, const HyperParams& hp, const FeatureMask& mask) {
    require_rows(data);
    validate_params(hp);

    std::vector<std::size_t> allowed;
    if (mask.empty()) {
        allowed = all_features(data.width);
    } else {
        allowed = mask;
        std::sort(allowed.begin(), allowed.end());
        allowed.erase(std::unique(allowed.begin(), allowed.end()), allowed.end());
        if (allowed.back() >= data.width) throw SchemaError("feature mask index out of range");
    }

    TreeBuilder builder{data, hp, allowed, allowed.size(), nullptr, {}};
    std::vector<std::size_t> rows(data.x.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    builder.build(rows, 0);

    TreeModel model;
    model.nodes = std::move(builder.nodes);
    model.params = hp;
    model.op = data.op;
    model.width = data.width;
    model.schema_version = data.schema_version;
    return model;
}

ForestModel fit_forest(const TrainingView& data, const HyperParams& hp) {
    require_rows(data);
    validate_params(hp);

    const std::size_t d = data.width;
    const std::vector<std::size_t> allowed = all_features(d);
    std::size_t subset_size =
        hp.feature_subset_size > 0
            ? std::min(static_cast<std::size_t>(hp.feature_subset_size), d)
            : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
    if (subset_size == 0) subset_size = 1;

    ForestModel forest;
    forest.params = hp;
    forest.op = data.op;
    forest.width = d;
    forest.schema_version = data.schema_version;

    const std::size_t n = data.x.size();
    for (int t = 0; t < hp.n_estimators; ++t) {
        std::mt19937_64 rng(mix_seed(hp.seed, static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> rows(n);
        if (hp.bootstrap) {
            for (auto& r : rows) r = rng_below(rng, n);
        } else {
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        TreeBuilder builder{data, hp, allowed, subset_size, &rng, {}};
        builder.build(rows, 0);

        TreeModel tree;
        tree.nodes = std::move(builder.nodes);
        tree.params = hp;
        tree.op = data.op;
        tree.width = d;
        tree.schema_version = data.schema_version;
        forest.trees.push_back(std::move(tree));
    }
    return forest;
}

Baseline1Model fit_baseline1(const TrainingView& data) {
    require_rows(data);
    std::int64_t conflicts = 0;
    for (auto label : data.y)
        if (label == Outcome::Conflict) ++conflicts;
    Baseline1Model model;
    model.prior = static_cast<double>(conflicts) / static_cast<double>(data.y.size());
    model.op = data.op;
    model.width = data.width;
    model.schema_version = data.schema_version;
    return model;
}

TreeModel fit_baseline2(const TrainingView& data, const HyperParams& hp) {
    return fit_tree(data, hp, FeatureMask{0});
}

Outcome predict(const TreeModel& model, const std::vector<double>& x) {
    if (!model.trained()) throw ModelStateError("tree has not been trained");
    if (x.size() != model.width) throw SchemaError("feature vector width does not match the model");
    return walk(model.nodes, x);
}

ForestVote predict(const ForestModel& model, const std::vector<double>& x) {
    if (!model.trained()) throw ModelStateError("forest has not been trained");
    if (x.size() != model.width) throw SchemaError("feature vector width does not match the model");
    std::size_t conflict_votes = 0;
    for (const auto& tree : model.trees)
        if (walk(tree.nodes, x) == Outcome::Conflict) ++conflict_votes;
    ForestVote vote;
    vote.conflict_fraction =
        static_cast<double>(conflict_votes) / static_cast<double>(model.trees.size());
    vote.label = 2 * conflict_votes > model.trees.size() ? Outcome::Conflict : Outcome::Clean;
    return vote;
}

Outcome predict_baseline1(const Baseline1Model& model, std::mt19937_64& rng) {
    return rng_unit(rng) < model.prior ? Outcome::Conflict : Outcome::Clean;
}

const char* to_string(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::DecisionTree: return "dt";
        case ClassifierKind::RandomForest: return "rf";
        case ClassifierKind::Baseline1: return "baseline1";
        case ClassifierKind::Baseline2: return "baseline2";
    }
    return "unknown";
}

ClassifierKind classifier_from_string(const std::string& name) {
    if (name == "dt") return ClassifierKind::DecisionTree;
    if (name == "rf") return ClassifierKind::RandomForest;
    if (name == "baseline1") return ClassifierKind::Baseline1;
    if (name == "baseline2") return ClassifierKind::Baseline2;
    throw ConfigError("unknown classifier '" + name + "' (expected dt, rf, baseline1, baseline2)");
}

std::string describe(const ModelSpec& spec) {
    std::ostringstream out;
    out << to_string(spec.kind);
    switch (spec.kind) {
        case ClassifierKind::Baseline1:
            break;
        case ClassifierKind::RandomForest:
            out << "(leaf=" << spec.params.min_samples_leaf
                << ",split=" << spec.params.min_samples_split
                << ",depth=" << spec.params.max_depth << ",trees=" << spec.params.n_estimators
                << ")";
            break;
        default:
            out << "(leaf=" << spec.params.min_samples_leaf
                << ",split=" << spec.params.min_samples_split
                << ",depth=" << spec.params.max_depth << ")";
            break;
    }
    return out.str();
}

std::vector<Outcome> fit_predict(const ModelSpec& spec, const TrainingView& train,
                                 const std::vector<std::vector<double>>& test,
                                 std::uint64_t seed) {
    std::vector<Outcome> out;
    out.reserve(test.size());
    switch (spec.kind) {
        case ClassifierKind::DecisionTree: {
            auto model = fit_tree(train, spec.params);
            for (const auto& x : test) out.push_back(predict(model, x));
            break;
        }
        case ClassifierKind::Baseline2: {
            auto model = fit_baseline2(train, spec.params);
            for (const auto& x : test) out.push_back(predict(model, x));
            break;
        }
        case ClassifierKind::RandomForest: {
            HyperParams hp = spec.params;
            hp.seed = seed;
            auto model = fit_forest(train, hp);
            for (const auto& x : test) out.push_back(predict(model, x).label);
            break;
        }
        case ClassifierKind::Baseline1: {
            auto model = fit_baseline1(train);
            std::mt19937_64 rng(seed);
            for (std::size_t i = 0; i < test.size(); ++i)
                out.push_back(predict_baseline1(model, rng));
            break;
        }
    }
    return out;
}

HyperGrid default_grid() {
    HyperGrid grid;
    grid.min_samples_leaf = {2, 5, 10, 20, 35, 50};
    grid.min_samples_split = {2, 3, 5, 10, 20, 35, 50, 75};
    grid.max_depth = {1, 3, 5, 7, 11};
    grid.n_estimators = {1, 3, 10, 50, 75, 100, 200, 300};
    return grid;
}

GridSearchResult grid_search(const TrainingView& data, ClassifierKind kind,
                             const HyperGrid& grid, int k, std::uint64_t seed) {
    HyperGrid axes = grid;
    std::sort(axes.min_samples_leaf.begin(), axes.min_samples_leaf.end());
    std::sort(axes.min_samples_split.begin(), axes.min_samples_split.end());
    std::sort(axes.max_depth.begin(), axes.max_depth.end());
    std::sort(axes.n_estimators.begin(), axes.n_estimators.end());

    const bool wants_estimators = kind == ClassifierKind::RandomForest;
    std::vector<int> estimators = wants_estimators ? axes.n_estimators : std::vector<int>{1};
    if (axes.min_samples_leaf.empty() || axes.min_samples_split.empty() ||
        axes.max_depth.empty() || estimators.empty())
        throw ConfigError("grid search axis is empty");

    const auto folds = stratified_folds(data.y, k, seed);
    const std::size_t kk = folds.size();

    std::vector<TrainingView> train_views(kk);
    std::vector<std::vector<std::vector<double>>> test_x(kk);
    std::vector<std::vector<Outcome>> test_y(kk);
    for (std::size_t f = 0; f < kk; ++f) {
        std::vector<char> held(data.y.size(), 0);
        for (auto idx : folds[f]) held[idx] = 1;
        std::vector<std::size_t> train_rows;
        for (std::size_t i = 0; i < data.y.size(); ++i)
            if (!held[i]) train_rows.push_back(i);
        train_views[f] = subset(data, train_rows);
        for (auto idx : folds[f]) {
            test_x[f].push_back(data.x[idx]);
            test_y[f].push_back(data.y[idx]);
        }
    }

    GridSearchResult result;
    result.objective = "mean fold conflict f1";
    bool have_best = false;
    GridCell best_cell;

    for (int est : estimators) {
        for (int depth : axes.max_depth) {
            for (int split : axes.min_samples_split) {
                for (int leaf : axes.min_samples_leaf) {
                    HyperParams hp;
                    hp.min_samples_leaf = leaf;
                    hp.min_samples_split = split;
                    hp.max_depth = depth;
                    hp.n_estimators = est;
                    hp.seed = seed;

                    std::vector<double> fold_f1(kk, 0.0);
                    for (std::size_t f = 0; f < kk; ++f) {
                        auto pred = fit_predict(ModelSpec{kind, hp}, train_views[f], test_x[f],
                                                mix_seed(seed, f));
                        fold_f1[f] = prf(confusion(test_y[f], pred, Outcome::Conflict)).f1;
                    }

                    double mean = 0.0;
                    for (double v : fold_f1) mean += v;
                    mean /= static_cast<double>(kk);
                    double ss = 0.0;
                    for (double v : fold_f1) ss += (v - mean) * (v - mean);
                    const double sd =
                        kk > 1 ? std::sqrt(ss / static_cast<double>(kk - 1)) : 0.0;

                    GridCell cell{hp, mean, sd};
                    result.table.push_back(cell);

                    const bool better =
                        !have_best || cell.mean_conflict_f1 > best_cell.mean_conflict_f1 ||
                        (cell.mean_conflict_f1 == best_cell.mean_conflict_f1 &&
                         (hp.n_estimators < best_cell.params.n_estimators ||
                          (hp.n_estimators == best_cell.params.n_estimators &&
                           hp.max_depth < best_cell.params.max_depth)));
                    if (better) {
                        best_cell = cell;
                        have_best = true;
                    }
                }
            }
        }
    }

    result.best = best_cell.params;
    return result;
}

namespace {

std::string double_text(double v) { return json(v).dump(); }

double parse_double_text(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

json hp_to_json(const HyperParams& hp) {
    return json{{"min_samples_leaf", hp.min_samples_leaf},
                {"min_samples_split", hp.min_samples_split},
                {"max_depth", hp.max_depth},
                {"n_estimators", hp.n_estimators},
                {"feature_subset_size", hp.feature_subset_size},
                {"seed", hp.seed},
                {"bootstrap", hp.bootstrap}};
}

HyperParams hp_from_json(const json& j) {
    HyperParams hp;
    hp.min_samples_leaf = j.at("min_samples_leaf").get<int>();
    hp.min_samples_split = j.at("min_samples_split").get<int>();
    hp.max_depth = j.at("max_depth").get<int>();
    hp.n_estimators = j.at("n_estimators").get<int>();
    hp.feature_subset_size = j.at("feature_subset_size").get<int>();
    hp.seed = j.at("seed").get<std::uint64_t>();
    hp.bootstrap = j.at("bootstrap").get<bool>();
    return hp;
}

json nodes_to_json(const std::vector<TreeNode>& nodes) {
    json arr = json::array();
    for (const auto& nd : nodes) {
        arr.push_back(json{{"feature", nd.feature},
                           {"threshold", double_text(nd.threshold)},
                           {"conflicts", nd.conflicts},
                           {"cleans", nd.cleans},
                           {"left", nd.left},
                           {"right", nd.right}});
    }
    return arr;
}

std::vector<TreeNode> nodes_from_json(const json& arr, std::size_t width) {
    std::vector<TreeNode> nodes;
    for (const auto& j : arr) {
        TreeNode nd;
        nd.feature = j.at("feature").get<int>();
        nd.threshold = parse_double_text(j.at("threshold").get<std::string>());
        nd.conflicts = j.at("conflicts").get<std::int64_t>();
        nd.cleans = j.at("cleans").get<std::int64_t>();
        nd.left = j.at("left").get<int>();
        nd.right = j.at("right").get<int>();
        nodes.push_back(nd);
    }
    const int count = static_cast<int>(nodes.size());
    if (nodes.empty()) throw SchemaError("model holds an empty tree");
    for (const auto& nd : nodes) {
        if (nd.feature >= 0 &&
            (static_cast<std::size_t>(nd.feature) >= width || nd.left < 0 || nd.right < 0 ||
             nd.left >= count || nd.right >= count))
            throw SchemaError("model holds a malformed tree node");
    }
    return nodes;
}

}  // namespace

ClassifierKind model_kind(const Model& model) {
    if (std::holds_alternative<ForestModel>(model)) return ClassifierKind::RandomForest;
    if (std::holds_alternative<Baseline1Model>(model)) return ClassifierKind::Baseline1;
    return ClassifierKind::DecisionTree;
}

CombineOp model_op(const Model& model) {
    return std::visit([](const auto& m) { return m.op; }, model);
}

std::size_t model_width(const Model& model) {
    return std::visit([](const auto& m) { return m.width; }, model);
}

void save_model(const std::filesystem::path& path, const Model& model) {
    json doc;
    doc["format_version"] = kModelFormatVersion;
    if (const auto* tree = std::get_if<TreeModel>(&model)) {
        if (!tree->trained()) throw ModelStateError("refusing to save an untrained tree");
        doc["kind"] = "tree";
        doc["operator"] = to_string(tree->op);
        doc["width"] = tree->width;
        doc["schema_version"] = tree->schema_version;
        doc["hyperparams"] = hp_to_json(tree->params);
        doc["nodes"] = nodes_to_json(tree->nodes);
    } else if (const auto* forest = std::get_if<ForestModel>(&model)) {
        if (!forest->trained()) throw ModelStateError("refusing to save an untrained forest");
        doc["kind"] = "forest";
        doc["operator"] = to_string(forest->op);
        doc["width"] = forest->width;
        doc["schema_version"] = forest->schema_version;
        doc["hyperparams"] = hp_to_json(forest->params);
        json trees = json::array();
        for (const auto& tree : forest->trees) trees.push_back(nodes_to_json(tree.nodes));
        doc["trees"] = std::move(trees);
    } else {
        const auto& b1 = std::get<Baseline1Model>(model);
        doc["kind"] = "baseline1";
        doc["operator"] = to_string(b1.op);
        doc["width"] = b1.width;
        doc["schema_version"] = b1.schema_version;
        doc["prior"] = double_text(b1.prior);
    }

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw EnvironmentError("cannot write model file " + path.string());
    out << doc.dump(2) << '\n';
    out.flush();
    if (!out) throw EnvironmentError("short write on model file " + path.string());
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open model file " + path.string(), 1);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw LoadError("model file is not valid JSON", 1);

    try {
        if (doc.at("format_version").get<std::string>() != kModelFormatVersion)
            throw SchemaError("unsupported model format version");
        const auto kind = doc.at("kind").get<std::string>();
        const auto op = combine_op_from_string(doc.at("operator").get<std::string>());
        const auto width = doc.at("width").get<std::size_t>();
        const auto schema_version = doc.at("schema_version").get<std::string>();

        if (kind == "tree") {
            TreeModel model;
            model.params = hp_from_json(doc.at("hyperparams"));
            model.op = op;
            model.width = width;
            model.schema_version = schema_version;
            model.nodes = nodes_from_json(doc.at("nodes"), width);
            return model;
        }
        if (kind == "forest") {
            ForestModel model;
            model.params = hp_from_json(doc.at("hyperparams"));
            model.op = op;
            model.width = width;
            model.schema_version = schema_version;
            for (const auto& tree_nodes : doc.at("trees")) {
                TreeModel tree;
                tree.params = model.params;
                tree.op = op;
                tree.width = width;
                tree.schema_version = schema_version;
                tree.nodes = nodes_from_json(tree_nodes, width);
                model.trees.push_back(std::move(tree));
            }
            if (model.trees.empty()) throw SchemaError("model holds an empty forest");
            return model;
        }
        if (kind == "baseline1") {
            Baseline1Model model;
            model.op = op;
            model.width = width;
            model.schema_version = schema_version;
            model.prior = parse_double_text(doc.at("prior").get<std::string>());
            return model;
        }
        throw SchemaError("unknown model kind '" + kind + "'");
    } catch (const json::exception& e) {
        throw SchemaError(std::string("model file is missing fields: ") + e.what());
    }
}

}  // namespace mergecast
