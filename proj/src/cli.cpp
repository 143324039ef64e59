#include "mergecast/cli.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <variant>

#include <json.hpp>

#include "mergecast/analytics.hpp"
#include "mergecast/dataset.hpp"
#include "mergecast/errors.hpp"
#include "mergecast/evaluator.hpp"
#include "mergecast/features.hpp"
#include "mergecast/git_gateway.hpp"
#include "mergecast/learner.hpp"
#include "mergecast/merge_miner.hpp"
#include "mergecast/repo_catalog.hpp"

namespace mergecast {

namespace {

int guard(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const EnvironmentError& e) {
        err << "error: " << e.what() << '\n';
        return kExitEnvironment;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw EnvironmentError("cannot write " + path.string());
    out << text << '\n';
    out.flush();
    if (!out) throw EnvironmentError("cannot write " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot read " + path.string(), 1);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void accumulate(MiningStats& total, const MiningStats& part) {
    total.merges_found += part.merges_found;
    total.octopus_skipped += part.octopus_skipped;
    total.no_base_skipped += part.no_base_skipped;
    total.replay_errors += part.replay_errors;
    total.conflicts += part.conflicts;
    total.cleans += part.cleans;
}

std::string resolve_ref(const std::filesystem::path& repo, const std::string& ref) {
    const CommandResult r = run_git(repo, {"rev-parse", "--verify", ref + "^{commit}"});
    if (!r.ok()) {
        throw InputError("cannot resolve '" + ref + "' in " + repo.string());
    }
    std::string id = r.out;
    while (!id.empty() && (id.back() == '\n' || id.back() == '\r')) id.pop_back();
    return id;
}

std::string dataset_identity(const TrainingView& data) {
    std::uint64_t conflicts = 0;
    for (const Outcome y : data.y) {
        if (y == Outcome::Conflict) ++conflicts;
    }
    std::ostringstream id;
    id << "n=" << data.y.size() << ",conflicts=" << conflicts << ",op=" << to_string(data.op);
    return id.str();
}

HyperParams stored_params(const Model& model) {
    if (const auto* tree = std::get_if<TreeModel>(&model)) return tree->params;
    if (const auto* forest = std::get_if<ForestModel>(&model)) return forest->params;
    return HyperParams{};
}

Outcome predict_row(const Model& model, const std::vector<double>& x, std::mt19937_64& rng,
                    double* fraction = nullptr) {
    if (const auto* tree = std::get_if<TreeModel>(&model)) {
        const Outcome verdict = predict(*tree, x);
        if (fraction != nullptr) *fraction = verdict == Outcome::Conflict ? 1.0 : 0.0;
        return verdict;
    }
    if (const auto* forest = std::get_if<ForestModel>(&model)) {
        const ForestVote vote = predict(*forest, x);
        if (fraction != nullptr) *fraction = vote.conflict_fraction;
        return vote.label;
    }
    const auto& baseline = std::get<Baseline1Model>(model);
    if (fraction != nullptr) *fraction = baseline.prior;
    return predict_baseline1(baseline, rng);
}

}  // namespace

int cmd_mine(const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guard(err, [&]() -> int {
        if (config.catalog.empty()) {
            throw EnvironmentError("no catalog configured (pass --catalog or set it in the config)");
        }
        std::vector<RepoSpec> specs;
        try {
            specs = load_catalog(config.catalog);
        } catch (const CatalogError& e) {
            throw EnvironmentError(e.what());
        }
        git_version();  // fails early when git is missing
        std::error_code ec;
        std::filesystem::create_directories(config.workdir, ec);
        if (ec) {
            throw EnvironmentError("cannot create workdir " + config.workdir.string() + ": " +
                                   ec.message());
        }

        const std::filesystem::path ds_path = dataset_path(config);
        std::set<std::string> seen;
        if (std::filesystem::exists(ds_path)) {
            for (const DatasetRecord& rec : load_dataset(ds_path).records) {
                seen.insert(scenario_key(rec.repo, rec.merge_commit));
            }
        }

        MiningStats totals;
        std::uint64_t written = 0;
        std::uint64_t duplicates = 0;
        std::uint64_t failures = 0;
        {
            DatasetWriter writer(ds_path, config.op);
            for (const RepoSpec& spec : specs) {
                if (spec.skip) {
                    out << spec.name << ": skipped by catalog\n";
                    continue;
                }
                if (config.language && spec.language != *config.language) {
                    out << spec.name << ": skipped (language " << spec.language << ")\n";
                    continue;
                }
                const LocalRepo repo = acquire(spec, config.workdir, config.size_cap_bytes);
                if (repo.status != RepoStatus::Ready) {
                    ++failures;
                    err << spec.name << ": " << to_string(repo.status)
                        << (repo.detail.empty() ? "" : " (" + repo.detail + ")") << '\n';
                    continue;
                }
                try {
                    const auto [records, stats] = mine_repository(
                        repo, config.merge_limit, config.jobs, config.workdir / "scratch");
                    accumulate(totals, stats);
                    std::uint64_t repo_new = 0;
                    for (const MinedRecord& mined : records) {
                        if (mined.label.outcome == Outcome::ReplayError) continue;
                        const std::string key =
                            scenario_key(mined.scenario.repo, mined.scenario.merge_commit);
                        if (!seen.insert(key).second) {
                            ++duplicates;
                            continue;
                        }
                        const FeatureVector fv = extract_feature_vector(
                            repo.path, mined.scenario, config.op, mined.label.outcome);
                        DatasetRecord record;
                        record.repo = mined.scenario.repo;
                        record.merge_commit = mined.scenario.merge_commit;
                        record.language = spec.language;
                        record.op = config.op;
                        record.features = fv.values;
                        record.label = mined.label.outcome;
                        record.git_version = git_version();
                        record.schema_version = kFeatureSchemaVersion;
                        writer.append(record);
                        ++repo_new;
                        ++written;
                    }
                    out << spec.name << ": " << stats.conflicts << " conflicts, " << stats.cleans
                        << " cleans, " << repo_new << " new records\n";
                } catch (const EnvironmentError&) {
                    throw;  // a broken workdir poisons the whole batch
                } catch (const Error& e) {
                    ++failures;
                    err << spec.name << ": " << e.what() << '\n';
                }
            }
        }

        DatasetMeta meta;
        meta.schema_version = kFeatureSchemaVersion;
        meta.op = to_string(config.op);
        meta.git_version = git_version();
        meta.mining = totals;
        write_dataset_meta(dataset_meta_path(config), meta);

        // Zero appends leave no file behind, which still counts as an empty dataset.
        LabeledDataset final_state;
        if (std::filesystem::exists(ds_path)) final_state = load_dataset(ds_path);
        out << "dataset: " << final_state.records.size() << " records ("
            << final_state.class_counts.conflicts << " conflicts, "
            << final_state.class_counts.cleans << " cleans), " << written << " new, " << duplicates
            << " already present, " << failures << " repositories failed\n";
        if (final_state.records.empty()) {
            err << "error: no merge scenarios mined\n";
            return kExitFailure;
        }
        return kExitOk;
    });
}

int cmd_extract(const RunConfig& config, const std::filesystem::path& csv_out, std::ostream& out,
                std::ostream& err) {
    return guard(err, [&]() -> int {
        const LabeledDataset data = load_dataset(dataset_path(config), config.language);
        if (data.records.empty()) {
            err << "error: dataset is empty\n";
            return kExitFailure;
        }
        export_csv(data, data.records.front().op, csv_out);
        out << "wrote " << data.records.size() << " rows to " << csv_out.string() << '\n';
        return kExitOk;
    });
}

int cmd_train(const RunConfig& config, const std::string& classifier,
              const std::filesystem::path& model_out, std::ostream& out, std::ostream& err) {
    return guard(err, [&]() -> int {
        const ClassifierKind kind = classifier_from_string(classifier);
        const LabeledDataset dataset = load_dataset(dataset_path(config), config.language);
        const TrainingView data = training_view(dataset);

        HyperParams params = config.params;
        params.seed = config.seed;
        if (config.use_grid && kind != ClassifierKind::Baseline1) {
            const GridSearchResult search =
                grid_search(data, kind, default_grid(), config.folds, config.seed);
            params = search.best;
            params.seed = config.seed;
            out << "grid search over " << search.table.size() << " cells (" << search.objective
                << "): " << describe({kind, params}) << '\n';
        }

        const ModelSpec spec{kind, params};
        const EvaluationReport report = cross_validate(spec, data, config.folds, config.seed);

        Model model;
        switch (kind) {
            case ClassifierKind::DecisionTree: model = fit_tree(data, params); break;
            case ClassifierKind::RandomForest: model = fit_forest(data, params); break;
            case ClassifierKind::Baseline1: model = fit_baseline1(data); break;
            case ClassifierKind::Baseline2: model = fit_baseline2(data, params); break;
        }
        save_model(model_out, model);
        std::filesystem::path report_out = model_out;
        report_out.replace_extension(".report.json");
        write_text_file(report_out, render_report_json(report));

        out << render_report_table({report});
        out << "model: " << model_out.string() << "\nreport: " << report_out.string() << '\n';
        return kExitOk;
    });
}

int cmd_evaluate(const RunConfig& config, const std::filesystem::path& model_path,
                 const std::filesystem::path& report_out, bool refit_cv, std::ostream& out,
                 std::ostream& err) {
    return guard(err, [&]() -> int {
        const Model model = load_model(model_path);
        const LabeledDataset dataset = load_dataset(dataset_path(config), config.language);
        const TrainingView data = training_view(dataset);
        if (model_op(model) != data.op || model_width(model) != data.width) {
            throw SchemaError(std::string("model was trained under ") +
                              to_string(model_op(model)) + " (width " +
                              std::to_string(model_width(model)) + ") but the dataset uses " +
                              to_string(data.op) + " (width " + std::to_string(data.width) + ")");
        }

        EvaluationReport report;
        if (refit_cv) {
            const ModelSpec spec{model_kind(model), stored_params(model)};
            report = cross_validate(spec, data, config.folds, config.seed);
        } else {
            std::mt19937_64 rng(config.seed);
            std::vector<Outcome> pred;
            pred.reserve(data.x.size());
            for (const std::vector<double>& row : data.x) {
                pred.push_back(predict_row(model, row, rng));
            }
            report = evaluate_predictions(
                data.y, pred, describe({model_kind(model), stored_params(model)}),
                dataset_identity(data));
        }
        write_text_file(report_out, render_report_json(report));
        out << render_report_table({report});
        return kExitOk;
    });
}

int cmd_correlate(const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guard(err, [&]() -> int {
        const LabeledDataset dataset = load_dataset(dataset_path(config), config.language);
        const CorrelationReport correlation = correlation_report(dataset);

        const TrainingView data = training_view(dataset);
        HyperParams params = config.params;
        params.seed = config.seed;
        const TreeModel tree = fit_tree(data, params);
        const std::vector<FeatureInfo>& schema = feature_schema(data.op);
        const ImportanceReport importance = feature_importance(tree, schema);

        write_text_file(config.workdir / "correlation.json", render_correlation_json(correlation));
        write_text_file(config.workdir / "importance.json",
                        render_importance_json(importance, schema));
        out << render_correlation_table(correlation) << '\n' << render_importance_table(importance);
        return kExitOk;
    });
}

int cmd_predict(const RunConfig& config, const std::filesystem::path& repo_path,
                const std::string& ref1, const std::string& ref2,
                const std::optional<std::filesystem::path>& model_path, std::ostream& out,
                std::ostream& err) {
    return guard(err, [&]() -> int {
        const auto started = std::chrono::steady_clock::now();
        std::filesystem::path chosen;
        if (model_path) {
            chosen = *model_path;
        } else if (config.language) {
            chosen = language_model_path(config, *config.language);
        } else {
            throw ConfigError("no model: pass --model or set a language to route by");
        }
        const Model model = load_model(chosen);

        const std::string head1 = resolve_ref(repo_path, ref1);
        const std::string head2 = resolve_ref(repo_path, ref2);
        const AncestorResult ancestor = find_ancestor(repo_path, head1, head2);
        if (!ancestor.base) {
            err << "error: '" << ref1 << "' and '" << ref2 << "' share no history\n";
            return kExitUnrelated;
        }

        MergeScenario scenario;
        scenario.repo = repo_path.string();
        scenario.merge_commit = "live";
        scenario.parent1 = head1;
        scenario.parent2 = head2;
        scenario.ancestor = *ancestor.base;
        scenario.multi_base = ancestor.multi_base;
        const FeatureVector fv = extract_feature_vector(repo_path, scenario, model_op(model));

        std::mt19937_64 rng(config.seed);
        double fraction = 0.0;
        const Outcome verdict = predict_row(model, fv.values, rng, &fraction);
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - started)
                                 .count();

        nlohmann::json doc;
        doc["verdict"] = verdict == Outcome::Conflict ? "conflict" : "safe";
        doc["vote_fraction"] = fraction;
        doc["features"] = fv.values;
        doc["elapsed_ms"] = elapsed;
        doc["ref1"] = ref1;
        doc["ref2"] = ref2;
        doc["ancestor"] = *ancestor.base;
        doc["model"] = chosen.string();
        out << doc.dump(2) << '\n';
        return verdict == Outcome::Conflict ? kExitConflict : kExitOk;
    });
}

int cmd_report(const std::vector<std::filesystem::path>& report_paths, std::ostream& out,
               std::ostream& err) {
    return guard(err, [&]() -> int {
        if (report_paths.empty()) {
            throw InputError("no report files given");
        }
        std::vector<EvaluationReport> reports;
        reports.reserve(report_paths.size());
        for (const std::filesystem::path& path : report_paths) {
            reports.push_back(parse_report_json(read_text_file(path)));
        }
        out << render_report_table(reports);
        return kExitOk;
    });
}

}  // namespace mergecast
