#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mergecast/cli.hpp"
#include "mergecast/config.hpp"
#include "mergecast/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"mergecast: predicts whether merging two branches will conflict, from git history alone"};
    app.require_subcommand(1);

    std::string config_file;
    std::string workdir;
    std::string language;
    std::string op_name;
    std::uint64_t seed = 0;
    std::uint64_t jobs = 1;
    auto* config_opt = app.add_option("--config", config_file, "key = value config file");
    auto* workdir_opt =
        app.add_option("--workdir", workdir,
                       "directory for clones, datasets and models (env MERGECAST_WORKDIR)");
    auto* language_opt =
        app.add_option("--language", language, "keep only catalog rows with this language label");
    auto* op_opt = app.add_option(
        "--operator", op_name, "branch combination operator: min, max, avg, median, norm1, norm2, concat");
    auto* seed_opt =
        app.add_option("--seed", seed, "master seed for folds, forests and baseline draws");
    auto* jobs_opt = app.add_option("--jobs", jobs, "parallel replay workers per repository");

    auto* mine = app.add_subcommand("mine", "replay catalog merges into the dataset");
    mine->fallthrough();
    std::string catalog;
    auto* catalog_opt = mine->add_option("--catalog", catalog, "CSV catalog: name,url,language,skip");
    std::uint64_t merge_limit = 1000;
    auto* limit_opt = mine->add_option("--limit", merge_limit, "newest merges kept per repository");

    auto* extract = app.add_subcommand("extract", "export the dataset as CSV");
    extract->fallthrough();
    std::string csv_out;
    auto* csv_opt = extract->add_option("--out", csv_out, "CSV path (default <workdir>/dataset.csv)");

    auto* train = app.add_subcommand("train", "train a classifier and cross-validate it");
    train->fallthrough();
    std::string classifier = "rf";
    train->add_option("--classifier", classifier, "dt, rf, baseline1 or baseline2");
    std::string model_out;
    auto* model_out_opt =
        train->add_option("--model-out", model_out, "model path (default routed by language)");
    bool use_grid = false;
    train->add_flag("--grid", use_grid, "pick the hyperparameter tuple by grid search");
    int folds = 10;
    auto* train_folds_opt = train->add_option("--folds", folds, "cross-validation folds");
    int leaf = 0, split = 0, depth = 0, trees = 0;
    auto* leaf_opt = train->add_option("--leaf", leaf, "min samples per leaf");
    auto* split_opt = train->add_option("--split", split, "min samples to split");
    auto* depth_opt = train->add_option("--depth", depth, "max tree depth");
    auto* trees_opt = train->add_option("--trees", trees, "forest size");

    auto* evaluate = app.add_subcommand("evaluate", "score a stored model against the dataset");
    evaluate->fallthrough();
    std::string eval_model;
    auto* eval_model_opt =
        evaluate->add_option("--model", eval_model, "model path (default routed by language)");
    std::string report_out;
    auto* report_out_opt = evaluate->add_option(
        "--report-out", report_out, "report path (default <workdir>/evaluation.json)");
    bool refit_cv = false;
    evaluate->add_flag("--cv", refit_cv, "re-run cross-validation instead of holdout scoring");
    auto* eval_folds_opt = evaluate->add_option("--folds", folds, "cross-validation folds");

    auto* correlate =
        app.add_subcommand("correlate", "feature correlation and importance reports");
    correlate->fallthrough();

    auto* predict = app.add_subcommand("predict", "verdict for merging ref2 into ref1");
    predict->fallthrough();
    std::string repo_path, ref1, ref2;
    predict->add_option("repo", repo_path, "local repository path")->required();
    predict->add_option("ref1", ref1, "merge target ref")->required();
    predict->add_option("ref2", ref2, "ref to merge in")->required();
    std::string predict_model;
    auto* predict_model_opt =
        predict->add_option("--model", predict_model, "model path (default routed by language)");

    auto* report = app.add_subcommand("report", "side-by-side table from saved reports");
    report->fallthrough();
    std::vector<std::string> report_files;
    report->add_option("reports", report_files, "evaluation report JSON files")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        mergecast::RunConfig config;
        if (const auto env = mergecast::env_workdir()) config.workdir = *env;
        if (config_opt->count() > 0) mergecast::apply_config_file(config, config_file);
        if (workdir_opt->count() > 0) config.workdir = workdir;
        if (language_opt->count() > 0) config.language = language;
        if (op_opt->count() > 0) config.op = mergecast::combine_op_from_string(op_name);
        if (seed_opt->count() > 0) config.seed = seed;
        if (jobs_opt->count() > 0) config.jobs = jobs;

        const auto routed_model = [&](const std::string& flag_value, bool flag_given) {
            if (flag_given) return std::filesystem::path(flag_value);
            if (config.language) return mergecast::language_model_path(config, *config.language);
            return config.workdir / "model.json";
        };

        if (*mine) {
            if (catalog_opt->count() > 0) config.catalog = catalog;
            if (limit_opt->count() > 0) config.merge_limit = merge_limit;
            return mergecast::cmd_mine(config, std::cout, std::cerr);
        }
        if (*extract) {
            const std::filesystem::path out_path =
                csv_opt->count() > 0 ? std::filesystem::path(csv_out)
                                     : config.workdir / "dataset.csv";
            return mergecast::cmd_extract(config, out_path, std::cout, std::cerr);
        }
        if (*train) {
            config.use_grid = config.use_grid || use_grid;
            if (train_folds_opt->count() > 0) config.folds = folds;
            if (leaf_opt->count() > 0) config.params.min_samples_leaf = leaf;
            if (split_opt->count() > 0) config.params.min_samples_split = split;
            if (depth_opt->count() > 0) config.params.max_depth = depth;
            if (trees_opt->count() > 0) config.params.n_estimators = trees;
            return mergecast::cmd_train(config, classifier,
                                        routed_model(model_out, model_out_opt->count() > 0),
                                        std::cout, std::cerr);
        }
        if (*evaluate) {
            if (eval_folds_opt->count() > 0) config.folds = folds;
            const std::filesystem::path report_path =
                report_out_opt->count() > 0 ? std::filesystem::path(report_out)
                                            : config.workdir / "evaluation.json";
            return mergecast::cmd_evaluate(config,
                                           routed_model(eval_model, eval_model_opt->count() > 0),
                                           report_path, refit_cv, std::cout, std::cerr);
        }
        if (*correlate) {
            return mergecast::cmd_correlate(config, std::cout, std::cerr);
        }
        if (*predict) {
            std::optional<std::filesystem::path> model_path;
            if (predict_model_opt->count() > 0) model_path = predict_model;
            return mergecast::cmd_predict(config, repo_path, ref1, ref2, model_path, std::cout,
                                          std::cerr);
        }
        if (*report) {
            std::vector<std::filesystem::path> paths(report_files.begin(), report_files.end());
            return mergecast::cmd_report(paths, std::cout, std::cerr);
        }
    } catch (const mergecast::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return mergecast::kExitFailure;
    }
    return mergecast::kExitFailure;
}
