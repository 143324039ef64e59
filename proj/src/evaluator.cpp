#include "mergecast/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "mergecast/errors.hpp"
#include "mergecast/rng.hpp"

namespace mergecast {

using nlohmann::json;

ConfusionCounts confusion(const std::vector<Outcome>& truth, const std::vector<Outcome>& pred,
                          Outcome target) {
    if (truth.size() != pred.size())
        throw InputError("truth and prediction columns have different lengths");
    if (truth.empty()) throw InputError("nothing to evaluate");

    ConfusionCounts c;
    c.target = target;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool t = truth[i] == target;
        const bool p = pred[i] == target;
        if (t && p)
            ++c.tp;
        else if (!t && p)
            ++c.fp;
        else if (t && !p)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

ClassMetrics prf(const ConfusionCounts& counts) {
    ClassMetrics m;
    if (counts.tp + counts.fp > 0)
        m.precision = static_cast<double>(counts.tp) / static_cast<double>(counts.tp + counts.fp);
    if (counts.tp + counts.fn > 0)
        m.recall = static_cast<double>(counts.tp) / static_cast<double>(counts.tp + counts.fn);
    if (m.precision + m.recall > 0)
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

bool has_zero_denominator(const ConfusionCounts& counts) {
    if (counts.tp + counts.fp == 0 || counts.tp + counts.fn == 0) return true;
    const auto m = prf(counts);
    return m.precision + m.recall == 0.0;
}

std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<Outcome>& labels, int k,
                                                       std::uint64_t seed) {
    if (k < 1) throw FoldError("fold count must be at least 1");

    std::vector<std::size_t> conflicts, cleans;
    for (std::size_t i = 0; i < labels.size(); ++i)
        (labels[i] == Outcome::Conflict ? conflicts : cleans).push_back(i);

    const auto need = static_cast<std::size_t>(k);
    if (conflicts.size() < need || cleans.size() < need)
        throw FoldError("a class is smaller than the fold count (conflicts=" +
                        std::to_string(conflicts.size()) + ", cleans=" +
                        std::to_string(cleans.size()) + ", k=" + std::to_string(k) + ")");

    std::mt19937_64 rng(seed);
    std::vector<std::vector<std::size_t>> folds(need);
    for (auto* cls : {&conflicts, &cleans}) {
        rng_shuffle(rng, *cls);
        for (std::size_t j = 0; j < cls->size(); ++j) folds[j % need].push_back((*cls)[j]);
    }
    for (auto& fold : folds) std::sort(fold.begin(), fold.end());
    return folds;
}

namespace {

MeanSd mean_sd(const std::vector<double>& values) {
    MeanSd ms;
    if (values.empty()) return ms;
    for (double v : values) ms.mean += v;
    ms.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - ms.mean) * (v - ms.mean);
        ms.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return ms;
}

ClassSummary summarize(const std::vector<FoldResult>& folds, bool conflict_block) {
    std::vector<double> precision, recall, f1;
    for (const auto& fr : folds) {
        const ClassMetrics& m = conflict_block ? fr.conflict : fr.safe;
        precision.push_back(m.precision);
        recall.push_back(m.recall);
        f1.push_back(m.f1);
    }
    return ClassSummary{mean_sd(precision), mean_sd(recall), mean_sd(f1)};
}

}  // namespace

EvaluationReport cross_validate(const ModelSpec& spec, const TrainingView& data, int k,
                                std::uint64_t seed) {
    if (k < 2) throw FoldError("cross-validation needs at least 2 folds");
    const auto folds = stratified_folds(data.y, k, seed);

    const std::size_t n = data.y.size();
    std::vector<Outcome> pooled(n, Outcome::Clean);

    EvaluationReport report;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        std::vector<char> held(n, 0);
        for (auto idx : folds[f]) held[idx] = 1;
        std::vector<std::size_t> train_rows;
        train_rows.reserve(n - folds[f].size());
        for (std::size_t i = 0; i < n; ++i)
            if (!held[i]) train_rows.push_back(i);

        std::vector<std::vector<double>> test_x;
        std::vector<Outcome> test_y;
        for (auto idx : folds[f]) {
            test_x.push_back(data.x[idx]);
            test_y.push_back(data.y[idx]);
        }

        const auto pred = fit_predict(spec, subset(data, train_rows), test_x, mix_seed(seed, f));
        for (std::size_t j = 0; j < folds[f].size(); ++j) pooled[folds[f][j]] = pred[j];

        const auto fold_conflict = confusion(test_y, pred, Outcome::Conflict);
        const auto fold_safe = confusion(test_y, pred, Outcome::Clean);
        report.folds.push_back(FoldResult{prf(fold_conflict), prf(fold_safe)});
        report.zero_denominator = report.zero_denominator ||
                                  has_zero_denominator(fold_conflict) ||
                                  has_zero_denominator(fold_safe);
    }

    report.pooled_conflict_counts = confusion(data.y, pooled, Outcome::Conflict);
    report.pooled_safe_counts = confusion(data.y, pooled, Outcome::Clean);
    report.pooled_conflict = prf(report.pooled_conflict_counts);
    report.pooled_safe = prf(report.pooled_safe_counts);
    report.zero_denominator = report.zero_denominator ||
                              has_zero_denominator(report.pooled_conflict_counts) ||
                              has_zero_denominator(report.pooled_safe_counts);
    report.fold_conflict = summarize(report.folds, true);
    report.fold_safe = summarize(report.folds, false);
    report.model_identity = describe(spec);

    std::ostringstream id;
    id << "n=" << n << ",conflicts=" << report.pooled_conflict_counts.tp +
                           report.pooled_conflict_counts.fn
       << ",op=" << to_string(data.op);
    report.dataset_identity = id.str();
    return report;
}

EvaluationReport evaluate_predictions(const std::vector<Outcome>& truth,
                                      const std::vector<Outcome>& pred,
                                      std::string model_identity, std::string dataset_identity) {
    EvaluationReport report;
    report.pooled_conflict_counts = confusion(truth, pred, Outcome::Conflict);
    report.pooled_safe_counts = confusion(truth, pred, Outcome::Clean);
    report.pooled_conflict = prf(report.pooled_conflict_counts);
    report.pooled_safe = prf(report.pooled_safe_counts);
    report.zero_denominator = has_zero_denominator(report.pooled_conflict_counts) ||
                              has_zero_denominator(report.pooled_safe_counts);
    report.model_identity = std::move(model_identity);
    report.dataset_identity = std::move(dataset_identity);
    return report;
}

namespace {

json metrics_json(const ClassMetrics& m) {
    return json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

json counts_json(const ConfusionCounts& c) {
    return json{{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

json summary_json(const ClassSummary& s) {
    return json{{"precision", {{"mean", s.precision.mean}, {"sd", s.precision.sd}}},
                {"recall", {{"mean", s.recall.mean}, {"sd", s.recall.sd}}},
                {"f1", {{"mean", s.f1.mean}, {"sd", s.f1.sd}}}};
}

}  // namespace

std::string render_report_json(const EvaluationReport& report) {
    json doc;
    doc["model"] = report.model_identity;
    doc["dataset"] = report.dataset_identity;
    doc["pooled"]["conflict"] = metrics_json(report.pooled_conflict);
    doc["pooled"]["conflict"]["counts"] = counts_json(report.pooled_conflict_counts);
    doc["pooled"]["safe"] = metrics_json(report.pooled_safe);
    doc["pooled"]["safe"]["counts"] = counts_json(report.pooled_safe_counts);
    doc["folds"] = json::array();
    for (const auto& fr : report.folds)
        doc["folds"].push_back(
            json{{"conflict", metrics_json(fr.conflict)}, {"safe", metrics_json(fr.safe)}});
    if (!report.folds.empty()) {
        doc["fold_summary"]["conflict"] = summary_json(report.fold_conflict);
        doc["fold_summary"]["safe"] = summary_json(report.fold_safe);
    }
    doc["zero_denominator"] = report.zero_denominator;
    return doc.dump(2);
}

namespace {

ClassMetrics metrics_from(const json& node) {
    ClassMetrics m;
    m.precision = node.at("precision").get<double>();
    m.recall = node.at("recall").get<double>();
    m.f1 = node.at("f1").get<double>();
    return m;
}

ConfusionCounts counts_from(const json& node, Outcome target) {
    ConfusionCounts c;
    c.tp = node.at("tp").get<std::int64_t>();
    c.fp = node.at("fp").get<std::int64_t>();
    c.tn = node.at("tn").get<std::int64_t>();
    c.fn = node.at("fn").get<std::int64_t>();
    c.target = target;
    return c;
}

MeanSd mean_sd_from(const json& node) {
    return {node.at("mean").get<double>(), node.at("sd").get<double>()};
}

ClassSummary summary_from(const json& node) {
    ClassSummary s;
    s.precision = mean_sd_from(node.at("precision"));
    s.recall = mean_sd_from(node.at("recall"));
    s.f1 = mean_sd_from(node.at("f1"));
    return s;
}

}  // namespace

EvaluationReport parse_report_json(const std::string& text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) {
        throw LoadError("report file is not valid JSON", 1);
    }
    try {
        EvaluationReport report;
        report.model_identity = doc.at("model").get<std::string>();
        report.dataset_identity = doc.at("dataset").get<std::string>();
        report.pooled_conflict = metrics_from(doc.at("pooled").at("conflict"));
        report.pooled_conflict_counts =
            counts_from(doc.at("pooled").at("conflict").at("counts"), Outcome::Conflict);
        report.pooled_safe = metrics_from(doc.at("pooled").at("safe"));
        report.pooled_safe_counts =
            counts_from(doc.at("pooled").at("safe").at("counts"), Outcome::Clean);
        for (const json& fold : doc.at("folds")) {
            report.folds.push_back(
                {metrics_from(fold.at("conflict")), metrics_from(fold.at("safe"))});
        }
        if (doc.contains("fold_summary")) {
            report.fold_conflict = summary_from(doc.at("fold_summary").at("conflict"));
            report.fold_safe = summary_from(doc.at("fold_summary").at("safe"));
        }
        report.zero_denominator = doc.at("zero_denominator").get<bool>();
        return report;
    } catch (const json::exception& e) {
        throw LoadError(std::string("report file is missing fields: ") + e.what(), 1);
    }
}

std::string render_report_table(const std::vector<EvaluationReport>& reports) {
    std::size_t name_width = std::string("classifier").size();
    for (const auto& r : reports) name_width = std::max(name_width, r.model_identity.size());

    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(name_width) + 2) << "classifier"
        << std::setw(30) << "safe" << "conflicting" << '\n';
    out << std::setw(static_cast<int>(name_width) + 2) << "" << std::setw(10) << "precision"
        << std::setw(10) << "recall" << std::setw(10) << "f1" << std::setw(10) << "precision"
        << std::setw(10) << "recall" << "f1" << '\n';

    out << std::fixed << std::setprecision(3);
    for (const auto& r : reports) {
        out << std::setw(static_cast<int>(name_width) + 2) << r.model_identity << std::setw(10)
            << r.pooled_safe.precision << std::setw(10) << r.pooled_safe.recall << std::setw(10)
            << r.pooled_safe.f1 << std::setw(10) << r.pooled_conflict.precision << std::setw(10)
            << r.pooled_conflict.recall << r.pooled_conflict.f1 << '\n';
    }
    return out.str();
}

}  // namespace mergecast
