#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mergecast/learner.hpp"

namespace mergecast {

// Per-class precision/recall/f1 and stratified k-fold cross-validation.
// Reports carry both classes and never an accuracy figure; on heavily
// imbalanced data accuracy says nothing useful.

struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;
    Outcome target = Outcome::Conflict;

    std::int64_t total() const { return tp + fp + tn + fn; }
};

ConfusionCounts confusion(const std::vector<Outcome>& truth, const std::vector<Outcome>& pred,
                          Outcome target);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Zero denominators yield 0 for the affected metric.
ClassMetrics prf(const ConfusionCounts& counts);

// True when any of the three denominators vanished.
bool has_zero_denominator(const ConfusionCounts& counts);

// k disjoint index sets covering 0..labels.size()-1, each holding every
// class in near-exact proportion (off by less than one sample). Shuffled
// round-robin, deterministic per seed. A class smaller than k raises
// FoldError.
std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<Outcome>& labels, int k,
                                                       std::uint64_t seed);

struct FoldResult {
    ClassMetrics conflict;
    ClassMetrics safe;
};

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation over folds
};

struct ClassSummary {
    MeanSd precision;
    MeanSd recall;
    MeanSd f1;
};

struct EvaluationReport {
    ClassMetrics pooled_conflict;
    ClassMetrics pooled_safe;
    ConfusionCounts pooled_conflict_counts;
    ConfusionCounts pooled_safe_counts;
    std::vector<FoldResult> folds;  // empty for plain holdout evaluation
    ClassSummary fold_conflict;
    ClassSummary fold_safe;
    std::string model_identity;
    std::string dataset_identity;
    bool zero_denominator = false;
};

// Train on k-1 folds, predict the held-out fold, pool the predictions.
// Pooled metrics are the headline; per-fold mean +/- sd sits alongside.
EvaluationReport cross_validate(const ModelSpec& spec, const TrainingView& data, int k,
                                std::uint64_t seed);

// Metrics for an existing prediction column (holdout evaluation).
EvaluationReport evaluate_predictions(const std::vector<Outcome>& truth,
                                      const std::vector<Outcome>& pred,
                                      std::string model_identity, std::string dataset_identity);

std::string render_report_json(const EvaluationReport& report);

// Inverse of render_report_json. Malformed documents raise LoadError.
EvaluationReport parse_report_json(const std::string& text);

// One row per report: classifier, then precision/recall/f1 for the safe and
// conflicting classes.
std::string render_report_table(const std::vector<EvaluationReport>& reports);

}  // namespace mergecast
