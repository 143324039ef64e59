#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mergecast/dataset.hpp"
#include "mergecast/learner.hpp"

namespace mergecast {

// Rank-correlation screening of features against the conflict label, plus
// decision-tree feature importance rolled up per feature set.

// 1-based fractional ranks; tied values share the mean of their positions.
std::vector<double> rank_with_ties(const std::vector<double>& values);

// Two-sided p-values come from the t approximation by default; the exact
// permutation distribution is available for small samples (n <= 10).
enum class PValueMethod { TApprox, Permutation };

struct SpearmanResult {
    double rho = 0.0;
    double p_value = 1.0;
};

// Pearson correlation of tie-adjusted ranks. Needs equal lengths of at
// least 3; a constant side raises DegenerateInputError.
SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y,
                        PValueMethod method = PValueMethod::TApprox);

// Continued-fraction evaluation, exposed because the p-values lean on it.
double regularized_incomplete_beta(double a, double b, double x);
double student_t_two_sided_p(double t, double dof);

enum class Strength { Strong, Medium, Weak, Negligible, Insignificant };

const char* to_string(Strength s);

// p >= 0.05 is insignificant outright; significant coefficients grade by
// magnitude at 0.6 / 0.4 / 0.2.
Strength classify_strength(double coefficient, double p_value);

struct FeatureCorrelation {
    std::size_t feature_index = 0;
    std::string name;
    int feature_set_id = 0;
    double coefficient = 0.0;
    double p_value = 1.0;
    bool constant = false;  // constant column, entered the mean as (0, 1)
};

struct CorrelationEntry {
    int feature_set_id = 0;
    double coefficient = 0.0;
    double p_value = 1.0;
    Strength strength = Strength::Insignificant;
};

struct CorrelationReport {
    std::vector<FeatureCorrelation> per_feature;
    std::vector<CorrelationEntry> per_set;  // one row per feature set
    std::string set_aggregation;            // how multi-feature sets were folded
};

// Labels enter as Conflict=1, Clean=0. Requires at least 3 records of each
// class, else DegenerateInputError.
CorrelationReport correlation_report(const LabeledDataset& dataset);

struct ImportanceEntry {
    int feature_set_id = 0;
    double importance = 0.0;
};

struct ImportanceReport {
    std::vector<double> per_feature;        // normalized to sum 1 when the tree splits
    std::vector<ImportanceEntry> per_set;   // mean over member features
};

// Mean decrease in Gini impurity, weighted by node sample fraction, read
// off a trained tree. The schema must match the tree width.
ImportanceReport feature_importance(const TreeModel& tree,
                                    const std::vector<FeatureInfo>& schema);

std::string render_correlation_json(const CorrelationReport& report);
std::string render_correlation_table(const CorrelationReport& report);
std::string render_importance_json(const ImportanceReport& report,
                                   const std::vector<FeatureInfo>& schema);
std::string render_importance_table(const ImportanceReport& report);

}  // namespace mergecast
