#include "mergecast/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mergecast/errors.hpp"

namespace mergecast {

namespace {

bool is_constant(const std::vector<double>& values) {
    for (const double v : values) {
        if (v != values.front()) return false;
    }
    return true;
}

// Callers guarantee equal lengths and non-constant inputs.
double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double mean_a = 0.0;
    double mean_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_a += a[i];
        mean_b += b[i];
    }
    mean_a /= static_cast<double>(n);
    mean_b /= static_cast<double>(n);
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    return sab / std::sqrt(saa * sbb);
}

// Lentz's method for the continued fraction in the incomplete beta
// expansion. Converges in a handful of iterations for the arguments the
// t distribution produces.
double beta_cf(double a, double b, double x) {
    constexpr double kTiny = 1e-300;
    constexpr double kTol = 3e-15;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kTol) break;
    }
    return h;
}

double t_approx_p(double rho, std::size_t n) {
    const double dof = static_cast<double>(n) - 2.0;
    const double denom = 1.0 - rho * rho;
    if (denom <= 0.0) return 0.0;
    const double t = rho * std::sqrt(dof / denom);
    return student_t_two_sided_p(t, dof);
}

// Exact p over the permutation distribution of one side's ranks. Tied
// ranks collapse duplicate arrangements, which leaves the distribution
// unchanged because every distinct arrangement has the same multiplicity.
double permutation_p(const std::vector<double>& rx, std::vector<double> ry, double rho_obs) {
    std::sort(ry.begin(), ry.end());
    const double bar = std::fabs(rho_obs) - 1e-12;
    std::uint64_t hits = 0;
    std::uint64_t total = 0;
    do {
        ++total;
        if (std::fabs(pearson(rx, ry)) >= bar) ++hits;
    } while (std::next_permutation(ry.begin(), ry.end()));
    return static_cast<double>(hits) / static_cast<double>(total);
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

}  // namespace

std::vector<double> rank_with_ties(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
    std::vector<double> ranks(values.size(), 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw InputError("beta parameters must be positive");
    }
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_cf(a, b, x) / a;
    }
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
    if (!(dof > 0.0)) {
        throw InputError("degrees of freedom must be positive");
    }
    const double x = dof / (dof + t * t);
    return regularized_incomplete_beta(dof / 2.0, 0.5, x);
}

SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y,
                        PValueMethod method) {
    if (x.size() != y.size()) {
        throw InputError("correlation inputs differ in length");
    }
    if (x.size() < 3) {
        throw InputError("correlation needs at least 3 pairs");
    }
    if (is_constant(x) || is_constant(y)) {
        throw DegenerateInputError("correlation input is constant");
    }
    const std::vector<double> rx = rank_with_ties(x);
    const std::vector<double> ry = rank_with_ties(y);
    SpearmanResult result;
    result.rho = std::clamp(pearson(rx, ry), -1.0, 1.0);
    if (method == PValueMethod::Permutation) {
        if (x.size() > 10) {
            throw InputError("permutation p-values are limited to 10 pairs");
        }
        result.p_value = permutation_p(rx, ry, result.rho);
    } else {
        result.p_value = t_approx_p(result.rho, x.size());
    }
    return result;
}

const char* to_string(Strength s) {
    switch (s) {
        case Strength::Strong: return "strong";
        case Strength::Medium: return "medium";
        case Strength::Weak: return "weak";
        case Strength::Negligible: return "negligible";
        case Strength::Insignificant: return "insignificant";
    }
    return "insignificant";
}

Strength classify_strength(double coefficient, double p_value) {
    if (p_value >= 0.05) return Strength::Insignificant;
    const double magnitude = std::fabs(coefficient);
    if (magnitude >= 0.6) return Strength::Strong;
    if (magnitude >= 0.4) return Strength::Medium;
    if (magnitude >= 0.2) return Strength::Weak;
    return Strength::Negligible;
}

CorrelationReport correlation_report(const LabeledDataset& dataset) {
    const ClassCounts& counts = dataset.class_counts;
    if (counts.conflicts < 3 || counts.cleans < 3) {
        throw DegenerateInputError(
            "correlation needs at least 3 records of each class (conflicts=" +
            std::to_string(counts.conflicts) + ", cleans=" + std::to_string(counts.cleans) + ")");
    }
    const CombineOp op = dataset.records.front().op;
    const std::vector<FeatureInfo>& schema = feature_schema(op);
    const std::size_t n = dataset.records.size();

    std::vector<double> label(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        label[i] = dataset.records[i].label == Outcome::Conflict ? 1.0 : 0.0;
    }

    CorrelationReport report;
    report.set_aggregation = "mean over member features";
    std::vector<double> column(n, 0.0);
    for (std::size_t f = 0; f < schema.size(); ++f) {
        for (std::size_t i = 0; i < n; ++i) {
            column[i] = dataset.records[i].features[f];
        }
        FeatureCorrelation fc;
        fc.feature_index = f;
        fc.name = schema[f].name;
        fc.feature_set_id = schema[f].feature_set;
        if (is_constant(column)) {
            fc.constant = true;
            fc.coefficient = 0.0;
            fc.p_value = 1.0;
        } else {
            const SpearmanResult r = spearman(column, label);
            fc.coefficient = r.rho;
            fc.p_value = r.p_value;
        }
        report.per_feature.push_back(fc);
    }

    std::map<int, std::pair<double, double>> sums;
    std::map<int, int> members;
    for (const FeatureCorrelation& fc : report.per_feature) {
        sums[fc.feature_set_id].first += fc.coefficient;
        sums[fc.feature_set_id].second += fc.p_value;
        members[fc.feature_set_id] += 1;
    }
    for (const auto& [set_id, sum] : sums) {
        CorrelationEntry entry;
        entry.feature_set_id = set_id;
        entry.coefficient = sum.first / members[set_id];
        entry.p_value = sum.second / members[set_id];
        entry.strength = classify_strength(entry.coefficient, entry.p_value);
        report.per_set.push_back(entry);
    }
    return report;
}

ImportanceReport feature_importance(const TreeModel& tree,
                                    const std::vector<FeatureInfo>& schema) {
    if (!tree.trained()) {
        throw ModelStateError("feature importance needs a trained tree");
    }
    if (schema.size() != tree.width) {
        throw SchemaError("schema has " + std::to_string(schema.size()) +
                          " features but the model was trained on " + std::to_string(tree.width));
    }

    ImportanceReport report;
    report.per_feature.assign(tree.width, 0.0);
    const TreeNode& root = tree.nodes.front();
    const double total = static_cast<double>(root.conflicts + root.cleans);
    double sum = 0.0;
    for (const TreeNode& node : tree.nodes) {
        if (node.feature < 0) continue;
        const TreeNode& left = tree.nodes[static_cast<std::size_t>(node.left)];
        const TreeNode& right = tree.nodes[static_cast<std::size_t>(node.right)];
        const double nn = static_cast<double>(node.conflicts + node.cleans);
        const double nl = static_cast<double>(left.conflicts + left.cleans);
        const double nr = static_cast<double>(right.conflicts + right.cleans);
        const double decrease =
            (nn / total) * (gini(node.conflicts, node.cleans) -
                            (nl / nn) * gini(left.conflicts, left.cleans) -
                            (nr / nn) * gini(right.conflicts, right.cleans));
        report.per_feature[static_cast<std::size_t>(node.feature)] += decrease;
        sum += decrease;
    }
    if (sum > 0.0) {
        for (double& v : report.per_feature) v /= sum;
    }

    std::map<int, double> set_sums;
    std::map<int, int> members;
    for (std::size_t f = 0; f < schema.size(); ++f) {
        set_sums[schema[f].feature_set] += report.per_feature[f];
        members[schema[f].feature_set] += 1;
    }
    for (const auto& [set_id, set_sum] : set_sums) {
        ImportanceEntry entry;
        entry.feature_set_id = set_id;
        entry.importance = set_sum / members[set_id];
        report.per_set.push_back(entry);
    }
    return report;
}

std::string render_correlation_json(const CorrelationReport& report) {
    nlohmann::json doc;
    doc["set_aggregation"] = report.set_aggregation;
    doc["features"] = nlohmann::json::array();
    for (const FeatureCorrelation& fc : report.per_feature) {
        doc["features"].push_back({{"index", fc.feature_index},
                                   {"name", fc.name},
                                   {"set", fc.feature_set_id},
                                   {"coefficient", fc.coefficient},
                                   {"p_value", fc.p_value},
                                   {"constant", fc.constant}});
    }
    doc["sets"] = nlohmann::json::array();
    for (const CorrelationEntry& entry : report.per_set) {
        doc["sets"].push_back({{"set", entry.feature_set_id},
                               {"coefficient", entry.coefficient},
                               {"p_value", entry.p_value},
                               {"strength", to_string(entry.strength)}});
    }
    return doc.dump(2);
}

std::string render_correlation_table(const CorrelationReport& report) {
    std::ostringstream out;
    out << "set  coefficient    p-value  strength\n";
    for (const CorrelationEntry& entry : report.per_set) {
        out << entry.feature_set_id << "    " << fixed(entry.coefficient, 4) << "      "
            << fixed(entry.p_value, 4) << "   " << to_string(entry.strength) << "\n";
    }
    out << "aggregation: " << report.set_aggregation << "\n";
    return out.str();
}

std::string render_importance_json(const ImportanceReport& report,
                                   const std::vector<FeatureInfo>& schema) {
    if (schema.size() != report.per_feature.size()) {
        throw SchemaError("schema has " + std::to_string(schema.size()) +
                          " features but the report covers " +
                          std::to_string(report.per_feature.size()));
    }
    nlohmann::json doc;
    doc["features"] = nlohmann::json::array();
    for (std::size_t f = 0; f < schema.size(); ++f) {
        doc["features"].push_back({{"index", f},
                                   {"name", schema[f].name},
                                   {"set", schema[f].feature_set},
                                   {"importance", report.per_feature[f]}});
    }
    doc["sets"] = nlohmann::json::array();
    for (const ImportanceEntry& entry : report.per_set) {
        doc["sets"].push_back({{"set", entry.feature_set_id}, {"importance", entry.importance}});
    }
    return doc.dump(2);
}

std::string render_importance_table(const ImportanceReport& report) {
    std::ostringstream out;
    out << "set  importance\n";
    for (const ImportanceEntry& entry : report.per_set) {
        out << entry.feature_set_id << "    " << fixed(entry.importance, 4) << "\n";
    }
    return out.str();
}

}  // namespace mergecast
