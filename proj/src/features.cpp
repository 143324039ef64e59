#include "mergecast/features.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>

#include "mergecast/errors.hpp"
#include "mergecast/git_gateway.hpp"

namespace mergecast {
namespace {

constexpr std::int64_t kWeekSeconds = 168 * 3600;

std::string first_line(const std::string& s) {
    return s.substr(0, s.find_first_of("\r\n"));
}

struct Range {
    std::string ancestor;  // resolved
    std::string tip;       // resolved
    bool empty = false;
};

Range resolve_range(const std::filesystem::path& repo, const std::string& ancestor,
                    const std::string& tip) {
    auto res = run_git(repo, {"rev-parse", ancestor + "^{commit}", tip + "^{commit}"});
    if (!res.ok())
        throw RangeError("cannot resolve range " + ancestor + ".." + tip + ": " +
                         first_line(res.err));
    auto nl = res.out.find('\n');
    Range r;
    r.ancestor = res.out.substr(0, nl);
    r.tip = first_line(res.out.substr(nl + 1));
    if (r.ancestor == r.tip) {
        r.empty = true;
        return r;
    }
    auto anc = run_git(repo, {"merge-base", "--is-ancestor", r.ancestor, r.tip});
    if (!anc.ok())
        throw RangeError(ancestor + " is not an ancestor of " + tip);
    return r;
}

std::vector<CommitMeta> range_commits(const std::filesystem::path& repo, const Range& r) {
    if (r.empty) return {};
    auto args = log_format_args();
    args.insert(args.begin(), "log");
    args.push_back(r.ancestor + ".." + r.tip);
    auto res = run_git(repo, args, std::chrono::duration<double>(600.0));
    if (!res.ok())
        throw RangeError("log failed for " + r.ancestor + ".." + r.tip + ": " +
                         first_line(res.err));
    return parse_log_records(res.out);
}

std::vector<FileChange> range_changes(const std::filesystem::path& repo, const Range& r) {
    if (r.empty) return {};
    auto numstat = run_git(repo, {"diff", "--numstat", "-z", "-M", "-C", r.ancestor, r.tip},
                           std::chrono::duration<double>(600.0));
    auto names = run_git(repo, {"diff", "--name-status", "-z", "-M", "-C", r.ancestor, r.tip},
                         std::chrono::duration<double>(600.0));
    if (!numstat.ok() || !names.ok())
        throw RangeError("diff failed for " + r.ancestor + ".." + r.tip);
    return parse_changes(numstat.out, names.out);
}

std::int64_t commit_timestamp(const std::filesystem::path& repo, const std::string& rev) {
    auto res = run_git(repo, {"log", "-n1", "--format=%at", rev});
    if (!res.ok()) throw RangeError("cannot read timestamp of " + rev);
    std::string line = first_line(res.out);
    std::int64_t ts = 0;
    auto [p, ec] = std::from_chars(line.data(), line.data() + line.size(), ts);
    if (ec != std::errc() || p != line.data() + line.size())
        throw RangeError("bad timestamp for " + rev + ": '" + line + "'");
    return ts;
}

std::string strip_trailing_newlines(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

// characters = code points; counting non-continuation bytes handles UTF-8
// and degrades gracefully on arbitrary bytes
std::uint64_t char_count(const std::string& s) {
    std::uint64_t n = 0;
    for (unsigned char c : s)
        if ((c & 0xC0) != 0x80) ++n;
    return n;
}

std::string ascii_lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::size_t kind_slot(ChangeKind k) {
    switch (k) {
        case ChangeKind::Added: return 0;
        case ChangeKind::Deleted: return 1;
        case ChangeKind::Renamed: return 2;
        case ChangeKind::Modified: return 3;
        case ChangeKind::Copied: return 4;
    }
    return 3;
}

BranchFeatures branch_from(const std::vector<CommitMeta>& commits,
                           const std::vector<FileChange>& changes, const std::string& tip,
                           std::int64_t ancestor_ts) {
    BranchFeatures bf;
    bf.commit_count = commits.size();

    std::int64_t tip_ts = 0;
    for (const auto& c : commits)
        if (c.id == tip) tip_ts = c.author_timestamp;

    std::set<std::string> emails;
    std::vector<std::string> messages;
    messages.reserve(commits.size());
    for (const auto& c : commits) {
        if (c.author_timestamp >= tip_ts - kWeekSeconds && c.author_timestamp <= tip_ts)
            ++bf.commits_last_week;
        emails.insert(ascii_lower(c.author_email));
        messages.push_back(c.message);
    }
    bf.active_developers = emails.size();
    bf.keyword_freqs = keyword_frequencies(messages);
    auto lens = message_length_stats(messages);
    bf.msg_len_min = lens.min;
    bf.msg_len_max = lens.max;
    bf.msg_len_mean = lens.mean;
    bf.msg_len_median = lens.median;

    for (const auto& ch : changes) {
        ++bf.file_changes[kind_slot(ch.kind)];
        if (ch.lines_added) bf.lines_added += *ch.lines_added;
        if (ch.lines_deleted) bf.lines_deleted += *ch.lines_deleted;
    }

    double hours = static_cast<double>(tip_ts - ancestor_ts) / 3600.0;
    bf.duration_hours = std::max(0.0, hours);
    return bf;
}

}  // namespace

std::array<double, 27> BranchFeatures::as_array() const {
    std::array<double, 27> a{};
    std::size_t i = 0;
    a[i++] = static_cast<double>(commit_count);
    a[i++] = static_cast<double>(commits_last_week);
    for (auto v : file_changes) a[i++] = static_cast<double>(v);
    a[i++] = static_cast<double>(lines_added);
    a[i++] = static_cast<double>(lines_deleted);
    a[i++] = static_cast<double>(active_developers);
    for (auto v : keyword_freqs) a[i++] = static_cast<double>(v);
    a[i++] = msg_len_min;
    a[i++] = msg_len_max;
    a[i++] = msg_len_mean;
    a[i++] = msg_len_median;
    a[i++] = duration_hours;
    return a;
}

const char* to_string(CombineOp op) {
    switch (op) {
        case CombineOp::Min: return "min";
        case CombineOp::Max: return "max";
        case CombineOp::Avg: return "avg";
        case CombineOp::Median: return "median";
        case CombineOp::Norm1: return "norm1";
        case CombineOp::Norm2: return "norm2";
        case CombineOp::Concat: return "concat";
    }
    return "?";
}

CombineOp combine_op_from_string(const std::string& name) {
    static const std::map<std::string, CombineOp> table = {
        {"min", CombineOp::Min},       {"max", CombineOp::Max},
        {"avg", CombineOp::Avg},       {"median", CombineOp::Median},
        {"norm1", CombineOp::Norm1},   {"norm2", CombineOp::Norm2},
        {"concat", CombineOp::Concat},
    };
    auto it = table.find(ascii_lower(name));
    if (it == table.end()) throw ConfigError("unknown combination operator '" + name + "'");
    return it->second;
}

std::size_t vector_width(CombineOp op) { return op == CombineOp::Concat ? 55 : 28; }

const std::vector<FeatureInfo>& feature_schema(CombineOp op) {
    static const std::vector<FeatureInfo> branch = [] {
        std::vector<FeatureInfo> v;
        v.push_back({"fs2_commit_count", 2});
        v.push_back({"fs3_commits_last_week", 3});
        for (const char* kind : {"added", "deleted", "renamed", "modified", "copied"})
            v.push_back({std::string("fs4_files_") + kind, 4});
        v.push_back({"fs5_lines_added", 5});
        v.push_back({"fs5_lines_deleted", 5});
        v.push_back({"fs6_active_developers", 6});
        for (const char* kw : kKeywords) v.push_back({std::string("fs7_kw_") + kw, 7});
        for (const char* stat : {"min", "max", "mean", "median"})
            v.push_back({std::string("fs8_msg_len_") + stat, 8});
        v.push_back({"fs9_duration_hours", 9});
        return v;
    }();
    static const std::vector<FeatureInfo> scalar = [] {
        std::vector<FeatureInfo> v;
        v.push_back({"fs1_simultaneous_files", 1});
        v.insert(v.end(), branch.begin(), branch.end());
        return v;
    }();
    static const std::vector<FeatureInfo> concat = [] {
        std::vector<FeatureInfo> v;
        v.push_back({"fs1_simultaneous_files", 1});
        for (const auto& f : branch) v.push_back({f.name + "_p1", f.feature_set});
        for (const auto& f : branch) v.push_back({f.name + "_p2", f.feature_set});
        return v;
    }();
    return op == CombineOp::Concat ? concat : scalar;
}

std::set<std::string> changed_files(const std::filesystem::path& repo, const std::string& ancestor,
                                    const std::string& tip) {
    auto range = resolve_range(repo, ancestor, tip);
    std::set<std::string> files;
    for (const auto& ch : range_changes(repo, range)) {
        files.insert(ch.path);
        if (ch.kind == ChangeKind::Renamed && ch.old_path) files.insert(*ch.old_path);
    }
    return files;
}

std::uint64_t simultaneous_changes(const std::set<std::string>& files1,
                                   const std::set<std::string>& files2) {
    std::uint64_t n = 0;
    for (const auto& f : files1) n += files2.count(f);
    return n;
}

std::uint64_t branch_commit_count(const std::filesystem::path& repo, const std::string& ancestor,
                                  const std::string& tip) {
    return range_commits(repo, resolve_range(repo, ancestor, tip)).size();
}

std::uint64_t commit_density(const std::filesystem::path& repo, const std::string& ancestor,
                             const std::string& tip) {
    auto range = resolve_range(repo, ancestor, tip);
    auto commits = range_commits(repo, range);
    if (commits.empty()) return 0;
    std::int64_t tip_ts = 0;
    for (const auto& c : commits)
        if (c.id == range.tip) tip_ts = c.author_timestamp;
    std::uint64_t n = 0;
    for (const auto& c : commits)
        if (c.author_timestamp >= tip_ts - kWeekSeconds && c.author_timestamp <= tip_ts) ++n;
    return n;
}

std::array<std::uint64_t, 5> file_change_histogram(const std::filesystem::path& repo,
                                                   const std::string& ancestor,
                                                   const std::string& tip) {
    std::array<std::uint64_t, 5> hist{};
    for (const auto& ch : range_changes(repo, resolve_range(repo, ancestor, tip)))
        ++hist[kind_slot(ch.kind)];
    return hist;
}

std::pair<std::uint64_t, std::uint64_t> line_churn(const std::filesystem::path& repo,
                                                   const std::string& ancestor,
                                                   const std::string& tip) {
    std::uint64_t add = 0, del = 0;
    for (const auto& ch : range_changes(repo, resolve_range(repo, ancestor, tip))) {
        if (ch.lines_added) add += *ch.lines_added;
        if (ch.lines_deleted) del += *ch.lines_deleted;
    }
    return {add, del};
}

std::uint64_t active_devs(const std::filesystem::path& repo, const std::string& ancestor,
                          const std::string& tip) {
    std::set<std::string> emails;
    for (const auto& c : range_commits(repo, resolve_range(repo, ancestor, tip)))
        emails.insert(ascii_lower(c.author_email));
    return emails.size();
}

std::array<std::uint64_t, kKeywordCount> keyword_frequencies(
    const std::vector<std::string>& messages) {
    std::array<std::uint64_t, kKeywordCount> freqs{};
    for (const auto& msg : messages) {
        std::size_t i = 0;
        while (i < msg.size()) {
            if (!std::isalnum(static_cast<unsigned char>(msg[i]))) {
                ++i;
                continue;
            }
            std::size_t start = i;
            while (i < msg.size() && std::isalnum(static_cast<unsigned char>(msg[i]))) ++i;
            std::string token = ascii_lower(msg.substr(start, i - start));
            for (int k = 0; k < kKeywordCount; ++k)
                if (token.rfind(kKeywords[k], 0) == 0) ++freqs[k];
        }
    }
    return freqs;
}

MsgLenStats message_length_stats(const std::vector<std::string>& messages) {
    if (messages.empty()) return {};
    std::vector<std::uint64_t> lens;
    lens.reserve(messages.size());
    for (const auto& m : messages) lens.push_back(char_count(strip_trailing_newlines(m)));
    std::sort(lens.begin(), lens.end());

    MsgLenStats out;
    out.min = static_cast<double>(lens.front());
    out.max = static_cast<double>(lens.back());
    std::uint64_t sum = 0;
    for (auto l : lens) sum += l;
    out.mean = static_cast<double>(sum) / static_cast<double>(lens.size());
    std::size_t n = lens.size();
    out.median = (n % 2 == 1) ? static_cast<double>(lens[n / 2])
                              : (static_cast<double>(lens[n / 2 - 1]) +
                                 static_cast<double>(lens[n / 2])) /
                                    2.0;
    return out;
}

double branch_duration_hours(const std::filesystem::path& repo, const std::string& ancestor,
                             const std::string& tip) {
    auto range = resolve_range(repo, ancestor, tip);
    if (range.empty) return 0.0;
    double hours = static_cast<double>(commit_timestamp(repo, range.tip) -
                                       commit_timestamp(repo, range.ancestor)) /
                   3600.0;
    return std::max(0.0, hours);
}

BranchFeatures extract_branch(const std::filesystem::path& repo, const std::string& ancestor,
                              const std::string& tip) {
    auto range = resolve_range(repo, ancestor, tip);
    if (range.empty) return {};
    auto commits = range_commits(repo, range);
    if (commits.empty()) return {};
    auto changes = range_changes(repo, range);
    return branch_from(commits, changes, range.tip, commit_timestamp(repo, range.ancestor));
}

std::vector<double> combine(const BranchFeatures& a, const BranchFeatures& b, CombineOp op) {
    auto av = a.as_array();
    auto bv = b.as_array();
    std::vector<double> out;
    if (op == CombineOp::Concat) {
        out.insert(out.end(), av.begin(), av.end());
        out.insert(out.end(), bv.begin(), bv.end());
        return out;
    }
    out.resize(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) {
        double x = av[i], y = bv[i];
        switch (op) {
            case CombineOp::Min: out[i] = std::min(x, y); break;
            case CombineOp::Max: out[i] = std::max(x, y); break;
            case CombineOp::Avg:
            case CombineOp::Median: out[i] = (x + y) / 2.0; break;
            case CombineOp::Norm1: out[i] = std::abs(x) + std::abs(y); break;
            case CombineOp::Norm2: out[i] = std::sqrt(x * x + y * y); break;
            case CombineOp::Concat: break;  // handled above
        }
    }
    return out;
}

FeatureVector extract_feature_vector(const std::filesystem::path& repo,
                                     const MergeScenario& scenario, CombineOp op,
                                     std::optional<Outcome> label) {
    FeatureVector fv;
    fv.repo = scenario.repo;
    fv.merge_commit = scenario.merge_commit;
    fv.op = op;
    fv.label = label;

    try {
        auto files1 = changed_files(repo, scenario.ancestor, scenario.parent1);
        auto files2 = changed_files(repo, scenario.ancestor, scenario.parent2);
        fv.simultaneous_files = simultaneous_changes(files1, files2);
    } catch (const RangeError& e) {
        throw ExtractionError(e.what(), 1);
    }

    BranchFeatures b1, b2;
    try {
        b1 = extract_branch(repo, scenario.ancestor, scenario.parent1);
        b2 = extract_branch(repo, scenario.ancestor, scenario.parent2);
    } catch (const RangeError& e) {
        throw ExtractionError(e.what(), 2);
    }

    fv.values.reserve(vector_width(op));
    fv.values.push_back(static_cast<double>(fv.simultaneous_files));
    auto combined = combine(b1, b2, op);
    fv.values.insert(fv.values.end(), combined.begin(), combined.end());
    return fv;
}

}  // namespace mergecast
