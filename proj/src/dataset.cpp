#include "mergecast/dataset.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <fstream>

#include <json.hpp>

#include "mergecast/errors.hpp"

namespace mergecast {
namespace {

using nlohmann::json;

const char* label_name(Outcome o) { return to_string(o); }

Outcome label_from_string(const std::string& s, std::size_t line) {
    if (s == "conflict") return Outcome::Conflict;
    if (s == "clean") return Outcome::Clean;
    throw LoadError("label must be conflict or clean, got '" + s + "'", line);
}

json record_to_json(const DatasetRecord& rec) {
    return json{
        {"repo", rec.repo},
        {"merge_commit", rec.merge_commit},
        {"language", rec.language},
        {"operator", to_string(rec.op)},
        {"features", rec.features},
        {"label", label_name(rec.label)},
        {"git_version", rec.git_version},
        {"schema_version", rec.schema_version},
    };
}

}  // namespace

std::string scenario_key(const std::string& repo, const std::string& merge_commit) {
    return repo + "@" + merge_commit;
}

DatasetWriter::DatasetWriter(std::filesystem::path dataset_path, CombineOp op)
    : path_(std::move(dataset_path)), op_(op) {
    if (path_.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path_.parent_path(), ec);
    }
    auto lock_path = path_.string() + ".lock";
    lock_fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (lock_fd_ < 0) throw EnvironmentError("cannot open lock file " + lock_path);
    if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
        ::close(lock_fd_);
        lock_fd_ = -1;
        throw LockError("dataset is already being written: " + path_.string());
    }
}

DatasetWriter::~DatasetWriter() {
    if (lock_fd_ >= 0) {
        ::flock(lock_fd_, LOCK_UN);
        ::close(lock_fd_);
    }
}

void DatasetWriter::append(const DatasetRecord& record) {
    if (record.op != op_)
        throw SchemaError("record operator " + std::string(to_string(record.op)) +
                          " does not match writer operator " + to_string(op_));
    if (record.features.size() != vector_width(op_))
        throw SchemaError("feature vector has " + std::to_string(record.features.size()) +
                          " values, schema wants " + std::to_string(vector_width(op_)));
    if (record.label != Outcome::Conflict && record.label != Outcome::Clean)
        throw SchemaError("only conflict/clean labels are storable");
    if (record.repo.empty() || record.merge_commit.empty())
        throw SchemaError("record is missing its scenario key");

    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) throw EnvironmentError("cannot append to " + path_.string());
    out << record_to_json(record).dump() << '\n';
    out.flush();
    if (!out) throw EnvironmentError("write failed on " + path_.string());
    ++appended_;
}

LabeledDataset load_dataset(const std::filesystem::path& dataset_path,
                            const std::optional<std::string>& language_filter) {
    std::ifstream in(dataset_path, std::ios::binary);
    if (!in) throw LoadError("cannot open dataset " + dataset_path.string(), 0);

    LabeledDataset ds;
    ds.schema_version = kFeatureSchemaVersion;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw LoadError("malformed JSON", line_no);

        DatasetRecord rec;
        try {
            rec.repo = j.at("repo").get<std::string>();
            rec.merge_commit = j.at("merge_commit").get<std::string>();
            rec.language = j.at("language").get<std::string>();
            rec.op = combine_op_from_string(j.at("operator").get<std::string>());
            rec.features = j.at("features").get<std::vector<double>>();
            rec.label = label_from_string(j.at("label").get<std::string>(), line_no);
            rec.git_version = j.value("git_version", "");
            rec.schema_version = j.value("schema_version", "");
        } catch (const LoadError&) {
            throw;
        } catch (const std::exception& e) {
            throw LoadError(std::string("bad record: ") + e.what(), line_no);
        }
        if (rec.features.size() != vector_width(rec.op))
            throw LoadError("feature vector width " + std::to_string(rec.features.size()) +
                                " does not fit operator " + to_string(rec.op),
                            line_no);
        if (rec.schema_version != kFeatureSchemaVersion)
            throw LoadError("schema version '" + rec.schema_version + "' unsupported", line_no);

        if (language_filter && rec.language != *language_filter) continue;
        if (rec.label == Outcome::Conflict)
            ++ds.class_counts.conflicts;
        else
            ++ds.class_counts.cleans;
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

void write_dataset_meta(const std::filesystem::path& meta_path, const DatasetMeta& meta) {
    json j{
        {"schema_version", meta.schema_version},
        {"operator", meta.op},
        {"git_version", meta.git_version},
        {"mining",
         {
             {"merges_found", meta.mining.merges_found},
             {"octopus_skipped", meta.mining.octopus_skipped},
             {"no_base_skipped", meta.mining.no_base_skipped},
             {"replay_errors", meta.mining.replay_errors},
             {"conflicts", meta.mining.conflicts},
             {"cleans", meta.mining.cleans},
         }},
    };
    std::ofstream out(meta_path, std::ios::binary | std::ios::trunc);
    if (!out) throw EnvironmentError("cannot write " + meta_path.string());
    out << j.dump(2) << '\n';
}

DatasetMeta read_dataset_meta(const std::filesystem::path& meta_path) {
    std::ifstream in(meta_path, std::ios::binary);
    if (!in) throw LoadError("cannot open meta " + meta_path.string(), 0);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw LoadError("malformed meta JSON", 1);
    DatasetMeta meta;
    try {
        meta.schema_version = j.at("schema_version").get<std::string>();
        meta.op = j.at("operator").get<std::string>();
        meta.git_version = j.at("git_version").get<std::string>();
        const auto& m = j.at("mining");
        meta.mining.merges_found = m.at("merges_found").get<std::uint64_t>();
        meta.mining.octopus_skipped = m.at("octopus_skipped").get<std::uint64_t>();
        meta.mining.no_base_skipped = m.at("no_base_skipped").get<std::uint64_t>();
        meta.mining.replay_errors = m.at("replay_errors").get<std::uint64_t>();
        meta.mining.conflicts = m.at("conflicts").get<std::uint64_t>();
        meta.mining.cleans = m.at("cleans").get<std::uint64_t>();
    } catch (const std::exception& e) {
        throw LoadError(std::string("bad meta: ") + e.what(), 1);
    }
    return meta;
}

void export_csv(const LabeledDataset& dataset, CombineOp op,
                const std::filesystem::path& csv_path) {
    std::ofstream out(csv_path, std::ios::binary | std::ios::trunc);
    if (!out) throw EnvironmentError("cannot write " + csv_path.string());

    out << "repo,merge_commit,language,label";
    for (const auto& f : feature_schema(op)) out << ',' << f.name;
    out << '\n';

    for (const auto& rec : dataset.records) {
        if (rec.features.size() != vector_width(op))
            throw SchemaError("record width does not match export operator");
        // identifying fields never contain commas or quotes in git data, but
        // quote them anyway to stay a well-formed CSV
        auto quoted = [](const std::string& s) {
            std::string q = "\"";
            for (char c : s) {
                if (c == '"') q += "\"\"";
                else q += c;
            }
            return q + "\"";
        };
        out << quoted(rec.repo) << ',' << quoted(rec.merge_commit) << ',' << quoted(rec.language)
            << ',' << label_name(rec.label);
        for (double v : rec.features) out << ',' << json(v).dump();
        out << '\n';
    }
    if (!out) throw EnvironmentError("write failed on " + csv_path.string());
}

}  // namespace mergecast
