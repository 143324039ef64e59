#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mergecast/features.hpp"
#include "mergecast/merge_miner.hpp"

namespace mergecast {

// JSON-lines persistence for labeled feature records, plus the sidecar meta
// document and a CSV export. One writer at a time, any number of readers.

struct DatasetRecord {
    std::string repo;
    std::string merge_commit;
    std::string language;
    CombineOp op = CombineOp::Norm1;
    std::vector<double> features;  // width = vector_width(op)
    Outcome label = Outcome::Clean;  // Conflict or Clean; replay errors never land here
    std::string git_version;
    std::string schema_version;
};

// repo and merge commit uniquely identify a scenario across the corpus
std::string scenario_key(const std::string& repo, const std::string& merge_commit);

struct ClassCounts {
    std::uint64_t conflicts = 0;
    std::uint64_t cleans = 0;
    std::uint64_t total() const { return conflicts + cleans; }
};

struct LabeledDataset {
    std::vector<DatasetRecord> records;
    std::string schema_version;
    ClassCounts class_counts;

    // conflicts / total; empty datasets have no rate
    std::optional<double> imbalance_rate() const {
        if (records.empty()) return std::nullopt;
        return static_cast<double>(class_counts.conflicts) /
               static_cast<double>(class_counts.total());
    }
};

struct DatasetMeta {
    std::string schema_version;
    std::string op;
    std::string git_version;
    MiningStats mining;
};

// Exclusive appender. The constructor takes a lock file next to the dataset;
// a second live writer anywhere raises LockError. Records are validated
// against the schema (vector width for the operator, label domain) and each
// append is flushed through to disk.
class DatasetWriter {
public:
    DatasetWriter(std::filesystem::path dataset_path, CombineOp op);
    ~DatasetWriter();
    DatasetWriter(const DatasetWriter&) = delete;
    DatasetWriter& operator=(const DatasetWriter&) = delete;

    void append(const DatasetRecord& record);
    std::uint64_t appended() const { return appended_; }

private:
    std::filesystem::path path_;
    CombineOp op_;
    int lock_fd_ = -1;
    std::uint64_t appended_ = 0;
};

// Reads a dataset back, optionally keeping only one language. Records stay
// in file order; counts cover the kept records. Corrupt or out-of-schema
// lines raise LoadError with the 1-based line number.
LabeledDataset load_dataset(const std::filesystem::path& dataset_path,
                            const std::optional<std::string>& language_filter = std::nullopt);

void write_dataset_meta(const std::filesystem::path& meta_path, const DatasetMeta& meta);
DatasetMeta read_dataset_meta(const std::filesystem::path& meta_path);

// CSV with identifying columns, the label, and one column per schema slot.
// Numbers use the same round-trip decimal form as the JSONL records.
void export_csv(const LabeledDataset& dataset, CombineOp op,
                const std::filesystem::path& csv_path);

}  // namespace mergecast
