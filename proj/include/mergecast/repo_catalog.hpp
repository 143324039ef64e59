#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mergecast {

// Catalog ingestion and clone management. Rows come from an upstream
// selection step; this module only materializes them on disk.

struct RepoSpec {
    std::string name;      // owner/name
    std::string url;       // anything `git clone` accepts, incl. local paths
    std::string language;
    bool skip = false;
    std::optional<std::uint64_t> size_hint;  // bytes, rarely known
};

enum class RepoStatus { Ready, TooLarge, CloneFailed, Skipped };

inline const char* to_string(RepoStatus s) {
    switch (s) {
        case RepoStatus::Ready: return "ready";
        case RepoStatus::TooLarge: return "too_large";
        case RepoStatus::CloneFailed: return "clone_failed";
        case RepoStatus::Skipped: return "skipped";
    }
    return "?";
}

struct LocalRepo {
    RepoSpec spec;
    std::filesystem::path path;  // empty unless Ready
    std::string head;            // empty unless Ready
    std::int64_t acquired_at = 0;
    RepoStatus status = RepoStatus::CloneFailed;
    std::string detail;  // stderr tail / reason for non-Ready states
};

// Reads the UTF-8 CSV catalog (`name,url,language,skip` header, skip in
// {0,1}). Rows come back in file order; duplicate names and malformed rows
// raise CatalogError with the 1-based line number.
std::vector<RepoSpec> load_catalog(const std::filesystem::path& file);

// Directory name a spec's clone lives under; injective in the spec name.
std::string clone_dir_name(const std::string& spec_name);

// Clones (or refreshes) one repository under workdir, enforcing the on-disk
// size cap after the fact. Per-repo failures come back as a status, never an
// exception; an unusable workdir raises EnvironmentError. Safe to call
// concurrently for distinct specs; a per-spec lock file serializes callers
// that race on the same one.
LocalRepo acquire(const RepoSpec& spec, const std::filesystem::path& workdir,
                  std::uint64_t size_cap_bytes);

}  // namespace mergecast
