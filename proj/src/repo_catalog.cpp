#include "mergecast/repo_catalog.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cctype>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "mergecast/errors.hpp"
#include "mergecast/git_gateway.hpp"

namespace mergecast {
namespace {

// Minimal CSV field splitter: double quotes wrap fields, "" inside quotes is
// a literal quote. Good enough for name/url/language rows.
std::vector<std::string> split_csv_row(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) throw CatalogError("unterminated quote", line_no);
    fields.push_back(cur);
    return fields;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

std::uint64_t disk_usage(const std::filesystem::path& root) {
    std::uint64_t total = 0;
    std::error_code ec;
    for (auto it = std::filesystem::recursive_directory_iterator(
             root, std::filesystem::directory_options::skip_permission_denied, ec);
         it != std::filesystem::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) break;
        if (it->is_regular_file(ec)) total += it->file_size(ec);
    }
    return total;
}

std::string tail_of(const std::string& text, std::size_t max_bytes = 2000) {
    if (text.size() <= max_bytes) return text;
    return text.substr(text.size() - max_bytes);
}

// Holds an flock'd file descriptor for the duration of one acquisition.
class SpecLock {
public:
    SpecLock(const std::filesystem::path& lock_dir, const std::string& dir_name) {
        std::filesystem::create_directories(lock_dir);
        auto lock_path = lock_dir / (dir_name + ".lock");
        fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
        if (fd_ < 0) throw EnvironmentError("cannot open lock file " + lock_path.string());
        if (::flock(fd_, LOCK_EX) != 0) {
            ::close(fd_);
            throw EnvironmentError("cannot lock " + lock_path.string());
        }
    }
    ~SpecLock() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }
    SpecLock(const SpecLock&) = delete;
    SpecLock& operator=(const SpecLock&) = delete;

private:
    int fd_ = -1;
};

bool is_git_repo(const std::filesystem::path& path) {
    if (!std::filesystem::is_directory(path)) return false;
    auto res = run_git(path, {"rev-parse", "--git-dir"});
    return res.ok();
}

}  // namespace

std::vector<RepoSpec> load_catalog(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw CatalogError("cannot open catalog " + file.string(), 0);

    std::vector<RepoSpec> specs;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        if (!header_seen) {
            if (line != "name,url,language,skip")
                throw CatalogError("expected header 'name,url,language,skip', got '" + line + "'",
                                   line_no);
            header_seen = true;
            continue;
        }
        auto fields = split_csv_row(line, line_no);
        if (fields.size() != 4)
            throw CatalogError("expected 4 fields, got " + std::to_string(fields.size()), line_no);
        RepoSpec spec;
        spec.name = fields[0];
        spec.url = fields[1];
        spec.language = fields[2];
        if (spec.name.empty()) throw CatalogError("empty name", line_no);
        if (spec.url.empty()) throw CatalogError("empty url", line_no);
        if (spec.language.empty()) throw CatalogError("empty language", line_no);
        if (fields[3] == "0")
            spec.skip = false;
        else if (fields[3] == "1")
            spec.skip = true;
        else
            throw CatalogError("skip must be 0 or 1, got '" + fields[3] + "'", line_no);
        if (!seen.insert(spec.name).second)
            throw CatalogError("duplicate repository name '" + spec.name + "'", line_no);
        specs.push_back(std::move(spec));
    }
    if (!header_seen && line_no > 0)
        throw CatalogError("catalog has no header", 1);
    return specs;
}

std::string clone_dir_name(const std::string& spec_name) {
    // '/' becomes "__"; '_' and anything exotic is %XX-escaped so distinct
    // names can never collide on disk.
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : spec_name) {
        if (c == '/') {
            out += "__";
        } else if (std::isalnum(c) || c == '.' || c == '-') {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 0xF];
        }
    }
    return out;
}

LocalRepo acquire(const RepoSpec& spec, const std::filesystem::path& workdir,
                  std::uint64_t size_cap_bytes) {
    LocalRepo result;
    result.spec = spec;
    result.acquired_at = static_cast<std::int64_t>(::time(nullptr));

    if (spec.skip) {
        result.status = RepoStatus::Skipped;
        result.detail = "marked skip in catalog";
        return result;
    }

    std::error_code ec;
    std::filesystem::create_directories(workdir, ec);
    if (ec || !std::filesystem::is_directory(workdir))
        throw EnvironmentError("workdir not usable: " + workdir.string());

    const std::string dir_name = clone_dir_name(spec.name);
    const auto clone_path = workdir / dir_name;
    SpecLock lock(workdir / ".locks", dir_name);

    auto fail = [&](const std::string& why) {
        std::filesystem::remove_all(clone_path, ec);
        result.status = RepoStatus::CloneFailed;
        result.detail = why;
        return result;
    };

    if (is_git_repo(clone_path)) {
        auto fetch = run_git(clone_path, {"fetch", "--all", "--prune", "-q"},
                             std::chrono::duration<double>(600.0));
        if (!fetch.ok()) result.detail = "fetch failed: " + tail_of(fetch.err);
    } else {
        std::filesystem::remove_all(clone_path, ec);
        auto clone = run_process("git", {"clone", "-q", spec.url, clone_path.string()}, workdir,
                                 std::chrono::duration<double>(3600.0));
        if (!clone.ok()) return fail("clone failed: " + tail_of(clone.err));
    }

    std::uint64_t used = disk_usage(clone_path);
    if (used > size_cap_bytes) {
        std::filesystem::remove_all(clone_path, ec);
        result.status = RepoStatus::TooLarge;
        result.detail = std::to_string(used) + " bytes on disk, cap " +
                        std::to_string(size_cap_bytes);
        return result;
    }

    auto head = run_git(clone_path, {"rev-parse", "HEAD"});
    if (!head.ok()) return fail("no resolvable HEAD: " + tail_of(head.err));

    result.path = clone_path;
    result.head = head.out.substr(0, head.out.find_first_of("\r\n"));
    result.status = RepoStatus::Ready;
    return result;
}

}  // namespace mergecast
