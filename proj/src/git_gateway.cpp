#include "mergecast/git_gateway.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <mutex>

#include "mergecast/errors.hpp"

namespace mergecast {

namespace {

void drain_fd(int fd, std::string& sink) {
    char buf[16384];
    for (;;) {
        ssize_t n = ::read(fd, buf, sizeof(buf));
        if (n > 0) {
            sink.append(buf, static_cast<std::size_t>(n));
        } else {
            break;  // EOF, EAGAIN or error; caller decides via poll
        }
    }
}

bool is_hex40(std::string_view s) {
    if (s.size() != 40) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
    });
}

}  // namespace

CommandResult run_process(const std::string& exe,
                          const std::vector<std::string>& args,
                          const std::filesystem::path& cwd,
                          std::chrono::duration<double> timeout,
                          const EnvMap& extra_env) {
    int out_pipe[2], err_pipe[2], exec_pipe[2];
    if (::pipe(out_pipe) < 0 || ::pipe(err_pipe) < 0 || ::pipe(exec_pipe) < 0)
        throw EnvironmentError("pipe() failed: " + std::string(std::strerror(errno)));
    ::fcntl(exec_pipe[1], F_SETFD, FD_CLOEXEC);

    const auto start = std::chrono::steady_clock::now();
    const auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(timeout);

    pid_t pid = ::fork();
    if (pid < 0) throw EnvironmentError("fork() failed: " + std::string(std::strerror(errno)));

    if (pid == 0) {
        ::close(out_pipe[0]);
        ::close(err_pipe[0]);
        ::close(exec_pipe[0]);
        int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::dup2(err_pipe[1], STDERR_FILENO);
        ::close(out_pipe[1]);
        ::close(err_pipe[1]);
        if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) {
            int e = errno;
            (void)!::write(exec_pipe[1], &e, sizeof(e));
            ::_exit(127);
        }
        for (const auto& [k, v] : extra_env) ::setenv(k.c_str(), v.c_str(), 1);
        std::vector<char*> argv;
        argv.push_back(const_cast<char*>(exe.c_str()));
        for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
        argv.push_back(nullptr);
        ::execvp(exe.c_str(), argv.data());
        int e = errno;
        (void)!::write(exec_pipe[1], &e, sizeof(e));
        ::_exit(127);
    }

    ::close(out_pipe[1]);
    ::close(err_pipe[1]);
    ::close(exec_pipe[1]);
    ::fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);
    ::fcntl(err_pipe[0], F_SETFL, O_NONBLOCK);

    CommandResult result;
    bool out_open = true, err_open = true;
    bool timed_out = false;

    while (out_open || err_open) {
        if (std::chrono::steady_clock::now() >= deadline) {
            timed_out = true;
            ::kill(pid, SIGKILL);
        }
        struct pollfd fds[2];
        int nfds = 0;
        if (out_open) fds[nfds++] = {out_pipe[0], POLLIN, 0};
        if (err_open) fds[nfds++] = {err_pipe[0], POLLIN, 0};
        ::poll(fds, static_cast<nfds_t>(nfds), timed_out ? 0 : 10);
        for (int i = 0; i < nfds; ++i) {
            if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
            std::string& sink = (fds[i].fd == out_pipe[0]) ? result.out : result.err;
            char buf[16384];
            ssize_t n;
            while ((n = ::read(fds[i].fd, buf, sizeof(buf))) > 0)
                sink.append(buf, static_cast<std::size_t>(n));
            if (n == 0 || (n < 0 && errno != EAGAIN && errno != EINTR)) {
                if (fds[i].fd == out_pipe[0]) out_open = false;
                else err_open = false;
            }
        }
        if (timed_out) {
            // One last non-blocking drain, then stop reading.
            drain_fd(out_pipe[0], result.out);
            drain_fd(err_pipe[0], result.err);
            break;
        }
    }

    ::close(out_pipe[0]);
    ::close(err_pipe[0]);

    int status = 0;
    ::waitpid(pid, &status, 0);
    result.duration = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);

    int child_errno = 0;
    ssize_t got = ::read(exec_pipe[0], &child_errno, sizeof(child_errno));
    ::close(exec_pipe[0]);
    if (got == static_cast<ssize_t>(sizeof(child_errno)))
        throw EnvironmentError("cannot execute '" + exe + "': " + std::strerror(child_errno));

    if (timed_out)
        throw TimeoutError("'" + exe + "' exceeded its deadline", std::move(result.out),
                           std::move(result.err));

    if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status)) result.exit_code = 128 + WTERMSIG(status);
    else result.exit_code = -1;
    return result;
}

CommandResult run_git(const std::filesystem::path& repo_path,
                      const std::vector<std::string>& args,
                      std::chrono::duration<double> timeout,
                      const EnvMap& extra_env) {
    // Pinned environment: stable phrasing (C locale), no user/system config
    // bleeding into replays, no interactive prompts, and a fallback identity
    // so replay merges can create commits anywhere.
    EnvMap env = {
        {"LC_ALL", "C"},
        {"LANG", "C"},
        {"GIT_TERMINAL_PROMPT", "0"},
        {"GIT_CONFIG_GLOBAL", "/dev/null"},
        {"GIT_CONFIG_SYSTEM", "/dev/null"},
        {"GIT_PAGER", "cat"},
        {"GIT_EDITOR", "true"},
        {"GIT_AUTHOR_NAME", "mergecast"},
        {"GIT_AUTHOR_EMAIL", "mergecast@localhost"},
        {"GIT_COMMITTER_NAME", "mergecast"},
        {"GIT_COMMITTER_EMAIL", "mergecast@localhost"},
    };
    for (const auto& [k, v] : extra_env) env[k] = v;

    std::vector<std::string> full;
    full.reserve(args.size() + 2);
    full.emplace_back("-C");
    full.push_back(repo_path.string());
    full.insert(full.end(), args.begin(), args.end());
    return run_process("git", full, {}, timeout, env);
}

std::vector<std::string> log_format_args() {
    return {"-z", std::string("--pretty=format:") + kLogFormat};
}

std::vector<CommitMeta> parse_log_records(const std::string& output) {
    std::vector<CommitMeta> commits;
    if (output.empty()) return commits;

    // Five NUL-delimited fields per record; the final field has no trailing
    // NUL. Offsets are tracked for error reporting.
    std::size_t pos = 0;
    const std::size_t n = output.size();
    while (pos < n) {
        std::size_t record_start = pos;
        std::string_view fields[5];
        for (int f = 0; f < 5; ++f) {
            std::size_t end = output.find('\0', pos);
            if (end == std::string::npos) {
                if (f < 4)
                    throw ParseError("truncated log record (expected 5 fields)", record_start);
                end = n;
            }
            fields[f] = std::string_view(output).substr(pos, end - pos);
            pos = (end == n) ? n : end + 1;
        }

        CommitMeta meta;
        if (!is_hex40(fields[0]))
            throw ParseError("malformed commit hash '" + std::string(fields[0]) + "'", record_start);
        meta.id = std::string(fields[0]);

        std::string_view parents = fields[1];
        std::size_t p = 0;
        while (p < parents.size()) {
            std::size_t sp = parents.find(' ', p);
            std::string_view one = parents.substr(p, sp == std::string_view::npos ? sp : sp - p);
            if (!is_hex40(one))
                throw ParseError("malformed parent hash '" + std::string(one) + "'", record_start);
            meta.parent_ids.emplace_back(one);
            if (sp == std::string_view::npos) break;
            p = sp + 1;
        }

        meta.author_email = std::string(fields[2]);

        auto ts = fields[3];
        auto [ptr, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), meta.author_timestamp);
        if (ec != std::errc() || ptr != ts.data() + ts.size())
            throw ParseError("malformed author timestamp '" + std::string(ts) + "'", record_start);

        meta.message = std::string(fields[4]);
        commits.push_back(std::move(meta));
    }
    return commits;
}

namespace {

// Splits either a -z token stream or a plain newline-separated listing into
// raw tokens/lines. The caller interprets structure.
std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t end = s.find(sep, pos);
        if (end == std::string::npos) end = s.size();
        out.push_back(s.substr(pos, end - pos));
        pos = end + 1;
    }
    return out;
}

std::optional<std::uint64_t> parse_count(std::string_view s, std::size_t offset) {
    if (s == "-") return std::nullopt;  // binary file
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError("malformed numstat count '" + std::string(s) + "'", offset);
    return v;
}

struct NumstatEntry {
    std::optional<std::uint64_t> added, deleted;
    std::optional<std::string> old_path;
};

// numstat -z: "a\tb\tpath" for single-path records, "a\tb\t" followed by two
// extra tokens (old, new) for renames/copies.
std::map<std::string, NumstatEntry> parse_numstat(const std::string& text) {
    std::map<std::string, NumstatEntry> out;
    const bool zsep = text.find('\0') != std::string::npos;
    std::vector<std::string> tokens = split_on(text, zsep ? '\0' : '\n');
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::string& tok = tokens[i];
        if (tok.empty()) continue;
        std::size_t t1 = tok.find('\t');
        std::size_t t2 = t1 == std::string::npos ? std::string::npos : tok.find('\t', t1 + 1);
        if (t2 == std::string::npos)
            throw ParseError("malformed numstat record '" + tok + "'", 0);
        NumstatEntry e;
        e.added = parse_count(std::string_view(tok).substr(0, t1), 0);
        e.deleted = parse_count(std::string_view(tok).substr(t1 + 1, t2 - t1 - 1), 0);
        std::string pathpart = tok.substr(t2 + 1);
        if (zsep && pathpart.empty()) {
            if (i + 2 >= tokens.size())
                throw ParseError("truncated numstat rename record", 0);
            e.old_path = tokens[i + 1];
            out[tokens[i + 2]] = std::move(e);
            i += 2;
            continue;
        }
        // Plain-mode rename spellings: "old => new" and "pre{old => new}post".
        std::size_t brace = pathpart.find('{');
        std::size_t arrow = pathpart.find(" => ");
        if (brace != std::string::npos && arrow != std::string::npos && arrow > brace) {
            std::size_t close = pathpart.find('}', arrow);
            if (close == std::string::npos)
                throw ParseError("malformed numstat rename '" + pathpart + "'", 0);
            std::string pre = pathpart.substr(0, brace);
            std::string post = pathpart.substr(close + 1);
            e.old_path = pre + pathpart.substr(brace + 1, arrow - brace - 1) + post;
            out[pre + pathpart.substr(arrow + 4, close - arrow - 4) + post] = std::move(e);
        } else if (arrow != std::string::npos) {
            e.old_path = pathpart.substr(0, arrow);
            out[pathpart.substr(arrow + 4)] = std::move(e);
        } else {
            out[pathpart] = std::move(e);
        }
    }
    return out;
}

struct StatusEntry {
    ChangeKind kind;
    std::string path;
    std::optional<std::string> old_path;
};

ChangeKind kind_from_letter(char c, const std::string& token) {
    switch (c) {
        case 'A': return ChangeKind::Added;
        case 'D': return ChangeKind::Deleted;
        case 'M': return ChangeKind::Modified;
        case 'T': return ChangeKind::Modified;  // typechange = content change in place
        case 'R': return ChangeKind::Renamed;
        case 'C': return ChangeKind::Copied;
        default:
            throw ParseError("unsupported status letter in '" + token + "'", 0);
    }
}

std::vector<StatusEntry> parse_name_status(const std::string& text) {
    std::vector<StatusEntry> out;
    const bool zsep = text.find('\0') != std::string::npos;
    if (zsep) {
        std::vector<std::string> tokens = split_on(text, '\0');
        std::size_t i = 0;
        while (i < tokens.size()) {
            if (tokens[i].empty()) { ++i; continue; }
            const std::string& st = tokens[i];
            ChangeKind kind = kind_from_letter(st[0], st);
            bool two_paths = (st[0] == 'R' || st[0] == 'C');
            if (i + 1 + (two_paths ? 1 : 0) >= tokens.size())
                throw ParseError("truncated name-status record '" + st + "'", 0);
            StatusEntry e{kind, {}, {}};
            if (two_paths) {
                e.old_path = tokens[i + 1];
                e.path = tokens[i + 2];
                i += 3;
            } else {
                e.path = tokens[i + 1];
                i += 2;
            }
            out.push_back(std::move(e));
        }
    } else {
        for (const std::string& line : split_on(text, '\n')) {
            if (line.empty()) continue;
            std::size_t t1 = line.find('\t');
            if (t1 == std::string::npos)
                throw ParseError("malformed name-status line '" + line + "'", 0);
            std::string st = line.substr(0, t1);
            ChangeKind kind = kind_from_letter(st[0], st);
            StatusEntry e{kind, {}, {}};
            std::size_t t2 = line.find('\t', t1 + 1);
            if (st[0] == 'R' || st[0] == 'C') {
                if (t2 == std::string::npos)
                    throw ParseError("rename/copy record missing second path: '" + line + "'", 0);
                e.old_path = line.substr(t1 + 1, t2 - t1 - 1);
                e.path = line.substr(t2 + 1);
            } else {
                e.path = line.substr(t1 + 1);
            }
            out.push_back(std::move(e));
        }
    }
    return out;
}

}  // namespace

std::vector<FileChange> parse_changes(const std::string& numstat_output,
                                      const std::string& name_status_output) {
    auto numstat = parse_numstat(numstat_output);
    auto statuses = parse_name_status(name_status_output);

    std::vector<FileChange> out;
    out.reserve(statuses.size());
    for (const auto& st : statuses) {
        auto it = numstat.find(st.path);
        if (it == numstat.end())
            throw ParseError("path '" + st.path + "' in name-status but not numstat", 0);
        FileChange fc;
        fc.kind = st.kind;
        fc.path = st.path;
        fc.old_path = st.old_path;
        fc.lines_added = it->second.added;
        fc.lines_deleted = it->second.deleted;
        out.push_back(std::move(fc));
        numstat.erase(it);
    }
    if (!numstat.empty())
        throw ParseError("path '" + numstat.begin()->first + "' in numstat but not name-status", 0);
    return out;
}

const std::string& git_version() {
    static std::string version = [] {
        CommandResult r = run_process("git", {"--version"}, {}, std::chrono::seconds(30), {});
        if (!r.ok()) throw EnvironmentError("git --version failed: " + r.err);
        std::string v = r.out;
        while (!v.empty() && (v.back() == '\n' || v.back() == '\r')) v.pop_back();
        return v;
    }();
    return version;
}

}  // namespace mergecast
