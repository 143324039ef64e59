#include "mergecast/config.hpp"

#include <cstdlib>
#include <fstream>
#include <limits>
#include <string>

#include "mergecast/errors.hpp"

namespace mergecast {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, std::size_t line) {
    throw ConfigError("bad value '" + value + "' for config key '" + key + "' (line " +
                      std::to_string(line) + ")");
}

std::uint64_t parse_u64(const std::string& key, const std::string& value, std::size_t line) {
    std::size_t used = 0;
    unsigned long long parsed = 0;
    try {
        parsed = std::stoull(value, &used);
    } catch (const std::exception&) {
        bad_value(key, value, line);
    }
    if (used != value.size() || value.front() == '-') bad_value(key, value, line);
    return parsed;
}

int parse_int(const std::string& key, const std::string& value, std::size_t line) {
    const std::uint64_t parsed = parse_u64(key, value, line);
    if (parsed > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) {
        bad_value(key, value, line);
    }
    return static_cast<int>(parsed);
}

bool parse_bool(const std::string& key, const std::string& value, std::size_t line) {
    if (value == "true") return true;
    if (value == "false") return false;
    bad_value(key, value, line);
}

void apply_key(RunConfig& config, const std::string& key, const std::string& value,
               std::size_t line) {
    if (key == "workdir") {
        config.workdir = value;
    } else if (key == "catalog") {
        config.catalog = value;
    } else if (key == "merge_limit") {
        config.merge_limit = parse_u64(key, value, line);
    } else if (key == "operator") {
        try {
            config.op = combine_op_from_string(value);
        } catch (const ConfigError&) {
            bad_value(key, value, line);
        }
    } else if (key == "folds") {
        config.folds = parse_int(key, value, line);
    } else if (key == "seed") {
        config.seed = parse_u64(key, value, line);
    } else if (key == "language") {
        config.language = value;
    } else if (key == "jobs") {
        config.jobs = parse_u64(key, value, line);
    } else if (key == "size_cap_mb") {
        config.size_cap_bytes = parse_u64(key, value, line) * (std::uint64_t{1} << 20);
    } else if (key == "grid") {
        config.use_grid = parse_bool(key, value, line);
    } else if (key == "min_samples_leaf") {
        config.params.min_samples_leaf = parse_int(key, value, line);
    } else if (key == "min_samples_split") {
        config.params.min_samples_split = parse_int(key, value, line);
    } else if (key == "max_depth") {
        config.params.max_depth = parse_int(key, value, line);
    } else if (key == "n_estimators") {
        config.params.n_estimators = parse_int(key, value, line);
    } else if (key == "feature_subset_size") {
        config.params.feature_subset_size = parse_int(key, value, line);
    } else {
        throw ConfigError("unknown config key '" + key + "' (line " + std::to_string(line) + ")");
    }
}

}  // namespace

void apply_config_file(RunConfig& config, const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw ConfigError("cannot read config file " + file.string());
    }
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string entry = trim(raw);
        if (entry.empty()) continue;
        const auto eq = entry.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("expected 'key = value' (line " + std::to_string(line_no) + ")");
        }
        const std::string key = trim(entry.substr(0, eq));
        const std::string value = unquote(trim(entry.substr(eq + 1)));
        if (key.empty()) {
            throw ConfigError("empty config key (line " + std::to_string(line_no) + ")");
        }
        apply_key(config, key, value, line_no);
    }
}

RunConfig load_config(const std::filesystem::path& file) {
    RunConfig config;
    apply_config_file(config, file);
    return config;
}

std::optional<std::filesystem::path> env_workdir() {
    const char* value = std::getenv("MERGECAST_WORKDIR");
    if (value == nullptr || *value == '\0') return std::nullopt;
    return std::filesystem::path(value);
}

std::filesystem::path dataset_path(const RunConfig& config) {
    return config.workdir / "dataset.jsonl";
}

std::filesystem::path dataset_meta_path(const RunConfig& config) {
    return config.workdir / "dataset.meta.json";
}

std::filesystem::path language_model_path(const RunConfig& config, const std::string& language) {
    return config.workdir / ("model-" + language + ".json");
}

}  // namespace mergecast
