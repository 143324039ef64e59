#pragma once

#include <stdexcept>
#include <string>

namespace mergecast {

// Base class for everything this toolchain throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// git executable missing, worktree unusable, restoration failed, ...
class EnvironmentError : public Error {
public:
    using Error::Error;
};

// A git subprocess exceeded its deadline. Carries whatever output was
// captured before the kill.
class TimeoutError : public Error {
public:
    TimeoutError(const std::string& msg, std::string partial_stdout, std::string partial_stderr)
        : Error(msg),
          partial_stdout(std::move(partial_stdout)),
          partial_stderr(std::move(partial_stderr)) {}

    std::string partial_stdout;
    std::string partial_stderr;
};

// Malformed git output. byte_offset points at the first offending byte.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t byte_offset)
        : Error(msg + " (at byte " + std::to_string(byte_offset) + ")"),
          byte_offset(byte_offset) {}

    std::size_t byte_offset;
};

// Catalog file problems; line is 1-based.
class CatalogError : public Error {
public:
    CatalogError(const std::string& msg, std::size_t line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line(line) {}

    std::size_t line;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

// Invalid commit range handed to a feature extraction query.
class RangeError : public Error {
public:
    using Error::Error;
};

// A feature-set extraction failed; names the feature set.
class ExtractionError : public Error {
public:
    ExtractionError(const std::string& msg, int feature_set)
        : Error("feature set " + std::to_string(feature_set) + ": " + msg),
          feature_set(feature_set) {}

    int feature_set;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Record/model shape does not match the dataset schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

// Second concurrent writer on a dataset.
class LockError : public Error {
public:
    using Error::Error;
};

// Corrupt dataset file; line is 1-based.
class LoadError : public Error {
public:
    LoadError(const std::string& msg, std::size_t line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line(line) {}

    std::size_t line;
};

// Constant input where rank correlation needs variation.
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

class ModelStateError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

// A class has fewer members than the requested fold count.
class FoldError : public Error {
public:
    using Error::Error;
};

class InputError : public Error {
public:
    using Error::Error;
};

}  // namespace mergecast
