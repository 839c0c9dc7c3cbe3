#pragma once

#include <stdexcept>
#include <string>

namespace capdeploy {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Requested feature the implementation does not provide (e.g. Sobol dim > 2).
class CapabilityError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The arrival intensity vanishes on the whole horizon, so no time grid exists.
class DegenerateGridError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A post-solve or post-simulation invariant did not hold.
class InvariantViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Config file could not be parsed or failed validation. `key` names the
/// offending entry, `line` is 0 when not tied to a line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, int line, const std::string& what)
        : std::runtime_error(what), key_(std::move(key)), line_(line) {}

    const std::string& key() const noexcept { return key_; }
    int line() const noexcept { return line_; }

private:
    std::string key_;
    int line_;
};

/// A required artifact (value table) was not found or is unreadable.
class MissingArtifact : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace capdeploy
