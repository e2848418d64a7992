#pragma once

#include <stdexcept>
#include <string>

namespace cryptomove {

// Error taxonomy. The CLI maps each family onto a process exit code.

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data could not be read or violates a domain invariant.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : DataError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public DataError {
public:
    using DataError::DataError;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Loss became non-finite during optimisation.
class TrainingDiverged : public TrainingError {
public:
    explicit TrainingDiverged(int epoch)
        : TrainingError("training diverged at epoch " + std::to_string(epoch)), epoch_(epoch) {}

    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cryptomove
