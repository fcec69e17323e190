#pragma once

#include <stdexcept>
#include <string>

namespace promptopt {

/// Root of every error the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Dataset or checkpoint content that does not parse or validate.
class DataError : public Error {
public:
    DataError(const std::string& what, std::size_t line = 0)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

    /// 1-based line number of the offending record, 0 when not line-bound.
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class CheckpointError : public DataError {
public:
    using DataError::DataError;
};

/// Evaluator failures. `attempts` counts every request that was sent.
class EvaluatorError : public Error {
public:
    EvaluatorError(const std::string& what, int attempts)
        : Error(what + " after " + std::to_string(attempts) + " attempt(s)"), attempts_(attempts) {}

    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

class TransportError : public EvaluatorError {
public:
    using EvaluatorError::EvaluatorError;
};

class TimeoutError : public EvaluatorError {
public:
    using EvaluatorError::EvaluatorError;
};

class MalformedResponseError : public EvaluatorError {
public:
    using EvaluatorError::EvaluatorError;
};

}  // namespace promptopt
