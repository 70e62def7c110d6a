#ifndef SKILLTRACK_ERROR_HPP
#define SKILLTRACK_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace skilltrack {

/// Base for every error raised by the library. `exit_code()` is the process
/// exit status the CLI maps the error to.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 5; }
};

class MissingInputError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

/// Malformed text. Carries the 1-based line number when one applies (0 = none).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }
    int exit_code() const noexcept override { return 3; }

private:
    std::size_t line_;
};

/// Well-formed text that violates the declared schema (e.g. embedding length).
class SchemaError : public ParseError {
public:
    using ParseError::ParseError;
};

/// Argument or value outside its documented domain.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Inputs that are individually valid but inconsistent with each other.
class ConsistencyError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

class EstimationError : public Error {
public:
    using Error::Error;
};

class SequenceError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

class TrainingError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

}  // namespace skilltrack

#endif
