#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gasfl {

// Base for every error raised by the library. Subclasses carry the category so
// callers (and the CLI exit path) can report it without string matching.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SchemaError : public Error {
public:
    SchemaError(const std::string& what, std::string column)
        : Error(what), column_(std::move(column)) {}
    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

// Row indices are 1-based data rows (the header line is not counted).
class ValidationError : public Error {
public:
    ValidationError(const std::string& what, std::size_t row)
        : Error(what + " (row " + std::to_string(row) + ")"), row_(row) {}
    explicit ValidationError(const std::string& what) : Error(what), row_(0) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class AlignmentError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class RoutingError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace gasfl
