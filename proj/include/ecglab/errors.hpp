#pragma once

#include <stdexcept>
#include <string>

namespace ecglab {

// Base class for all pipeline errors. Subtypes map to distinct failure
// categories so callers can report them precisely (and the CLI can pick
// exit codes).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed file structure (bad magic, truncated header, unparsable field).
class FormatError : public Error {
public:
    explicit FormatError(const std::string& msg) : Error(msg) {}
};

// File parses but its contents contradict themselves (e.g. declared sample
// count does not match the body).
class IntegrityError : public Error {
public:
    explicit IntegrityError(const std::string& msg) : Error(msg) {}
};

// Invalid configuration: duplicate threshold rows, non-numeric thresholds,
// empty tables, inconsistent model dimensions.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Well-formed input carrying invalid data (non-finite lab value, label
// outside {-1,0,1}, unit mismatch).
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// Tensor/segment dimension mismatch.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// A metric that has no defined value on the given inputs, e.g. AUC with
// single-class labels. The indicator is reported as not evaluable.
class UndefinedMetricError : public Error {
public:
    explicit UndefinedMetricError(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

} // namespace ecglab
