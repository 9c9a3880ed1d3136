#pragma once

#include <stdexcept>
#include <string>

namespace sysid {

// Exit-code families used by the CLI: data problems map to 2, numeric to 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class SchemaError : public DataError {
public:
    using DataError::DataError;
};

class FormatError : public DataError {
public:
    using DataError::DataError;
};

class UnitError : public DataError {
public:
    using DataError::DataError;
};

class HullError : public DataError {
public:
    using DataError::DataError;
};

class ConfigError : public DataError {
public:
    using DataError::DataError;
};

class InsufficientDataError : public DataError {
public:
    using DataError::DataError;
};

class ExtrapolationError : public DataError {
public:
    using DataError::DataError;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class ConditioningError : public NumericError {
public:
    ConditioningError(const std::string& what, double pivot)
        : NumericError(what), smallest_pivot(pivot) {}
    double smallest_pivot;
};

class DivergenceError : public NumericError {
public:
    DivergenceError(const std::string& what, double t) : NumericError(what), time(t) {}
    double time;
};

class NoTrimError : public NumericError {
public:
    NoTrimError(const std::string& what, double res) : NumericError(what), residual(res) {}
    double residual;
};

}  // namespace sysid
