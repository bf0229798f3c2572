#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pulsesync {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input: malformed parameters, out-of-domain arguments.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Raised for malformed experiment configurations (CLI exit code 2).
class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Numerical failures (CLI exit code 3).
class NumericalError : public Error {
public:
    using Error::Error;
};

class RowSumMismatch : public InvalidArgument {
public:
    RowSumMismatch(std::size_t worst_row, double deviation);
    std::size_t worst_row() const noexcept { return worst_row_; }
    double deviation() const noexcept { return deviation_; }

private:
    std::size_t worst_row_;
    double deviation_;
};

class DefectiveMatrix : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class StepTooLarge : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class HistoryRangeError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class EventFlood : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class QuadratureError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InfiniteSyncTime : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NonDecayingMode : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NoDecay : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class TrajectoryTooShort : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

}  // namespace pulsesync
