#pragma once

#include <stdexcept>
#include <string>

namespace gainform {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad or inconsistent input data (CLI exit code 2).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A numeric procedure failed or refused to return a result (CLI exit code 3).
class NumericError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NotSymmetric : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NotHurwitz : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InadmissibleWeights : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class IncompatibleInputWidths : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NotDiagonalA : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class UnstableClosedLoop : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NotStable : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class SingularStateMatrix : public NumericError {
public:
    using NumericError::NumericError;
};

class NoConvergence : public NumericError {
public:
    using NumericError::NumericError;
};

class NoStabilizingSolution : public NumericError {
public:
    using NumericError::NumericError;
};

class IllConditionedSubspace : public NumericError {
public:
    using NumericError::NumericError;
};

class NonFiniteResult : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace gainform
