#ifndef TEFS_ERRORS_HPP
#define TEFS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tefs {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad inputs: malformed files, invalid parameters, contract violations.
/// CLI maps these to exit code 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Failures that arise during computation on well-formed inputs.
/// CLI maps these to exit code 1.
class NumericError : public Error {
public:
    using Error::Error;
};

struct MissingColumn : ValidationError {
    explicit MissingColumn(const std::string& name)
        : ValidationError("column not found: " + name) {}
};

struct ParseError : ValidationError {
    ParseError(long row, long col, const std::string& detail)
        : ValidationError("parse error at row " + std::to_string(row) + ", column "
                          + std::to_string(col) + ": " + detail),
          row(row), col(col) {}
    long row;
    long col;
};

struct NonFiniteValue : ValidationError {
    NonFiniteValue(long row, long col)
        : ValidationError("non-finite value at row " + std::to_string(row) + ", column "
                          + std::to_string(col)),
          row(row), col(col) {}
    long row;
    long col;
};

struct TooFewRows : ValidationError {
    explicit TooFewRows(long t)
        : ValidationError("need at least 2 rows, got " + std::to_string(t)) {}
};

struct ZeroVariance : ValidationError {
    explicit ZeroVariance(const std::string& column)
        : ValidationError("zero variance in column: " + column), column(column) {}
    std::string column;
};

struct LagTooLarge : ValidationError {
    LagTooLarge(int lag, long t)
        : ValidationError("lag " + std::to_string(lag) + " too large for series of length "
                          + std::to_string(t)) {}
};

struct EmptyResult : ValidationError {
    EmptyResult() : ValidationError("embedding produced no rows") {}
};

struct DegenerateSplit : ValidationError {
    explicit DegenerateSplit(double fraction)
        : ValidationError("temporal split leaves an empty segment (fraction "
                          + std::to_string(fraction) + ")") {}
};

struct RowCountMismatch : ValidationError {
    RowCountMismatch() : ValidationError("input matrices disagree on row count") {}
};

struct TooFewSamples : ValidationError {
    TooFewSamples(long n, const std::string& why)
        : ValidationError("too few samples (n=" + std::to_string(n) + "): " + why) {}
};

struct NonIntegerSymbols : ValidationError {
    NonIntegerSymbols() : ValidationError("discrete plug-in estimator requires integer symbol codes") {}
};

struct OverlappingSets : ValidationError {
    OverlappingSets() : ValidationError("source and conditioning sets overlap") {}
};

struct InvalidParams : ValidationError {
    using ValidationError::ValidationError;
};

struct SingularCovariance : NumericError {
    SingularCovariance() : NumericError("covariance block is singular after ridge") {}
};

struct InvalidSpec : ValidationError {
    using ValidationError::ValidationError;
};

struct Unstable : NumericError {
    Unstable(int node, long step)
        : NumericError("simulation diverged at node " + std::to_string(node) + ", step "
                       + std::to_string(step)) {}
};

struct UnknownGraph : ValidationError {
    explicit UnknownGraph(const std::string& name)
        : ValidationError("unknown builtin graph: " + name) {}
};

struct EmptyDenominator : ValidationError {
    explicit EmptyDenominator(const std::string& what) : ValidationError(what) {}
};

struct SingularDesign : NumericError {
    SingularDesign() : NumericError("regression design matrix is rank-deficient") {}
};

struct MissingTotalTe : ValidationError {
    MissingTotalTe() : ValidationError("forward bound requires the total transfer entropy estimate") {}
};

}  // namespace tefs

#endif  // TEFS_ERRORS_HPP
