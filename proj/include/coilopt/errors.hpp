#pragma once

#include <stdexcept>
#include <string>

namespace coilopt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Cholesky failed even after the full jitter ladder.
class FactorizationError : public Error {
public:
    FactorizationError(const std::string& what, double max_jitter, double condition_estimate)
        : Error(what), max_jitter_(max_jitter), condition_estimate_(condition_estimate) {}

    double max_jitter() const { return max_jitter_; }
    double condition_estimate() const { return condition_estimate_; }

private:
    double max_jitter_;
    double condition_estimate_;
};

class DegenerateCrossSection : public Error {
public:
    using Error::Error;
};

class DegenerateTangent : public Error {
public:
    using Error::Error;
};

/// Raised when a generated surface fails validation. Carries the arclength
/// window (mm along the centerline) where the problem was found.
class GeometryInvalid : public Error {
public:
    GeometryInvalid(const std::string& what, double s_begin, double s_end)
        : Error(what), s_begin_(s_begin), s_end_(s_end) {}

    double s_begin() const { return s_begin_; }
    double s_end() const { return s_end_; }

private:
    double s_begin_;
    double s_end_;
};

class SolverFailure : public Error {
public:
    using Error::Error;
};

class EmptyTrace : public Error {
public:
    using Error::Error;
};

}  // namespace coilopt
