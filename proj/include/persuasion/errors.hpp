#pragma once

#include <stdexcept>
#include <string>

namespace persuasion {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A document or constructed value violates a type invariant. `path` names
/// the offending location (JSON-pointer style, e.g. "/experiments/1/atoms/0/w").
class ValidationError : public Error {
public:
    ValidationError(std::string path, const std::string& what)
        : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)), detail_(what) {}

    const std::string& path() const noexcept { return path_; }
    const std::string& detail() const noexcept { return detail_; }

    /// Same error relocated under `prefix`.
    ValidationError under(const std::string& prefix) const { return ValidationError(prefix + path_, detail_); }

private:
    std::string path_;
    std::string detail_;
};

/// An experiment does not average to the belief it is supposed to spread.
class BayesPlausibilityError : public Error {
public:
    using Error::Error;
};

/// Shape mismatches: dimension disagreements, negative step counts, etc.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// A declared modelling assumption (support bound, positivity of V) fails,
/// or an operation refuses to run because its precondition is not declared.
class AssumptionError : public Error {
public:
    using Error::Error;
};

/// A history or policy disagrees with the strategy it is evaluated against.
class InconsistencyError : public Error {
public:
    using Error::Error;
};

/// Internal cross-checks between independent computations disagree.
class InternalConsistencyError : public Error {
public:
    using Error::Error;
};

} // namespace persuasion
