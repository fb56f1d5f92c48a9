#pragma once

#include <stdexcept>
#include <string>

namespace thevest {

/// Malformed user input: bad arguments, unreadable files, violated preconditions.
class InvalidInputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The circuit cannot be solved: singular branch or nodal impedance.
class SingularCircuitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Estimation cannot proceed or did not produce a usable result.
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rank-deficient or ill-conditioned least-squares system. Carries the
/// condition number of the normal matrix so callers can report it.
class DegenerateSystemError : public EstimationError {
public:
    DegenerateSystemError(const std::string& what, double condition_number)
        : EstimationError(what), condition_number_(condition_number) {}

    double condition_number() const { return condition_number_; }

private:
    double condition_number_;
};

}  // namespace thevest
