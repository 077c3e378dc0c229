#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rsam {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Shapes of model matrices/vectors are inconsistent.
struct DimensionMismatch : Error { using Error::Error; };

// Argument outside the mathematical domain (e.g. 1 + h'gamma <= 0).
struct DomainError : Error { using Error::Error; };

// Inner maximization did not reach tolerance within the step budget.
struct OptFailure : Error { using Error::Error; };

// rank(A_hat) < n, so no zero-beta policy exists for A0 != 0.
struct RankError : Error { using Error::Error; };

// Minimum-norm candidate had to be scaled into the admissible set and is
// therefore no longer zero-beta.
struct NotZeroBeta : Error { using Error::Error; };

struct LinearSolveFailure : Error { using Error::Error; };

struct NoConvergence : Error {
    NoConvergence(const std::string& what, std::vector<double> decrements)
        : Error(what), decrements(std::move(decrements)) {}
    std::vector<double> decrements;
};

struct PolicyInfeasible : Error { using Error::Error; };

struct PreconditionError : Error { using Error::Error; };

struct NonPSD : Error { using Error::Error; };

struct ConfigError : Error { using Error::Error; };

}  // namespace rsam
