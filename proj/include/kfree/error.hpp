#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kfree {

enum class ErrorCode {
    InvalidParam,
    VerticalPlane,
    NonSmoothBoundaryPoint,
    EmptyInput,
    OutOfDomain,
    QuadratureFail,
    DuplicateSites,
    NotAPolytope,
    TooFewPlanes,
    DegenerateSolution,
    ZeroCurvature,
    ConditionViolated,
    NoConvergence,
    NonAdmissibleBoundary,
    FreeBoundaryCollapse,
    NoRoot,
    NoSolution,
    DomainsNotNested,
    WrongPsi,
    ParseError,
    ValidationError,
    Io,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the solver core carries one of the codes above;
/// the C layer maps them onto status values.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace kfree
