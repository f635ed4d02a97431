#include "kfree/error.hpp"

namespace kfree {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidParam: return "InvalidParam";
        case ErrorCode::VerticalPlane: return "VerticalPlane";
        case ErrorCode::NonSmoothBoundaryPoint: return "NonSmoothBoundaryPoint";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::OutOfDomain: return "OutOfDomain";
        case ErrorCode::QuadratureFail: return "QuadratureFail";
        case ErrorCode::DuplicateSites: return "DuplicateSites";
        case ErrorCode::NotAPolytope: return "NotAPolytope";
        case ErrorCode::TooFewPlanes: return "TooFewPlanes";
        case ErrorCode::DegenerateSolution: return "DegenerateSolution";
        case ErrorCode::ZeroCurvature: return "ZeroCurvature";
        case ErrorCode::ConditionViolated: return "ConditionViolated";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::NonAdmissibleBoundary: return "NonAdmissibleBoundary";
        case ErrorCode::FreeBoundaryCollapse: return "FreeBoundaryCollapse";
        case ErrorCode::NoRoot: return "NoRoot";
        case ErrorCode::NoSolution: return "NoSolution";
        case ErrorCode::DomainsNotNested: return "DomainsNotNested";
        case ErrorCode::WrongPsi: return "WrongPsi";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ValidationError: return "ValidationError";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace kfree
