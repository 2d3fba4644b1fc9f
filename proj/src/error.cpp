#include "stressmkl/error.hpp"

#include <sstream>

namespace stressmkl {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidParameter: return "invalid-parameter";
        case ErrorKind::EmptyInput: return "empty-input";
        case ErrorKind::DegenerateRange: return "degenerate-range";
        case ErrorKind::InsufficientData: return "insufficient-data";
        case ErrorKind::AmbiguousLabel: return "ambiguous-label";
        case ErrorKind::Unlabeled: return "unlabeled";
        case ErrorKind::AnnotationGap: return "annotation-gap";
        case ErrorKind::InvalidScore: return "invalid-score";
        case ErrorKind::MissingClass: return "missing-class";
        case ErrorKind::Shape: return "shape";
        case ErrorKind::DegenerateGraph: return "degenerate-graph";
        case ErrorKind::ClusteringFailure: return "clustering-failure";
        case ErrorKind::MissingProfile: return "missing-profile";
        case ErrorKind::IllConditioned: return "ill-conditioned";
        case ErrorKind::UnassignedDrive: return "unassigned-drive";
        case ErrorKind::Stratification: return "stratification";
        case ErrorKind::Schema: return "schema";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

namespace {
std::string describe_constant(double value) {
    std::ostringstream os;
    os.precision(17);
    os << "trace is constant at " << value;
    return os.str();
}
}  // namespace

DegenerateRangeError::DegenerateRangeError(double value)
    : Error(ErrorKind::DegenerateRange, describe_constant(value)), value_(value) {}

void rethrow_with_context(const Error& e, const std::string& context) {
    std::string what = e.what();
    // strip the "<kind>: " prefix so it is not repeated
    const auto prefix = std::string(to_string(e.kind())) + ": ";
    if (what.rfind(prefix, 0) == 0) what = what.substr(prefix.size());
    throw Error(e.kind(), context + ": " + what);
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidParameter:
            return 1;
        case ErrorKind::IllConditioned:
        case ErrorKind::ClusteringFailure:
        case ErrorKind::DegenerateGraph:
            return 3;
        default:
            return 2;
    }
}

}  // namespace stressmkl
