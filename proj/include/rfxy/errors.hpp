#pragma once

#include <stdexcept>
#include <string>

namespace rfxy {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A site, block or boundary value required by an operation is missing.
struct DomainError : Error {
    using Error::Error;
};

/// A parameter lies outside its admissible window.
struct ParamError : Error {
    using Error::Error;
};

/// A coarse-graining scale is too small for the requested quantity.
struct ScaleError : Error {
    using Error::Error;
};

/// A contour-surgery step could not be completed (precondition violated
/// numerically or a construction failed its post-hoc check).
struct SurgeryError : Error {
    using Error::Error;
};

/// An iterative solver failed to converge.
struct NumericError : Error {
    using Error::Error;
};

} // namespace rfxy
