#pragma once

#include <stdexcept>
#include <string>

namespace turnpike {

/// Base class for all solver and validation failures.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct WindowTooSmall : Error { using Error::Error; };
struct NotStabilizable : Error { using Error::Error; };
struct NotDetectable : Error { using Error::Error; };
struct SubspaceIllConditioned : Error { using Error::Error; };
struct SingularKkt : Error { using Error::Error; };
struct StepTooCoarse : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct WindowEmpty : Error { using Error::Error; };
struct HorizonTooShort : Error { using Error::Error; };
struct OutOfRange : Error { using Error::Error; };
struct NoConvergence : Error {
    NoConvergence(const std::string& what, double residual)
        : Error(what), last_residual(residual) {}
    double last_residual;
};
struct LineSearchStalled : Error { using Error::Error; };
struct ControllabilityFailed : Error { using Error::Error; };
struct NonFiniteState : Error { using Error::Error; };
struct NotHomogeneous : Error { using Error::Error; };
struct NotConverged : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };

}  // namespace turnpike
