#pragma once

#include <stdexcept>
#include <string>

namespace stefan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain where the operation is defined.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Material or problem data failed validation.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// The coefficient pair does not induce one of the integrable diffusivities.
class UnsupportedDiffusivity : public Error {
public:
    using Error::Error;
};

/// Boundary data cannot be interpolated by the requested profile.
class SingularFit : public Error {
public:
    using Error::Error;
};

/// A scalar root could not be bracketed.
class NoRoot : public Error {
public:
    using Error::Error;
};

/// Numerical integration failed to reach its tolerance.
class QuadratureError : public Error {
public:
    using Error::Error;
};

/// A fitted solution violates its own boundary conditions.
class InternalConsistencyError : public Error {
public:
    using Error::Error;
};

/// The moving-boundary simulation cannot continue.
class SimulationAbort : public Error {
public:
    using Error::Error;
};

}  // namespace stefan
