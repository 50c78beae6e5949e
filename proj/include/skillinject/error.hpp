#pragma once

#include <stdexcept>
#include <string>

namespace skillinject {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad dimension, bad length, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Quaternion or 6D input too close to zero / parallel to be normalized.
class DegenerateRotation : public Error {
public:
    using Error::Error;
};

/// Point set has no spread (all points coincide).
class ZeroSpread : public Error {
public:
    using Error::Error;
};

/// Not enough aligned samples in a segment class to form an estimate.
class InsufficientSamples : public Error {
public:
    using Error::Error;
};

/// Integrator produced a non-finite state.
class Divergence : public Error {
public:
    Divergence(const std::string& what, std::size_t step) : Error(what), step_(step) {}
    [[nodiscard]] std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

}  // namespace skillinject
