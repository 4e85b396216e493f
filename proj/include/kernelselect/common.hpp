#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ksel {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

// Error hierarchy. The CLI maps each family onto a stable exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument to an operation (length mismatch, non-positive alpha, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Input outside the domain an object is defined on.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Linear-algebra or quadrature failure.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Request beyond what the implementation supports (grid too large, atomic spectrum, ...).
class CapabilityError : public Error {
public:
    using Error::Error;
};

/// Malformed input file or configuration.
class IngestionError : public Error {
public:
    using Error::Error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ArgumentError(what);
}

}  // namespace ksel
