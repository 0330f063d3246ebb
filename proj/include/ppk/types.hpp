// types.hpp: scalar aliases and the error hierarchy shared by every module.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <stdexcept>
#include <string>

namespace ppk {

template <typename Real>
using Complex = std::complex<Real>;

template <typename Real>
using CMatrix = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Real>
using CVector = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, 1>;

template <typename Real>
using RVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

template <typename Real>
using RMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

using cplx = std::complex<double>;
using MatrixXc = CMatrix<double>;
using VectorXc = CVector<double>;
using SparseXc = Eigen::SparseMatrix<cplx, Eigen::ColMajor>;
using Index = Eigen::Index;

// --------------------------------- errors -----------------------------------

struct InvalidDimension : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidParameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidState : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Fock space too small for the requested state or for the steady state.
struct TruncationTooSmall : std::runtime_error {
    TruncationTooSmall(const std::string& what, Index required_dim)
        : std::runtime_error(what), required_dim(required_dim) {}
    Index required_dim;
};

// Raised when the Liouvillian kernel is not one-dimensional to working precision.
struct DegenerateSteadyState : std::runtime_error {
    DegenerateSteadyState(const std::string& what, double sigma_min, double sigma_next)
        : std::runtime_error(what), sigma_min(sigma_min), sigma_next(sigma_next) {}
    double sigma_min;
    double sigma_next;
};

struct SolverFailure : std::runtime_error {
    SolverFailure(const std::string& what, double residual)
        : std::runtime_error(what), residual(residual) {}
    double residual;
};

struct TooLarge : std::length_error {
    using std::length_error::length_error;
};

struct StepSizeFailure : std::runtime_error {
    StepSizeFailure(const std::string& what, double time, double min_eigenvalue)
        : std::runtime_error(what), time(time), min_eigenvalue(min_eigenvalue) {}
    double time;
    double min_eigenvalue;
};

struct GridTooSmall : std::runtime_error {
    GridTooSmall(const std::string& what, double missing_mass)
        : std::runtime_error(what), missing_mass(missing_mass) {}
    double missing_mass;
};

}  // namespace ppk
