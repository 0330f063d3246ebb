// fock.hpp: truncated single-mode Fock space: ladder operators, quadratures,
// coherent states and validated density matrices.
//
// Everything here is header-only and templated on the real scalar type; the
// rest of the library instantiates it with double.

#pragma once

#include "ppk/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace ppk {

template <typename Real = double>
using Operator = CMatrix<Real>;

namespace detail {

inline void require_dim(Index dim, const char* where) {
    if (dim < 2) {
        std::ostringstream os;
        os << where << ": Fock dimension must be >= 2 (got " << dim << ")";
        throw InvalidDimension(os.str());
    }
}

// Requested tolerance, loosened to a few hundred ulps for narrow scalar types.
template <typename Real>
constexpr Real tolerance(double requested) {
    return std::max(static_cast<Real>(requested), Real(256) * std::numeric_limits<Real>::epsilon());
}

template <typename Real>
Real max_abs(const CMatrix<Real>& m) {
    return m.size() == 0 ? Real(0) : m.cwiseAbs().maxCoeff();
}

}  // namespace detail

// ------------------------------- operators ----------------------------------

template <typename Real = double>
Operator<Real> annihilation(Index dim) {
    detail::require_dim(dim, "annihilation");
    Operator<Real> a = Operator<Real>::Zero(dim, dim);
    for (Index n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<Real>(n));
    return a;
}

template <typename Real = double>
Operator<Real> creation(Index dim) {
    return annihilation<Real>(dim).adjoint();
}

template <typename Real = double>
Operator<Real> number(Index dim) {
    detail::require_dim(dim, "number");
    Operator<Real> n = Operator<Real>::Zero(dim, dim);
    for (Index k = 0; k < dim; ++k) n(k, k) = static_cast<Real>(k);
    return n;
}

template <typename Real = double>
Operator<Real> identity(Index dim) {
    detail::require_dim(dim, "identity");
    return Operator<Real>::Identity(dim, dim);
}

// Photon-number parity (-1)^{a†a}.
template <typename Real = double>
Operator<Real> parity(Index dim) {
    detail::require_dim(dim, "parity");
    Operator<Real> p = Operator<Real>::Zero(dim, dim);
    for (Index k = 0; k < dim; ++k) p(k, k) = (k % 2 == 0) ? Real(1) : Real(-1);
    return p;
}

// q_theta = a e^{-i theta} + a† e^{+i theta}. theta = 0 gives x = a + a†,
// theta = pi/2 gives p = i(a† - a). Built entry-wise so that q == q† holds
// bit-for-bit.
template <typename Real = double>
Operator<Real> quadrature(Index dim, Real theta) {
    detail::require_dim(dim, "quadrature");
    Operator<Real> q = Operator<Real>::Zero(dim, dim);
    const Complex<Real> phase = std::polar(Real(1), -theta);
    for (Index n = 1; n < dim; ++n) {
        const Complex<Real> v = std::sqrt(static_cast<Real>(n)) * phase;
        q(n - 1, n) = v;
        q(n, n - 1) = std::conj(v);
    }
    return q;
}

// --------------------------------- states -----------------------------------

template <typename Real = double>
class PureState {
public:
    static constexpr Real kNormTolerance = detail::tolerance<Real>(1e-12);

    explicit PureState(CVector<Real> amplitudes) : amp_(std::move(amplitudes)) {
        detail::require_dim(amp_.size(), "PureState");
        const Real norm = amp_.norm();
        if (std::abs(norm - Real(1)) > kNormTolerance) {
            std::ostringstream os;
            os << "PureState: amplitudes must have unit norm (norm = " << norm << ")";
            throw InvalidState(os.str());
        }
    }

    // Normalizes first; for assembling states from unnormalized amplitudes.
    static PureState normalized(CVector<Real> amplitudes) {
        const Real norm = amplitudes.norm();
        if (!(norm > Real(0))) throw InvalidState("PureState: zero vector cannot be normalized");
        amplitudes /= norm;
        return PureState(std::move(amplitudes));
    }

    static PureState fock(Index dim, Index n) {
        detail::require_dim(dim, "PureState::fock");
        if (n < 0 || n >= dim) throw InvalidDimension("PureState::fock: level outside truncation");
        CVector<Real> v = CVector<Real>::Zero(dim);
        v(n) = Real(1);
        return PureState(std::move(v));
    }

    Index dim() const noexcept { return amp_.size(); }
    const CVector<Real>& amplitudes() const noexcept { return amp_; }

    Complex<Real> inner(const PureState& other) const {
        if (other.dim() != dim()) throw DimensionMismatch("PureState::inner: dimension mismatch");
        return amp_.dot(other.amp_);  // conjugates *this
    }

private:
    CVector<Real> amp_;
};

// Density matrix with checked Hermiticity, unit trace and numerical positivity.
template <typename Real = double>
class DensityMatrix {
public:
    static constexpr Real kHermiticityTolerance = detail::tolerance<Real>(1e-10);
    static constexpr Real kTraceTolerance = detail::tolerance<Real>(1e-10);
    static constexpr Real kPositivityTolerance = detail::tolerance<Real>(1e-8);

    explicit DensityMatrix(CMatrix<Real> m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols()) throw InvalidState("DensityMatrix: matrix must be square");
        detail::require_dim(m_.rows(), "DensityMatrix");
        const Real herm = detail::max_abs<Real>(m_ - m_.adjoint());
        if (herm > kHermiticityTolerance) {
            std::ostringstream os;
            os << "DensityMatrix: not Hermitian (max |rho - rho^dagger| = " << herm << ")";
            throw InvalidState(os.str());
        }
        const Complex<Real> tr = m_.trace();
        if (std::abs(tr - Complex<Real>(1)) > kTraceTolerance) {
            std::ostringstream os;
            os << "DensityMatrix: trace must be 1 (got " << tr << ")";
            throw InvalidState(os.str());
        }
        min_eig_ = smallest_eigenvalue(m_);
        if (min_eig_ < -kPositivityTolerance) {
            std::ostringstream os;
            os << "DensityMatrix: not positive semidefinite (smallest eigenvalue " << min_eig_ << ")";
            throw InvalidState(os.str());
        }
    }

    explicit DensityMatrix(const PureState<Real>& psi)
        : DensityMatrix(CMatrix<Real>(psi.amplitudes() * psi.amplitudes().adjoint())) {}

    // Symmetrizes and renormalizes before validation.
    static DensityMatrix from_unnormalized(const CMatrix<Real>& m) {
        CMatrix<Real> h = (m + m.adjoint()) / Real(2);
        const Complex<Real> tr = h.trace();
        if (!(std::abs(tr) > Real(0))) throw InvalidState("DensityMatrix: zero trace");
        h /= tr.real();
        return DensityMatrix(std::move(h));
    }

    static DensityMatrix fock(Index dim, Index n) { return DensityMatrix(PureState<Real>::fock(dim, n)); }

    Index dim() const noexcept { return m_.rows(); }
    const CMatrix<Real>& matrix() const noexcept { return m_; }
    Real min_eigenvalue() const noexcept { return min_eig_; }

    // Largest eigenvalue close to one means the state is pure to tolerance.
    bool is_pure(Real tol = Real(1e-12)) const {
        Eigen::SelfAdjointEigenSolver<CMatrix<Real>> es(m_, Eigen::EigenvaluesOnly);
        return es.eigenvalues()(m_.rows() - 1) > Real(1) - tol;
    }

    // Dominant eigenvector; meaningful when is_pure().
    PureState<Real> dominant_state() const {
        Eigen::SelfAdjointEigenSolver<CMatrix<Real>> es(m_);
        return PureState<Real>::normalized(es.eigenvectors().col(m_.rows() - 1));
    }

    static Real smallest_eigenvalue(const CMatrix<Real>& m) {
        Eigen::SelfAdjointEigenSolver<CMatrix<Real>> es(m, Eigen::EigenvaluesOnly);
        return es.eigenvalues()(0);
    }

private:
    CMatrix<Real> m_;
    Real min_eig_{0};
};

// Coherent state truncated to dim levels, amplitudes evaluated in log space
// (no factorial overflow past n = 170) and renormalized after truncation.
template <typename Real = double>
PureState<Real> coherent_state(Index dim, Complex<Real> alpha) {
    detail::require_dim(dim, "coherent_state");
    const Real n_mean = std::norm(alpha);
    if (n_mean > Real(0.5) * static_cast<Real>(dim)) {
        const auto required = static_cast<Index>(std::ceil(Real(2) * n_mean));
        std::ostringstream os;
        os << "coherent_state: |alpha|^2 = " << n_mean << " needs a Fock dimension of at least "
           << required << " (got " << dim << ")";
        throw TruncationTooSmall(os.str(), required);
    }
    CVector<Real> c = CVector<Real>::Zero(dim);
    if (n_mean == Real(0)) {
        c(0) = Real(1);
        return PureState<Real>(std::move(c));
    }
    const Real log_r = std::log(std::abs(alpha));
    const Real arg = std::arg(alpha);
    for (Index n = 0; n < dim; ++n) {
        const Real nn = static_cast<Real>(n);
        const Real log_mag = -n_mean / Real(2) + nn * log_r - std::lgamma(nn + Real(1)) / Real(2);
        c(n) = std::polar(std::exp(log_mag), nn * arg);
    }
    return PureState<Real>::normalized(std::move(c));
}

// ------------------------------ expectations --------------------------------

template <typename Real = double>
Complex<Real> expectation(const Operator<Real>& op, const DensityMatrix<Real>& rho) {
    if (op.rows() != rho.dim() || op.cols() != rho.dim())
        throw DimensionMismatch("expectation: operator and state dimensions differ");
    // tr(op rho) without forming the product.
    return (op.transpose().cwiseProduct(rho.matrix())).sum();
}

template <typename Real = double>
Complex<Real> expectation(const Operator<Real>& op, const PureState<Real>& psi) {
    if (op.rows() != psi.dim() || op.cols() != psi.dim())
        throw DimensionMismatch("expectation: operator and state dimensions differ");
    return psi.amplitudes().dot(op * psi.amplitudes());
}

// Population of Fock levels n >= first_level.
template <typename Real = double>
Real tail_population(const DensityMatrix<Real>& rho, Index first_level) {
    Real s = 0;
    for (Index n = std::max<Index>(first_level, 0); n < rho.dim(); ++n) s += rho.matrix()(n, n).real();
    return s;
}

// ------------------------------- truncation ---------------------------------

struct TruncationRule {
    Index floor_levels = 20;      // minimum N_max
    Index cap_levels = 400;       // maximum N_max
    double tail_fraction = 0.1;   // top fraction of levels inspected post hoc
    double tail_tolerance = 1e-8; // allowed population in that tail
    int max_retries = 2;          // doublings before giving up
};

// Fock dimension (N_max + 1) for a state centred on occupation n0:
// N_max = ceil(n0 + 6 sqrt(n0) + 20), clamped to [floor, cap].
inline Index truncation_for_occupation(double n0, const TruncationRule& rule = {}) {
    const double n = std::max(n0, 0.0);
    auto n_max = static_cast<Index>(std::ceil(n + 6.0 * std::sqrt(n) + 20.0));
    n_max = std::clamp(n_max, rule.floor_levels, rule.cap_levels);
    return n_max + 1;
}

// True when the top tail_fraction of levels carries less than tail_tolerance.
template <typename Real = double>
bool truncation_adequate(const DensityMatrix<Real>& rho, const TruncationRule& rule = {}) {
    const auto first = rho.dim() - std::max<Index>(1, static_cast<Index>(std::ceil(rule.tail_fraction * rho.dim())));
    return tail_population(rho, first) < rule.tail_tolerance;
}

}  // namespace ppk
