// superop.hpp: vectorized superoperators on the doubled Fock space.
//
// Convention: column stacking, vec(rho)[i + j*dim] = rho(i, j). Under it
// vec(A X B) = (B^T ⊗ A) vec(X), which is what spre/spost/sprepost build.

#pragma once

#include "ppk/fock.hpp"

#include <Eigen/SparseLU>

#include <memory>
#include <span>
#include <vector>

namespace ppk {

struct SuperOperator {
    Index dim = 0;      // Hilbert-space dimension; the matrix is dim² x dim²
    SparseXc matrix;

    Index dim2() const noexcept { return dim * dim; }
    VectorXc operator*(const VectorXc& v) const { return matrix * v; }
    SuperOperator operator+(const SuperOperator& o) const;
    SuperOperator operator-(const SuperOperator& o) const;
};

struct JumpOperator {
    SparseXc op;
    double rate = 1.0;
};

// ------------------------------ vectorization -------------------------------

VectorXc vectorize(const MatrixXc& m);
VectorXc vectorize(const DensityMatrix<double>& rho);
MatrixXc devectorize(const VectorXc& v);  // throws InvalidDimension unless size is a square
VectorXc vectorized_identity(Index dim);

// Trace of the matrix behind a vectorized state: <1|v>.
cplx vec_trace(const VectorXc& v, Index dim);

SparseXc spre(const SparseXc& a);                        // X -> A X
SparseXc spost(const SparseXc& b);                       // X -> X B
SparseXc sprepost(const SparseXc& a, const SparseXc& b); // X -> A X B

// ------------------------------- Liouvillian --------------------------------

// -i[H, .] + sum_k rate_k (c_k . c_k† - {c_k† c_k, .}/2)
SuperOperator liouvillian(const SparseXc& hamiltonian, std::span<const JumpOperator> jumps);
SuperOperator liouvillian(const MatrixXc& hamiltonian, std::span<const std::pair<MatrixXc, double>> jumps);

// max_j |(<1| L)_j|; zero for a trace-preserving generator.
double trace_preservation_residual(const SuperOperator& L);

// --------------------------------- solvers ----------------------------------

// Factorizes L with one row replaced by the trace functional <1|. The same
// factorization yields the steady state and the Drazin inverse L⁺: for a
// projected right-hand side ỹ = (1 - |rho_ss><1|) y the bordered solution with
// <1|x> = 0 satisfies L x = ỹ in every row.
class LiouvillianSolver {
public:
    explicit LiouvillianSolver(SuperOperator L);

    const SuperOperator& generator() const noexcept { return L_; }
    const DensityMatrix<double>& steady_state() const noexcept { return *rho_ss_; }
    const VectorXc& steady_state_vector() const noexcept { return rho_vec_; }

    // ‖L rho_ss‖_max after symmetrization and normalization.
    double steady_state_residual() const noexcept { return ss_residual_; }

    // x = L⁺ y with <1|x> = 0.
    VectorXc drazin_apply(const VectorXc& y) const;

    // ‖L x - (1 - |rho_ss><1|) y‖_max
    double drazin_residual(const VectorXc& x, const VectorXc& y) const;

private:
    VectorXc solve_bordered(VectorXc rhs) const;

    SuperOperator L_;
    Index replaced_row_ = 0;
    VectorXc identity_;
    std::unique_ptr<Eigen::SparseLU<SparseXc, Eigen::COLAMDOrdering<int>>> lu_;
    SparseXc constrained_;
    VectorXc rho_vec_;
    std::unique_ptr<DensityMatrix<double>> rho_ss_;
    double ss_residual_ = 0.0;
};

DensityMatrix<double> steady_state(const SuperOperator& L);

// L⁺ y via the bordered system, projecting with the supplied steady state.
VectorXc drazin_apply(const SuperOperator& L, const DensityMatrix<double>& rho_ss, const VectorXc& y);

// Factorization of (L - shift) for repeated solves at a fixed shift.
class ShiftedSolver {
public:
    ShiftedSolver(const SuperOperator& L, cplx shift);
    cplx shift() const noexcept { return shift_; }
    VectorXc solve(const VectorXc& y) const;

private:
    SparseXc shifted_;
    cplx shift_;
    std::unique_ptr<Eigen::SparseLU<SparseXc, Eigen::COLAMDOrdering<int>>> lu_;
};

// [L / (L² + ω²)] y = ½[(L - iω)⁻¹ + (L + iω)⁻¹] y for ω ≠ 0. Both shifted
// factorizations are kept so several vectors can be processed at one ω.
class Resolvent {
public:
    Resolvent(const SuperOperator& L, double omega);
    double omega() const noexcept { return omega_; }
    VectorXc apply(const VectorXc& y) const;

    // ‖(L² + ω²) x - L y‖₂ / ‖y‖₂
    double relative_residual(const VectorXc& x, const VectorXc& y) const;

private:
    SuperOperator L_;
    double omega_;
    ShiftedSolver minus_;
    ShiftedSolver plus_;
};

struct ResolventOptions {
    double residual_tolerance = 1e-7;
};

// Throws InvalidParameter when omega == 0 and SolverFailure when the residual
// check fails.
VectorXc resolvent_apply(const SuperOperator& L, double omega, const VectorXc& y,
                         const ResolventOptions& opts = {});

// ---------------------------- spectral analysis -----------------------------

struct SpectralDecomposition {
    VectorXc eigenvalues;
    MatrixXc right_vectors;  // column j is |x_j>
    MatrixXc left_vectors;   // row j is <y_j|, with <y_j|x_k> = δ_jk
    double biorthogonality_residual = 0.0;
    Index steady_index = 0;  // the eigenvalue closest to zero

    VectorXc drazin_apply(const VectorXc& y) const;
    VectorXc resolvent_apply(double omega, const VectorXc& y) const;
    VectorXc propagate(const VectorXc& v, double t) const;
    MatrixXc propagator(double t) const;
};

struct SpectralOptions {
    Index max_dim2 = 4096;
    double zero_tolerance = 1e-8;
};

// Dense eigendecomposition with biorthonormalized left vectors. The kernel
// vector is scaled to unit trace (so its left partner is <1|). Throws TooLarge
// beyond max_dim2 and DegenerateSteadyState unless exactly one eigenvalue lies
// within zero_tolerance of the origin.
SpectralDecomposition spectral_decomposition(const SuperOperator& L, const SpectralOptions& opts = {});

// ------------------------------ time evolution ------------------------------

// e^{L t} v by a scaled truncated Taylor series on sparse mat-vecs.
VectorXc propagate(const SuperOperator& L, const VectorXc& v, double t, double tol = 1e-14);

}  // namespace ppk
