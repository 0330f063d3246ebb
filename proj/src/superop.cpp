#include "ppk/superop.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ppk {

namespace {

using LU = Eigen::SparseLU<SparseXc, Eigen::COLAMDOrdering<int>>;

SparseXc sparse_identity(Index dim) {
    SparseXc id(dim, dim);
    id.setIdentity();
    return id;
}

// Smallest two singular values of L, or NaN when the dense SVD is too large.
std::pair<double, double> smallest_singular_values(const SparseXc& m) {
    constexpr Index kMaxDense = 4096;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (m.rows() > kMaxDense || m.rows() < 2) return {nan, nan};
    const MatrixXc dense(m);
    Eigen::BDCSVD<MatrixXc> svd(dense);
    const auto& s = svd.singularValues();
    return {s(s.size() - 1), s(s.size() - 2)};
}

std::unique_ptr<LU> factorize(const SparseXc& a, const char* what) {
    auto lu = std::make_unique<LU>();
    lu->analyzePattern(a);
    lu->factorize(a);
    if (lu->info() != Eigen::Success) {
        std::ostringstream os;
        os << what << ": sparse LU failed (" << lu->lastErrorMessage() << ")";
        throw SolverFailure(os.str(), std::numeric_limits<double>::infinity());
    }
    return lu;
}

bool all_finite(const VectorXc& v) {
    for (Index i = 0; i < v.size(); ++i)
        if (!std::isfinite(v(i).real()) || !std::isfinite(v(i).imag())) return false;
    return true;
}

}  // namespace

SuperOperator SuperOperator::operator+(const SuperOperator& o) const {
    if (o.dim != dim) throw DimensionMismatch("SuperOperator: dimension mismatch in +");
    return {dim, SparseXc(matrix + o.matrix)};
}

SuperOperator SuperOperator::operator-(const SuperOperator& o) const {
    if (o.dim != dim) throw DimensionMismatch("SuperOperator: dimension mismatch in -");
    return {dim, SparseXc(matrix - o.matrix)};
}

// ------------------------------ vectorization -------------------------------

VectorXc vectorize(const MatrixXc& m) {
    if (m.rows() != m.cols()) throw InvalidDimension("vectorize: matrix must be square");
    return Eigen::Map<const VectorXc>(m.data(), m.size());
}

VectorXc vectorize(const DensityMatrix<double>& rho) { return vectorize(rho.matrix()); }

MatrixXc devectorize(const VectorXc& v) {
    const auto dim = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
    if (dim * dim != v.size() || dim == 0) {
        std::ostringstream os;
        os << "devectorize: length " << v.size() << " is not a perfect square";
        throw InvalidDimension(os.str());
    }
    return Eigen::Map<const MatrixXc>(v.data(), dim, dim);
}

VectorXc vectorized_identity(Index dim) {
    VectorXc one = VectorXc::Zero(dim * dim);
    for (Index i = 0; i < dim; ++i) one(i + i * dim) = 1.0;
    return one;
}

cplx vec_trace(const VectorXc& v, Index dim) {
    if (v.size() != dim * dim) throw DimensionMismatch("vec_trace: length is not dim^2");
    cplx s = 0.0;
    for (Index i = 0; i < dim; ++i) s += v(i + i * dim);
    return s;
}

SparseXc spre(const SparseXc& a) {
    return Eigen::kroneckerProduct(sparse_identity(a.rows()), a).eval();
}

SparseXc spost(const SparseXc& b) {
    return Eigen::kroneckerProduct(SparseXc(b.transpose()), sparse_identity(b.rows())).eval();
}

SparseXc sprepost(const SparseXc& a, const SparseXc& b) {
    return Eigen::kroneckerProduct(SparseXc(b.transpose()), a).eval();
}

// ------------------------------- Liouvillian --------------------------------

SuperOperator liouvillian(const SparseXc& hamiltonian, std::span<const JumpOperator> jumps) {
    const Index dim = hamiltonian.rows();
    if (hamiltonian.cols() != dim) throw DimensionMismatch("liouvillian: Hamiltonian must be square");
    detail::require_dim(dim, "liouvillian");
    const cplx minus_i(0.0, -1.0);
    SparseXc L = minus_i * (spre(hamiltonian) - spost(hamiltonian));
    for (const auto& jump : jumps) {
        if (jump.op.rows() != dim || jump.op.cols() != dim)
            throw DimensionMismatch("liouvillian: jump operator dimension differs from Hamiltonian");
        if (!(jump.rate >= 0.0)) throw InvalidParameter("liouvillian: jump rates must be >= 0");
        if (jump.rate == 0.0) continue;
        const SparseXc cdag = jump.op.adjoint();
        const SparseXc cdc = cdag * jump.op;
        L += jump.rate * (sprepost(jump.op, cdag) - 0.5 * spre(cdc) - 0.5 * spost(cdc));
    }
    L.prune(cplx(0.0));
    L.makeCompressed();
    return {dim, std::move(L)};
}

SuperOperator liouvillian(const MatrixXc& hamiltonian, std::span<const std::pair<MatrixXc, double>> jumps) {
    std::vector<JumpOperator> sparse_jumps;
    sparse_jumps.reserve(jumps.size());
    for (const auto& [op, rate] : jumps) sparse_jumps.push_back({op.sparseView(), rate});
    return liouvillian(SparseXc(hamiltonian.sparseView()), sparse_jumps);
}

double trace_preservation_residual(const SuperOperator& L) {
    // (<1| L)_col = sum over diagonal-index rows of that column.
    double worst = 0.0;
    for (Index col = 0; col < L.matrix.outerSize(); ++col) {
        cplx s = 0.0;
        for (SparseXc::InnerIterator it(L.matrix, col); it; ++it)
            if (it.row() % (L.dim + 1) == 0) s += it.value();
        worst = std::max(worst, std::abs(s));
    }
    return worst;
}

// --------------------------------- solvers ----------------------------------

LiouvillianSolver::LiouvillianSolver(SuperOperator L) : L_(std::move(L)) {
    const Index n = L_.dim2();
    if (L_.matrix.rows() != n || L_.matrix.cols() != n)
        throw DimensionMismatch("LiouvillianSolver: matrix is not dim^2 x dim^2");
    identity_ = vectorized_identity(L_.dim);

    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(static_cast<std::size_t>(L_.matrix.nonZeros() + L_.dim));
    for (Index col = 0; col < L_.matrix.outerSize(); ++col)
        for (SparseXc::InnerIterator it(L_.matrix, col); it; ++it)
            if (it.row() != replaced_row_) t.emplace_back(it.row(), col, it.value());
    for (Index i = 0; i < L_.dim; ++i) t.emplace_back(replaced_row_, i + i * L_.dim, 1.0);
    constrained_.resize(n, n);
    constrained_.setFromTriplets(t.begin(), t.end());
    constrained_.makeCompressed();

    lu_ = std::make_unique<LU>();
    lu_->analyzePattern(constrained_);
    lu_->factorize(constrained_);
    if (lu_->info() != Eigen::Success) {
        const auto [s0, s1] = smallest_singular_values(L_.matrix);
        std::ostringstream os;
        os << "steady_state: trace-constrained Liouvillian is singular (" << lu_->lastErrorMessage()
           << "); smallest singular values of L: " << s0 << ", " << s1;
        throw DegenerateSteadyState(os.str(), s0, s1);
    }

    VectorXc rhs = VectorXc::Zero(n);
    rhs(replaced_row_) = 1.0;
    VectorXc x = solve_bordered(rhs);
    if (!all_finite(x)) {
        const auto [s0, s1] = smallest_singular_values(L_.matrix);
        throw DegenerateSteadyState("steady_state: non-finite solution", s0, s1);
    }
    const MatrixXc raw = devectorize(x);
    auto rho = DensityMatrix<double>::from_unnormalized(raw);
    rho_vec_ = vectorize(rho);
    ss_residual_ = (L_.matrix * rho_vec_).cwiseAbs().maxCoeff();
    rho_ss_ = std::make_unique<DensityMatrix<double>>(std::move(rho));
}

VectorXc LiouvillianSolver::solve_bordered(VectorXc rhs) const {
    VectorXc x = lu_->solve(rhs);
    // one step of iterative refinement
    const VectorXc r = rhs - constrained_ * x;
    x += lu_->solve(r);
    return x;
}

VectorXc LiouvillianSolver::drazin_apply(const VectorXc& y) const {
    if (y.size() != L_.dim2()) throw DimensionMismatch("drazin_apply: vector length is not dim^2");
    VectorXc rhs = y - rho_vec_ * identity_.dot(y);
    rhs(replaced_row_) = 0.0;
    VectorXc x = solve_bordered(std::move(rhs));
    if (!all_finite(x)) throw SolverFailure("drazin_apply: non-finite solution", std::numeric_limits<double>::infinity());
    return x;
}

double LiouvillianSolver::drazin_residual(const VectorXc& x, const VectorXc& y) const {
    const VectorXc projected = y - rho_vec_ * identity_.dot(y);
    return (L_.matrix * x - projected).cwiseAbs().maxCoeff();
}

DensityMatrix<double> steady_state(const SuperOperator& L) {
    return LiouvillianSolver(L).steady_state();
}

VectorXc drazin_apply(const SuperOperator& L, const DensityMatrix<double>& rho_ss, const VectorXc& y) {
    if (rho_ss.dim() != L.dim) throw DimensionMismatch("drazin_apply: steady state dimension differs");
    LiouvillianSolver solver(L);
    const VectorXc r = vectorize(rho_ss);
    const VectorXc projected = y - r * vectorized_identity(L.dim).dot(y);
    return solver.drazin_apply(projected);
}

ShiftedSolver::ShiftedSolver(const SuperOperator& L, cplx shift) : shift_(shift) {
    SparseXc id(L.dim2(), L.dim2());
    id.setIdentity();
    shifted_ = L.matrix - shift * id;
    shifted_.makeCompressed();
    lu_ = factorize(shifted_, "ShiftedSolver");
}

VectorXc ShiftedSolver::solve(const VectorXc& y) const {
    VectorXc x = lu_->solve(y);
    const VectorXc r = y - shifted_ * x;
    x += lu_->solve(r);
    return x;
}

Resolvent::Resolvent(const SuperOperator& L, double omega)
    : L_(L), omega_(omega), minus_(L, cplx(0.0, omega)), plus_(L, cplx(0.0, -omega)) {
    if (omega == 0.0) throw InvalidParameter("Resolvent: omega must be nonzero; use drazin_apply at omega = 0");
}

VectorXc Resolvent::apply(const VectorXc& y) const {
    if (y.size() != L_.dim2()) throw DimensionMismatch("Resolvent::apply: vector length is not dim^2");
    return 0.5 * (minus_.solve(y) + plus_.solve(y));
}

double Resolvent::relative_residual(const VectorXc& x, const VectorXc& y) const {
    const VectorXc lx = L_.matrix * x;
    const VectorXc r = L_.matrix * lx + (omega_ * omega_) * x - L_.matrix * y;
    const double ny = y.norm();
    return ny > 0.0 ? r.norm() / ny : r.norm();
}

VectorXc resolvent_apply(const SuperOperator& L, double omega, const VectorXc& y, const ResolventOptions& opts) {
    if (omega == 0.0) throw InvalidParameter("resolvent_apply: omega == 0, use drazin_apply");
    Resolvent res(L, omega);
    VectorXc x = res.apply(y);
    const double r = res.relative_residual(x, y);
    if (!(r <= opts.residual_tolerance)) {
        std::ostringstream os;
        os << "resolvent_apply: residual " << r << " exceeds " << opts.residual_tolerance << " at omega = " << omega;
        throw SolverFailure(os.str(), r);
    }
    return x;
}

// ---------------------------- spectral analysis -----------------------------

SpectralDecomposition spectral_decomposition(const SuperOperator& L, const SpectralOptions& opts) {
    const Index n = L.dim2();
    if (n > opts.max_dim2) {
        std::ostringstream os;
        os << "spectral_decomposition: dim^2 = " << n << " exceeds the dense limit " << opts.max_dim2
           << "; use the sparse drazin/resolvent solvers instead";
        throw TooLarge(os.str());
    }
    Eigen::ComplexEigenSolver<MatrixXc> es(MatrixXc(L.matrix), true);
    if (es.info() != Eigen::Success) throw SolverFailure("spectral_decomposition: eigensolver failed", 0.0);

    SpectralDecomposition sd;
    sd.eigenvalues = es.eigenvalues();
    sd.right_vectors = es.eigenvectors();
    sd.left_vectors = sd.right_vectors.partialPivLu().inverse();

    Index zeros = 0;
    for (Index j = 0; j < n; ++j) {
        if (std::abs(sd.eigenvalues(j)) < opts.zero_tolerance) ++zeros;
        if (std::abs(sd.eigenvalues(j)) < std::abs(sd.eigenvalues(sd.steady_index))) sd.steady_index = j;
    }
    if (zeros != 1) {
        std::vector<double> mags(static_cast<std::size_t>(n));
        for (Index j = 0; j < n; ++j) mags[static_cast<std::size_t>(j)] = std::abs(sd.eigenvalues(j));
        std::sort(mags.begin(), mags.end());
        std::ostringstream os;
        os << "spectral_decomposition: found " << zeros << " eigenvalues within " << opts.zero_tolerance
           << " of zero (expected exactly one)";
        throw DegenerateSteadyState(os.str(), mags[0], mags.size() > 1 ? mags[1] : mags[0]);
    }

    const Index k = sd.steady_index;
    const cplx tr = vec_trace(sd.right_vectors.col(k), L.dim);
    sd.right_vectors.col(k) /= tr;
    sd.left_vectors.row(k) *= tr;
    sd.biorthogonality_residual =
        (sd.left_vectors * sd.right_vectors - MatrixXc::Identity(n, n)).cwiseAbs().maxCoeff();
    return sd;
}

VectorXc SpectralDecomposition::drazin_apply(const VectorXc& y) const {
    VectorXc c = left_vectors * y;
    for (Index j = 0; j < c.size(); ++j) c(j) = (j == steady_index) ? cplx(0.0) : c(j) / eigenvalues(j);
    return right_vectors * c;
}

VectorXc SpectralDecomposition::resolvent_apply(double omega, const VectorXc& y) const {
    VectorXc c = left_vectors * y;
    for (Index j = 0; j < c.size(); ++j) {
        const cplx l = eigenvalues(j);
        c(j) = (j == steady_index) ? cplx(0.0) : c(j) * l / (l * l + omega * omega);
    }
    return right_vectors * c;
}

VectorXc SpectralDecomposition::propagate(const VectorXc& v, double t) const {
    VectorXc c = left_vectors * v;
    for (Index j = 0; j < c.size(); ++j) c(j) *= std::exp(eigenvalues(j) * t);
    return right_vectors * c;
}

MatrixXc SpectralDecomposition::propagator(double t) const {
    VectorXc e(eigenvalues.size());
    for (Index j = 0; j < e.size(); ++j) e(j) = std::exp(eigenvalues(j) * t);
    return right_vectors * e.asDiagonal() * left_vectors;
}

// ------------------------------ time evolution ------------------------------

VectorXc propagate(const SuperOperator& L, const VectorXc& v, double t, double tol) {
    if (v.size() != L.dim2()) throw DimensionMismatch("propagate: vector length is not dim^2");
    if (t == 0.0) return v;
    double norm1 = 0.0;
    for (Index col = 0; col < L.matrix.outerSize(); ++col) {
        double s = 0.0;
        for (SparseXc::InnerIterator it(L.matrix, col); it; ++it) s += std::abs(it.value());
        norm1 = std::max(norm1, s);
    }
    // Substeps keep ‖L h‖₁ <= 2 so the series terms never grow past ~2.
    constexpr double kTheta = 2.0;
    constexpr int kMaxTerms = 80;
    const auto steps = std::max<long long>(1, static_cast<long long>(std::ceil(norm1 * std::abs(t) / kTheta)));
    const double h = t / static_cast<double>(steps);

    VectorXc w = v;
    VectorXc term(v.size());
    for (long long s = 0; s < steps; ++s) {
        term = w;
        VectorXc sum = w;
        const double scale = w.lpNorm<1>();
        for (int k = 1; k <= kMaxTerms; ++k) {
            term = (h / k) * (L.matrix * term);
            sum += term;
            if (term.lpNorm<1>() <= tol * scale) break;
        }
        w = std::move(sum);
    }
    return w;
}

}  // namespace ppk
