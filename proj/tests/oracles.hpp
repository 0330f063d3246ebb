// oracles.hpp: independent reference computations for the tests. Nothing
// here calls into the superoperator or FCS code under test.

#pragma once

#include "ppk/types.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace oracle {

using ppk::cplx;
using ppk::Index;
using ppk::MatrixXc;
using ppk::VectorXc;

inline MatrixXc random_matrix(Index d, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    MatrixXc m(d, d);
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j) m(i, j) = cplx(n(rng), n(rng));
    return m;
}

inline MatrixXc random_hermitian(Index d, std::mt19937_64& rng) {
    const MatrixXc m = random_matrix(d, rng);
    return 0.5 * (m + m.adjoint());
}

// Full-rank random density matrix from a Ginibre sample.
inline MatrixXc random_density(Index d, std::mt19937_64& rng) {
    const MatrixXc g = random_matrix(d, rng);
    MatrixXc rho = g * g.adjoint();
    return rho / rho.trace();
}

inline VectorXc random_vector(Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    VectorXc v(n);
    for (Index i = 0; i < n; ++i) v[i] = cplx(g(rng), g(rng));
    return v;
}

inline VectorXc vec(const MatrixXc& m) { return Eigen::Map<const VectorXc>(m.data(), m.size()); }

inline MatrixXc unvec(const VectorXc& v, Index d) { return Eigen::Map<const MatrixXc>(v.data(), d, d); }

// Dense Lindblad generator written out term by term: X -> -i[H,X] + Σ r (cXc† - ½{c†c, X}).
inline MatrixXc dense_liouvillian(const MatrixXc& h, const std::vector<std::pair<MatrixXc, double>>& jumps) {
    const Index d = h.rows();
    const MatrixXc id = MatrixXc::Identity(d, d);
    MatrixXc l = -cplx(0, 1) * (Eigen::kroneckerProduct(id, h).eval() - Eigen::kroneckerProduct(h.transpose(), id).eval());
    for (const auto& [c, r] : jumps) {
        const MatrixXc cdc = c.adjoint() * c;
        l += r * (Eigen::kroneckerProduct(c.conjugate(), c).eval() -
                  0.5 * Eigen::kroneckerProduct(id, cdc).eval() - 0.5 * Eigen::kroneckerProduct(cdc.transpose(), id).eval());
    }
    return l;
}

// Random generator with a unique steady state almost surely.
struct RandomLindblad {
    MatrixXc h;
    std::vector<std::pair<MatrixXc, double>> jumps;
    MatrixXc l;
};

inline RandomLindblad random_lindblad(Index d, std::mt19937_64& rng, int n_jumps = 2) {
    std::uniform_real_distribution<double> rate(0.2, 1.5);
    RandomLindblad r;
    r.h = random_hermitian(d, rng);
    for (int k = 0; k < n_jumps; ++k) r.jumps.emplace_back(random_matrix(d, rng) / std::sqrt(double(d)), rate(rng));
    r.l = dense_liouvillian(r.h, r.jumps);
    return r;
}

// Eigen-decomposition oracle: eigenvalues, right vectors and their inverse.
struct EigenSystem {
    VectorXc lambda;
    MatrixXc right;
    MatrixXc left;  // rows, left = right^{-1}
    Index zero = 0;
};

inline EigenSystem eigensystem(const MatrixXc& l) {
    Eigen::ComplexEigenSolver<MatrixXc> es(l);
    EigenSystem s;
    s.lambda = es.eigenvalues();
    s.right = es.eigenvectors();
    s.left = s.right.inverse();
    s.lambda.cwiseAbs().minCoeff(&s.zero);
    return s;
}

// Steady state from the kernel vector, normalized to unit trace.
inline MatrixXc kernel_state(const EigenSystem& s, Index d) {
    MatrixXc rho = unvec(s.right.col(s.zero), d);
    rho /= rho.trace();
    return 0.5 * (rho + rho.adjoint());
}

// S(ω) = w - 2 Σ_{j≠0} λ_j/(λ_j² + ω²) <1|M|x_j><y_j|M|ρ>: the Fourier transform
// of the term-by-term exponential expansion of the correlation function.
inline double eigen_sum_spectrum(const EigenSystem& s, const MatrixXc& m, const VectorXc& rho, double weight,
                                 double omega, Index d) {
    const VectorXc one = vec(MatrixXc::Identity(d, d));
    const VectorXc seed = m * rho;
    const Eigen::RowVectorXcd out = one.adjoint() * m;
    cplx acc = 0;
    for (Index j = 0; j < s.lambda.size(); ++j) {
        if (j == s.zero) continue;
        const cplx lam = s.lambda[j];
        acc += lam / (lam * lam + omega * omega) * (out * s.right.col(j))(0) * (s.left.row(j) * seed)(0);
    }
    return weight - 2.0 * acc.real();
}

// Σ_{j≠0} (1/λ_j) |x_j><y_j| y
inline VectorXc eigen_drazin(const EigenSystem& s, const VectorXc& y) {
    VectorXc x = VectorXc::Zero(y.size());
    for (Index j = 0; j < s.lambda.size(); ++j) {
        if (j == s.zero) continue;
        x += s.right.col(j) * ((s.left.row(j) * y)(0) / s.lambda[j]);
    }
    return x;
}

inline MatrixXc expm(const MatrixXc& a) { return a.exp(); }

// Composite Simpson rule on a uniform grid with an even number of intervals.
inline double simpson(std::span<const double> f, double h) {
    const std::size_t n = f.size() - 1;
    double s = f.front() + f.back();
    for (std::size_t i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f[i];
    return s * h / 3.0;
}

// Kolmogorov-Smirnov p-value for the sample against an exponential(rate) law.
inline double ks_exponential_pvalue(std::vector<double> sample, double rate) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double cdf = 1.0 - std::exp(-rate * sample[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - cdf, cdf - static_cast<double>(i) / n});
    }
    const double lam = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double q = 0.0;
    for (int k = 1; k <= 100; ++k) q += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lam * lam);
    return std::clamp(q, 0.0, 1.0);
}

// Probability density of x = a + a† from Fock matrix elements via Hermite functions.
inline double quadrature_density(const MatrixXc& rho, double x) {
    const Index d = rho.rows();
    const double xi = x / std::sqrt(2.0);
    std::vector<double> psi(static_cast<std::size_t>(d));
    psi[0] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * xi * xi);
    if (d > 1) psi[1] = std::sqrt(2.0) * xi * psi[0];
    for (Index n = 1; n + 1 < d; ++n)
        psi[n + 1] = std::sqrt(2.0 / double(n + 1)) * xi * psi[n] - std::sqrt(double(n) / double(n + 1)) * psi[n - 1];
    cplx acc = 0;
    for (Index m = 0; m < d; ++m)
        for (Index n = 0; n < d; ++n) acc += psi[m] * rho(m, n) * psi[n];
    return acc.real() / std::sqrt(2.0);
}

}  // namespace oracle
