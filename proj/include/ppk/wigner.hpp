// wigner.hpp: Wigner function of a Fock-basis density matrix on a uniform
// (x, p) grid, with x = a + a† and p = i(a† - a), so the vacuum is
// W = exp(-(x² + p²)/2) / 2π.
//
// Per phase-space point α = (x + ip)/2 the Laguerre kernels
//   w_mn(α) ∝ (-1)^m sqrt(m!/n!) (2α)^{n-m} L_m^{n-m}(4|α|²) e^{-2|α|²}
// are generated by a three-term recurrence in (m, n) that stays O(1) in
// magnitude, avoiding factorials and explicit polynomials.

#pragma once

#include "ppk/fock.hpp"
#include "ppk/parallel.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

namespace ppk {

struct WignerGridSpec {
    double x_min = -6.0, x_max = 6.0;
    Index x_count = 121;
    double p_min = -6.0, p_max = 6.0;
    Index p_count = 121;

    // Square grid over [-extent, extent]² with roughly the given spacing.
    static WignerGridSpec symmetric(double extent, double step) {
        const auto n = static_cast<Index>(std::llround(2.0 * extent / step)) + 1;
        return {-extent, extent, n, -extent, extent, n};
    }
};

// Half-width covering the outer lobes with margin, 2√n0 + 4.
inline double recommended_extent(double n0) { return 2.0 * std::sqrt(std::max(n0, 0.0)) + 4.0; }

template <typename Real = double>
struct WignerGrid {
    std::vector<Real> x_values;
    std::vector<Real> p_values;
    RMatrix<Real> values;  // values(i, j) = W(x_i, p_j)

    Real dx() const { return x_values.size() > 1 ? x_values[1] - x_values[0] : Real(0); }
    Real dp() const { return p_values.size() > 1 ? p_values[1] - p_values[0] : Real(0); }
    Real total_mass() const { return values.sum() * dx() * dp(); }
    Real min_value() const { return values.minCoeff(); }

    // ∫ W dp on the x grid.
    std::vector<Real> marginal_x() const {
        std::vector<Real> m(x_values.size());
        for (Index i = 0; i < values.rows(); ++i) m[i] = values.row(i).sum() * dp();
        return m;
    }
};

namespace detail {

inline std::vector<double> axis(double lo, double hi, Index count, const char* name) {
    if (count < 2 || !(hi > lo)) {
        std::ostringstream os;
        os << "wigner: " << name << " axis needs count >= 2 and max > min";
        throw InvalidParameter(os.str());
    }
    std::vector<double> v(static_cast<std::size_t>(count));
    const double h = (hi - lo) / static_cast<double>(count - 1);
    for (Index i = 0; i < count; ++i) v[i] = lo + h * static_cast<double>(i);
    return v;
}

// W at α = (x + ip)/2 in the x-p normalization. `w` is scratch of length dim.
template <typename Real>
Real wigner_point(const CMatrix<Real>& rho, Complex<Real> alpha, std::vector<Complex<Real>>& w,
                  const std::vector<Real>& sqrt_n) {
    using C = Complex<Real>;
    const Index d = rho.rows();
    const C two_a = Real(2) * alpha;
    const C two_ac = std::conj(two_a);
    w[0] = std::exp(Real(-2) * std::norm(alpha));
    Real acc = rho(0, 0).real() * w[0].real();
    for (Index n = 1; n < d; ++n) {
        w[n] = two_a * w[n - 1] / sqrt_n[n];
        acc += Real(2) * (rho(0, n) * w[n]).real();
    }
    for (Index m = 1; m < d; ++m) {
        C temp = w[m];
        w[m] = (two_ac * temp - sqrt_n[m] * w[m - 1]) / sqrt_n[m];
        acc += rho(m, m).real() * w[m].real();
        for (Index n = m + 1; n < d; ++n) {
            const C next = (two_a * w[n - 1] - sqrt_n[m] * temp) / sqrt_n[n];
            temp = w[n];
            w[n] = next;
            acc += Real(2) * (rho(m, n) * w[n]).real();
        }
    }
    return acc / (Real(2) * std::numbers::pi_v<Real>);
}

}  // namespace detail

// Throws GridTooSmall when more than 1e-4 of the probability lies outside the
// grid (judged from the Riemann sum).
template <typename Real = double>
WignerGrid<Real> wigner(const DensityMatrix<Real>& rho, const WignerGridSpec& spec, unsigned workers = 1,
                        Real missing_mass_tolerance = Real(1e-4)) {
    WignerGrid<Real> g;
    const auto xs = detail::axis(spec.x_min, spec.x_max, spec.x_count, "x");
    const auto ps = detail::axis(spec.p_min, spec.p_max, spec.p_count, "p");
    g.x_values.assign(xs.begin(), xs.end());
    g.p_values.assign(ps.begin(), ps.end());
    g.values.resize(spec.x_count, spec.p_count);

    const Index d = rho.dim();
    std::vector<Real> sqrt_n(static_cast<std::size_t>(d));
    for (Index n = 0; n < d; ++n) sqrt_n[n] = std::sqrt(static_cast<Real>(n));
    const CMatrix<Real>& m = rho.matrix();

    parallel_for(static_cast<std::size_t>(spec.x_count), workers, [&](std::size_t i) {
        std::vector<Complex<Real>> scratch(static_cast<std::size_t>(d));
        for (Index j = 0; j < spec.p_count; ++j) {
            const Complex<Real> alpha(g.x_values[i] / Real(2), g.p_values[j] / Real(2));
            g.values(static_cast<Index>(i), j) = detail::wigner_point(m, alpha, scratch, sqrt_n);
        }
    });

    const Real missing = Real(1) - g.total_mass();
    if (missing > missing_mass_tolerance) {
        std::ostringstream os;
        os << "wigner: grid misses probability mass " << missing << "; enlarge the grid";
        throw GridTooSmall(os.str(), static_cast<double>(missing));
    }
    return g;
}

struct LocalMaximum {
    Index i = 0;
    Index j = 0;
    double x = 0.0;
    double p = 0.0;
    double value = 0.0;
};

// Interior points exceeding their 8 neighbours (ties broken toward the first
// point in storage order) with value >= relative_floor * global maximum.
template <typename Real>
std::vector<LocalMaximum> local_maxima(const WignerGrid<Real>& g, double relative_floor = 0.1) {
    std::vector<LocalMaximum> out;
    const Index nx = g.values.rows(), np = g.values.cols();
    const Real floor = static_cast<Real>(relative_floor) * g.values.maxCoeff();
    for (Index i = 1; i + 1 < nx; ++i) {
        for (Index j = 1; j + 1 < np; ++j) {
            const Real v = g.values(i, j);
            if (v < floor || v <= Real(0)) continue;
            bool peak = true;
            for (Index di = -1; di <= 1 && peak; ++di) {
                for (Index dj = -1; dj <= 1 && peak; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    const Real nb = g.values(i + di, j + dj);
                    const bool earlier = di < 0 || (di == 0 && dj < 0);
                    if (nb > v || (earlier && nb == v)) peak = false;
                }
            }
            if (peak) out.push_back({i, j, double(g.x_values[i]), double(g.p_values[j]), double(v)});
        }
    }
    return out;
}

}  // namespace ppk
