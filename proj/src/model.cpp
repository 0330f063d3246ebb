#include "ppk/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace ppk {

void ModelParams::validate() const {
    auto bad = [](const char* what, double v) {
        std::ostringstream os;
        os << "ModelParams: " << what << " (got " << v << ")";
        throw InvalidParameter(os.str());
    };
    if (!std::isfinite(delta)) bad("delta must be finite", delta);
    if (!std::isfinite(g) || g < 0.0) bad("g must be finite and >= 0", g);
    if (!std::isfinite(u) || u <= 0.0) bad("u must be finite and > 0", u);
    if (!std::isfinite(kappa) || kappa <= 0.0) bad("kappa must be finite and > 0", kappa);
}

SparseXc annihilation_sparse(Index dim) {
    detail::require_dim(dim, "annihilation_sparse");
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(static_cast<std::size_t>(dim));
    for (Index n = 1; n < dim; ++n) t.emplace_back(n - 1, n, std::sqrt(static_cast<double>(n)));
    SparseXc a(dim, dim);
    a.setFromTriplets(t.begin(), t.end());
    return a;
}

SparseXc build_hamiltonian_sparse(const ModelParams& params, Index dim) {
    params.validate();
    detail::require_dim(dim, "build_hamiltonian");
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(static_cast<std::size_t>(3 * dim));
    for (Index n = 0; n < dim; ++n) {
        const double nn = static_cast<double>(n);
        t.emplace_back(n, n, -params.delta * nn + 0.5 * params.u * nn * (nn - 1.0));
        if (n + 2 < dim) {
            // <n+2| a†² |n> = sqrt((n+1)(n+2))
            const double c = 0.5 * params.g * std::sqrt((nn + 1.0) * (nn + 2.0));
            t.emplace_back(n + 2, n, c);
            t.emplace_back(n, n + 2, c);
        }
    }
    SparseXc h(dim, dim);
    h.setFromTriplets(t.begin(), t.end());
    return h;
}

Operator<double> build_hamiltonian(const ModelParams& params, Index dim) {
    return Operator<double>(build_hamiltonian_sparse(params, dim));
}

SemiclassicalFixedPoints semiclassical_fixed_points(const ModelParams& params) {
    params.validate();
    SemiclassicalFixedPoints fp;
    const double half_kappa = 0.5 * params.kappa;
    if (params.g <= half_kappa) {
        fp.delta_c = std::numeric_limits<double>::quiet_NaN();
        fp.phi0 = 0.5 * std::asin(-1.0);
        if (params.g > 0.0) fp.phi0 = 0.5 * std::asin(std::max(-1.0, -params.kappa / (2.0 * params.g)));
        return fp;
    }
    const double root = std::sqrt(params.g * params.g - half_kappa * half_kappa);
    fp.delta_c = -root;
    fp.phi0 = 0.5 * std::asin(-params.kappa / (2.0 * params.g));
    const double n0 = (params.delta + root) / params.u;
    if (n0 > 0.0) {
        fp.n0 = n0;
        fp.bistable = true;
    }
    return fp;
}

std::pair<double, double> tunnelling_scales(double n0) {
    if (!(n0 >= 0.0) || !std::isfinite(n0)) throw DomainError("tunnelling_scales: n0 must be finite and >= 0");
    const double inner = std::exp(-n0);
    return {inner, inner * inner};
}

std::pair<double, double> tunnelling_scales(const SemiclassicalFixedPoints& fp) {
    if (!fp.bistable) throw DomainError("tunnelling_scales: fixed points are not bistable");
    return tunnelling_scales(fp.n0);
}

Index default_fock_dim(const ModelParams& params, const TruncationRule& rule) {
    return truncation_for_occupation(semiclassical_fixed_points(params).n0, rule);
}

}  // namespace ppk
