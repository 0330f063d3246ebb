#include "ppk/system.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ppk {

SuperOperator ppk_liouvillian(const ModelParams& params, Index dim) {
    const SparseXc h = build_hamiltonian_sparse(params, dim);
    const JumpOperator loss{annihilation_sparse(dim), params.kappa};
    return liouvillian(h, std::span<const JumpOperator>(&loss, 1));
}

double SteadyStateSolution::mean_occupation() const {
    const auto& m = rho().matrix();
    double n = 0.0;
    for (Index k = 0; k < m.rows(); ++k) n += static_cast<double>(k) * m(k, k).real();
    return n;
}

namespace {

double top_tail(const DensityMatrix<double>& rho, const TruncationRule& rule) {
    const Index count = std::max<Index>(1, static_cast<Index>(std::ceil(rule.tail_fraction * static_cast<double>(rho.dim()))));
    return tail_population(rho, rho.dim() - count);
}

}  // namespace

SteadyStateSolution solve_steady_state(const ModelParams& params, Index dim) {
    params.validate();
    SteadyStateSolution s;
    s.params = params;
    s.dim = dim;
    s.solver = std::make_shared<const LiouvillianSolver>(ppk_liouvillian(params, dim));
    s.tail_population = top_tail(s.rho(), TruncationRule{});
    return s;
}

SteadyStateSolution solve_steady_state_adaptive(const ModelParams& params, const TruncationRule& rule,
                                                Index start_dim) {
    params.validate();
    Index dim = start_dim > 0 ? start_dim : default_fock_dim(params, rule);
    for (int attempt = 0;; ++attempt) {
        SteadyStateSolution s;
        s.params = params;
        s.dim = dim;
        s.retries = attempt;
        s.solver = std::make_shared<const LiouvillianSolver>(ppk_liouvillian(params, dim));
        s.tail_population = top_tail(s.rho(), rule);
        if (s.tail_population < rule.tail_tolerance) return s;
        if (attempt >= rule.max_retries || dim >= rule.cap_levels + 1) {
            std::ostringstream os;
            os << "steady state at (delta=" << params.delta << ", g=" << params.g << ", u=" << params.u
               << ") still has tail population " << s.tail_population << " at Fock dimension " << dim;
            throw TruncationTooSmall(os.str(), 2 * dim);
        }
        dim = std::min<Index>(2 * dim, rule.cap_levels + 1);
    }
}

}  // namespace ppk
