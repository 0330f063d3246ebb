// system.hpp: the PPK master equation assembled on a concrete truncation,
// with the adaptive Fock-dimension retry loop.

#pragma once

#include "ppk/model.hpp"
#include "ppk/superop.hpp"

#include <memory>

namespace ppk {

// Liouvillian of the PPK model: H from build_hamiltonian, single jump
// operator a with rate kappa.
SuperOperator ppk_liouvillian(const ModelParams& params, Index dim);

struct SteadyStateSolution {
    ModelParams params;
    Index dim = 0;
    std::shared_ptr<const LiouvillianSolver> solver;
    double tail_population = 0.0;  // population of the top 10% of levels
    int retries = 0;               // truncation doublings used

    const DensityMatrix<double>& rho() const { return solver->steady_state(); }
    double mean_occupation() const;
};

// Steady state at a fixed truncation (no adequacy retry).
SteadyStateSolution solve_steady_state(const ModelParams& params, Index dim);

// Starts from default_fock_dim(params) (or `start_dim` when > 0) and doubles
// the truncation until the tail population drops below rule.tail_tolerance.
// Throws TruncationTooSmall once rule.max_retries doublings are exhausted.
SteadyStateSolution solve_steady_state_adaptive(const ModelParams& params, const TruncationRule& rule = {},
                                                Index start_dim = 0);

}  // namespace ppk
