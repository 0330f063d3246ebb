// model.hpp: the parametrically pumped Kerr resonator: rates, Hamiltonian and
// semiclassical fixed points.

#pragma once

#include "ppk/fock.hpp"

#include <utility>

namespace ppk {

// All rates are in units of kappa when kappa == 1 (the default).
struct ModelParams {
    double delta = 0.0;  // detuning
    double g = 0.0;      // two-photon pump strength
    double u = 1.0;      // Kerr nonlinearity
    double kappa = 1.0;  // single-photon loss rate

    // Throws InvalidParameter unless u > 0, kappa > 0, g >= 0 and all are finite.
    void validate() const;

    // Every rate multiplied by s (used by dimensional-analysis checks).
    ModelParams scaled(double s) const { return {delta * s, g * s, u * s, kappa * s}; }
};

struct SemiclassicalFixedPoints {
    double n0 = 0.0;        // occupation of the outer fixed points
    double phi0 = 0.0;      // 1/2 arcsin(-kappa / 2g)
    double delta_c = 0.0;   // continuous-transition detuning; NaN when g <= kappa/2
    bool bistable = false;  // outer fixed points exist (n0 > 0)
};

// H = -delta a†a + (u/2) a†² a² + (g/2)(a†² + a²)
Operator<double> build_hamiltonian(const ModelParams& params, Index dim);
SparseXc build_hamiltonian_sparse(const ModelParams& params, Index dim);

SemiclassicalFixedPoints semiclassical_fixed_points(const ModelParams& params);

// Overlap scales (e^{-n0}, e^{-2 n0}) setting the inner<->outer and
// outer<->outer tunnelling rates up to prefactors.
std::pair<double, double> tunnelling_scales(const SemiclassicalFixedPoints& fp);
std::pair<double, double> tunnelling_scales(double n0);

// Starting Fock dimension for these parameters from the occupation rule.
Index default_fock_dim(const ModelParams& params, const TruncationRule& rule = {});

// Sparse ladder operator, shared by the superoperator and trajectory code.
SparseXc annihilation_sparse(Index dim);

}  // namespace ppk
