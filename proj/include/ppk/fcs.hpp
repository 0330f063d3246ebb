// fcs.hpp: full counting statistics of the output current: measurement
// superoperators, mean current, two-time correlation, power spectrum and the
// zero-frequency diffusion coefficient for photodetection and homodyne
// detection.
//
// With M the measurement superoperator (jump term κ a·a† for clicks, or
// √κ(a·e^{-iθ} + ·a†e^{iθ}) for homodyne) and w the singular weight (J for
// clicks, 1 for homodyne):
//
//   F(τ)  = <1| M e^{Lτ} M |ρ> - J²                      (τ > 0)
//   S(ω)  = -2 <1| M [L/(L²+ω²)] M |ρ> + w
//   D     = S(0) = -2 <1| M L⁺ M |ρ> + w

#pragma once

#include "ppk/system.hpp"

#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ppk {

enum class Detection { photodetection, homodyne };

class MeasurementScheme {
public:
    static MeasurementScheme photodetection() { return MeasurementScheme(Detection::photodetection, 0.0); }
    static MeasurementScheme homodyne(double theta = std::numbers::pi / 2) {
        return MeasurementScheme(Detection::homodyne, theta);
    }

    Detection kind() const noexcept { return kind_; }
    bool is_homodyne() const noexcept { return kind_ == Detection::homodyne; }

    // Quadrature angle; empty for photodetection.
    std::optional<double> theta() const {
        return is_homodyne() ? std::optional<double>(theta_) : std::nullopt;
    }

    // "pd" or "hom", the tokens used on the command line and in CSV files.
    std::string short_name() const { return is_homodyne() ? "hom" : "pd"; }

private:
    MeasurementScheme(Detection k, double theta) : kind_(k), theta_(theta) {}
    Detection kind_;
    double theta_;
};

// κ a ρ a†
SuperOperator jump_superop(double kappa, const SparseXc& a);
// √κ (a ρ e^{-iθ} + ρ a† e^{+iθ}); its trace is √κ <q_θ>.
SuperOperator homodyne_superop(double kappa, const SparseXc& a, double theta);
SuperOperator measurement_superop(const MeasurementScheme& scheme, double kappa, const SparseXc& a);

// Re <1| M |ρ>: κ<a†a> for clicks, √κ<q_θ> for homodyne.
double mean_current(const SuperOperator& measurement, const DensityMatrix<double>& rho);

struct SpectrumResult {
    std::vector<double> omegas;
    std::vector<double> values;
    double diffusion = 0.0;
    double mean_current = 0.0;
    double max_imag_residual = 0.0;
};

struct CorrelationResult {
    std::vector<double> taus;
    std::vector<double> values;    // smooth part only
    double singular_weight = 0.0;  // coefficient of δ(τ)
    double max_imag_residual = 0.0;
    bool decayed = false;          // |F(last)| < 1e-6 max|F|
};

// Counting statistics for one measurement channel on a solved steady state.
// Cheap to construct once the LiouvillianSolver exists; several schemes can
// share the same solver.
class CountingStatistics {
public:
    CountingStatistics(std::shared_ptr<const LiouvillianSolver> solver, SuperOperator measurement,
                       double singular_weight);

    // PPK model at (params, dim) with the named scheme.
    static CountingStatistics for_model(const SteadyStateSolution& ss, const MeasurementScheme& scheme);

    const LiouvillianSolver& solver() const noexcept { return *solver_; }
    const SuperOperator& measurement() const noexcept { return measurement_; }
    double mean_current() const noexcept { return mean_current_; }
    double singular_weight() const noexcept { return singular_weight_; }

    // S(0). Values in [-1e-8, 0) are clamped to zero with a warning; anything
    // more negative is reported as a SolverFailure.
    double diffusion() const;

    // ‖L x - (1 - |ρ><1|) M|ρ>‖_max of the Drazin solve behind diffusion().
    double diffusion_residual() const;

    // S(ω) on the given grid; ω == 0 uses the Drazin inverse. Frequencies are
    // processed on up to `workers` threads (0 = hardware concurrency).
    SpectrumResult spectrum(std::span<const double> omegas, unsigned workers = 1) const;
    double spectrum_at(double omega) const;

    // Smooth part of F on an ascending grid of τ >= 0 by propagating the
    // fluctuation seed (M - J)|ρ>.
    CorrelationResult correlation(std::span<const double> taus) const;

private:
    double quadratic_form(const VectorXc& x) const;  // Re <1| M x>

    std::shared_ptr<const LiouvillianSolver> solver_;
    SuperOperator measurement_;
    double singular_weight_;
    VectorXc identity_;
    VectorXc seed_;  // M |ρ>
    double mean_current_ = 0.0;
};

// Convenience entry points on a solved steady state.
double diffusion(const SteadyStateSolution& ss, const MeasurementScheme& scheme);
SpectrumResult spectrum(const SteadyStateSolution& ss, const MeasurementScheme& scheme,
                        std::span<const double> omegas, unsigned workers = 1);
CorrelationResult correlation(const SteadyStateSolution& ss, const MeasurementScheme& scheme,
                              std::span<const double> taus);

}  // namespace ppk
