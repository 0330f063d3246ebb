// sweep.hpp: detuning sweeps built on the steady-state and FCS solvers:
// occupation curves, diffusion curves, peak location of D, the bifurcation
// estimate on the Δ < 0 side and the peak-scaling fit in κ/U.

#pragma once

#include "ppk/fcs.hpp"
#include "ppk/stats.hpp"

#include <vector>

namespace ppk {

std::vector<double> linspace(double start, double stop, std::size_t count);

struct SweepOptions {
    TruncationRule rule{};
    Index fixed_dim = 0;   // > 0 disables the adaptive truncation
    unsigned workers = 1;  // 0 = hardware concurrency
};

SteadyStateSolution solve_point(const ModelParams& params, const SweepOptions& opts);

struct OccupationPoint {
    ModelParams params;
    Index dim = 0;
    double occupation = 0.0;  // <a†a>
    double scaled = 0.0;      // <a†a> U/κ
    double tail_population = 0.0;
};

std::vector<OccupationPoint> occupation_sweep(const ModelParams& base, std::span<const double> deltas,
                                              const SweepOptions& opts = {});

struct DiffusionPoint {
    ModelParams params;
    MeasurementScheme scheme = MeasurementScheme::photodetection();
    Index dim = 0;
    double mean_current = 0.0;
    double diffusion = 0.0;
    double residual_norm = 0.0;
};

DiffusionPoint diffusion_point(const ModelParams& params, const MeasurementScheme& scheme,
                               const SweepOptions& opts = {});
std::vector<DiffusionPoint> diffusion_sweep(const ModelParams& base, std::span<const double> deltas,
                                            const MeasurementScheme& scheme, const SweepOptions& opts = {});

struct PeakSearch {
    double delta_min = 0.0;
    double delta_max = 3.0;
    double step = 0.05;
    double tolerance = 1e-3;  // golden-section bracket width
};

struct DiffusionPeak {
    double delta = 0.0;
    double diffusion = 0.0;
    Index dim = 0;
    bool at_boundary = false;  // coarse maximum sat on the search edge
};

// Coarse grid over [delta_min, delta_max], then golden-section refinement of
// log D around the best grid point at a fixed truncation. Warns when the
// maximum sits on the grid boundary.
DiffusionPeak max_diffusion(const ModelParams& base, const MeasurementScheme& scheme,
                            const PeakSearch& search = {}, const SweepOptions& opts = {});

struct DiscontinuousPoint {
    double g = 0.0;
    double delta_d = 0.0;
    double diffusion = 0.0;
    bool at_boundary = false;
};

// Δ_d(G) as the detuning maximizing D_PD for each pump strength.
std::vector<DiscontinuousPoint> locate_discontinuous_line(const ModelParams& base, std::span<const double> g_grid,
                                                          const PeakSearch& search = {},
                                                          const SweepOptions& opts = {});

struct BifurcationEstimate {
    double steepest = 0.0;        // argmax d(nU/κ)/dΔ
    double max_curvature = 0.0;   // argmax d²(nU/κ)/dΔ², diagnostic
    std::vector<double> deltas;
    std::vector<double> scaled_occupation;
};

// Onset of the continuous transition on a uniform grid in [delta_min, delta_max]
// (default [-2, 0] with step 0.02) using centred differences.
BifurcationEstimate steepest_growth_detuning(const ModelParams& base, double delta_min = -2.0,
                                             double delta_max = 0.0, double step = 0.02,
                                             const SweepOptions& opts = {});

struct ScalingResult {
    std::vector<double> inverse_u;  // κ/U
    std::vector<DiffusionPeak> peaks;
    LinearFit log_fit;              // ln(max D) against κ/U
    LinearFit loglog_fit;           // ln(max D) against ln(κ/U), algebraic exponent
};

// Peak diffusion against κ/U at fixed G; U = κ / ratio for each entry.
ScalingResult diffusion_scaling(const ModelParams& base, std::span<const double> inverse_u,
                                const MeasurementScheme& scheme, const PeakSearch& search = {},
                                const SweepOptions& opts = {});

}  // namespace ppk
