// trajectories.hpp: conditional dynamics under continuous photodetection
// and homodyne detection, plus ensemble estimates built from the records.
//
// Each step applies a first-order Kraus map ρ -> MρM† / tr:
//   no click:  M = exp(-(iH + κ/2 a†a) dt)
//   click:     ρ -> aρa† / tr, with probability κ<a†a> dt
//   homodyne:  M = exp(-(iH + κ/2 a†a) dt) + √κ e^{-iθ} a dY,
//              dY = √κ<q_θ> dt + dW, current I = dY/dt
// Pure initial states are evolved as kets, mixed ones as density matrices.

#pragma once

#include "ppk/fcs.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace ppk {

struct TrajectoryConfig {
    double dt = 1e-3;
    double t_final = 10.0;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;  // trajectory index; the ensemble runner sets it
    Index record_stride = 1;   // integration steps per recorded sample
    MeasurementScheme scheme = MeasurementScheme::photodetection();
    std::optional<DensityMatrix<double>> initial_state;  // vacuum when empty
    Index dim = 0;             // truncation when initial_state is empty; 0 = default rule
    double max_jump_probability = 0.05;
    Index check_interval = 1000;  // steps between positivity checks (mixed states)
    bool keep_final_state = false;

    void validate() const;
};

struct TrajectoryMoments {
    std::vector<double> occupation;           // <a†a>
    std::vector<double> x;                    // <a + a†>
    std::vector<double> p;                    // <i(a† - a)>
    std::vector<double> occupation_variance;  // Var(a†a)
};

struct TrajectoryRecord {
    std::vector<double> times;    // end of each recorded bin
    std::vector<double> current;  // clicks per unit time, or the binned homodyne current
    TrajectoryMoments moments;
    std::vector<double> jump_times;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    double bin_width = 0.0;
    std::optional<MatrixXc> final_state;

    std::size_t size() const noexcept { return times.size(); }
};

// Independent RNG stream for (seed, stream index).
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream);

TrajectoryRecord simulate_photodetection(const ModelParams& params, const TrajectoryConfig& config);
TrajectoryRecord simulate_homodyne(const ModelParams& params, const TrajectoryConfig& config);
TrajectoryRecord simulate(const ModelParams& params, const TrajectoryConfig& config);

// n_traj records with stream indices 0..n_traj-1, ordered by index.
std::vector<TrajectoryRecord> run_ensemble(const ModelParams& params, const TrajectoryConfig& config,
                                           std::size_t n_traj, unsigned workers = 1);

// y_{k+1} = y_k + (dt/τ_f)(I_k - y_k), y_0 = I_0. Throws InvalidParameter
// unless tau_f > dt.
std::vector<double> low_pass_filter(std::span<const double> samples, double dt, double tau_f);
std::vector<double> low_pass_filter(const TrajectoryRecord& record, double tau_f);

// -1, 0, +1 for samples below -threshold, within, above +threshold.
std::vector<int> classify_plateaus(std::span<const double> filtered, double threshold);
// Fractions of samples in the negative, central and positive plateaus.
std::array<double, 3> dwell_fractions(std::span<const int> labels);
// √κ √n0 / 2, half the homodyne separation of the outer lobes.
double plateau_threshold(const ModelParams& params);

struct DiffusionEstimate {
    double d_hat = 0.0;
    double std_error = 0.0;
    std::size_t n_trajectories = 0;
    double burn_in = 0.0;
    double window = 0.0;
    double r_squared = 0.0;
};

struct EstimateOptions {
    std::size_t min_records = 100;
    double min_window = 50.0;
    std::size_t checkpoints = 40;       // at least 20
    double first_checkpoint = 0.2;      // fraction of the window skipped before fitting
    std::size_t bootstrap_samples = 400;
    std::uint64_t bootstrap_seed = 0;
};

// Slope of Var[Q(t)] across trajectories, Q the current integrated from
// burn_in. std_error from a bootstrap over trajectories.
DiffusionEstimate estimate_diffusion(std::span<const TrajectoryRecord> records, double burn_in, double window,
                                     const EstimateOptions& opts = {});

}  // namespace ppk
