// runner.hpp: task orchestration behind the command line: a sweep
// specification, per-task CSV schemas, ordered writing and resumable
// manifests.

#pragma once

#include "ppk/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ppk::cli {

inline constexpr const char* kToolVersion = "0.3.0";

enum class Task { steady_state, spectrum, diffusion, wigner, trajectory, scaling, phase_diagram };

Task parse_task(const std::string& name);
std::string task_name(Task t);

struct Axis {
    std::string name;  // delta, g, u, kappa, theta or inverse_u
    std::vector<double> values;

    // "name:start:stop:count[:lin|log]" or "name=v1,v2,...".
    static Axis parse(const std::string& text);
    static Axis linear(std::string name, double start, double stop, std::size_t count);
};

struct SweepSpec {
    Task task = Task::steady_state;
    ModelParams base{0.0, 1.0, 1.0, 1.0};
    std::string scheme;  // "pd", "hom" or empty for the task default
    double theta = 1.5707963267948966;
    Index dim = 0;       // 0 = adaptive truncation
    std::vector<Axis> axes;

    double omega_min = 0.0, omega_max = 10.0;
    std::size_t omega_count = 101;

    double dt = 1e-3, t_final = 100.0;
    std::size_t n_traj = 1;
    std::uint64_t seed = 0;
    Index record_stride = 100;

    double delta_min = 0.0, delta_max = 3.0, delta_step = 0.05;  // peak search
    double wigner_extent = 0.0;                                  // 0 = from n0
    double wigner_step = 0.2;

    std::string out;
    unsigned workers = 1;
    bool resume = false;
    std::size_t stop_after = 0;  // > 0: stop after this many points (interrupt testing)

    // Throws ValidationError.
    void validate() const;
    // Canonical description of everything that affects the output.
    std::string fingerprint() const;
    std::size_t point_count() const;
};

struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunSummary {
    std::size_t points_total = 0;
    std::size_t points_done = 0;
    std::size_t rows = 0;
    bool complete = false;
};

// Runs the spec, writing spec.out and spec.out + ".manifest". Throws
// ValidationError or NumericalFailure naming the failing point.
RunSummary run(const SweepSpec& spec, std::ostream& log);

// Exit code convention: 0 success, 1 validation, 2 numerical failure.
int run_with_exit_code(const SweepSpec& spec, std::ostream& log, std::ostream& err);

}  // namespace ppk::cli
