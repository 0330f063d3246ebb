// ppk: command-line front end. Every subcommand builds a SweepSpec and hands
// it to the runner; options may also come from an INI/TOML file given with
// --config (one section per subcommand), with flags taking precedence.

#include "runner.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using ppk::cli::SweepSpec;
using ppk::cli::Task;

void add_model_options(CLI::App& cmd, SweepSpec& s) {
    cmd.add_option("--delta", s.base.delta, "detuning (units of kappa)")->capture_default_str();
    cmd.add_option("--g", s.base.g, "two-photon pump strength")->capture_default_str();
    cmd.add_option("--u", s.base.u, "Kerr nonlinearity (> 0)")->capture_default_str();
    cmd.add_option("--kappa", s.base.kappa, "single-photon loss rate (> 0)")->capture_default_str();
    cmd.add_option("--dim", s.dim, "Fock dimension; 0 selects it adaptively")->capture_default_str();
    cmd.add_option("--out", s.out, "output CSV path")->required();
    cmd.add_option("--workers", s.workers, "worker threads; 0 uses all cores")->capture_default_str();
    cmd.add_flag("--resume", s.resume, "continue an interrupted run from its manifest");
}

void add_scheme_options(CLI::App& cmd, SweepSpec& s) {
    cmd.add_option("--scheme", s.scheme, "measurement scheme")->check(CLI::IsMember({"pd", "hom"}));
    cmd.add_option("--theta", s.theta, "homodyne quadrature angle (radians)")->capture_default_str();
}

void add_omega_options(CLI::App& cmd, SweepSpec& s) {
    cmd.add_option("--omega-min", s.omega_min)->capture_default_str();
    cmd.add_option("--omega-max", s.omega_max)->capture_default_str();
    cmd.add_option("--omega-count", s.omega_count)->capture_default_str();
}

void add_trajectory_options(CLI::App& cmd, SweepSpec& s) {
    cmd.add_option("--dt", s.dt, "integration step (1/kappa)")->capture_default_str();
    cmd.add_option("--t-final", s.t_final, "trajectory length (1/kappa)")->capture_default_str();
    cmd.add_option("--n-traj", s.n_traj, "trajectories per point")->capture_default_str();
    cmd.add_option("--seed", s.seed, "RNG seed")->capture_default_str();
    cmd.add_option("--record-stride", s.record_stride, "integration steps per recorded sample")->capture_default_str();
}

void add_peak_options(CLI::App& cmd, SweepSpec& s) {
    cmd.add_option("--delta-min", s.delta_min, "peak search: lowest detuning")->capture_default_str();
    cmd.add_option("--delta-max", s.delta_max, "peak search: highest detuning")->capture_default_str();
    cmd.add_option("--delta-step", s.delta_step, "peak search: coarse grid step")->capture_default_str();
}

void add_wigner_options(CLI::App& cmd, SweepSpec& s) {
    cmd.add_option("--extent", s.wigner_extent, "grid half-width; 0 derives it from n0")->capture_default_str();
    cmd.add_option("--step", s.wigner_step, "grid spacing")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parametrically pumped Kerr resonator: steady states, counting statistics and trajectories"};
    app.set_config("--config", "", "INI/TOML file with one [section] per subcommand");
    app.require_subcommand(1);

    SweepSpec spec;
    std::string task = "steady_state";
    std::vector<std::string> axes;
    std::vector<double> g_values{0.6, 0.8, 1.0};
    double inv_min = 2.0, inv_max = 12.0;
    std::size_t inv_count = 11;

    auto* steady = app.add_subcommand("steady-state", "steady-state occupation and diagnostics");
    add_model_options(*steady, spec);

    auto* wig = app.add_subcommand("wigner", "steady-state Wigner function on a grid");
    add_model_options(*wig, spec);
    add_wigner_options(*wig, spec);

    auto* spectrum = app.add_subcommand("spectrum", "power spectrum S(omega) of the output current");
    add_model_options(*spectrum, spec);
    add_scheme_options(*spectrum, spec);
    add_omega_options(*spectrum, spec);

    auto* diffusion = app.add_subcommand("diffusion", "zero-frequency diffusion coefficient");
    add_model_options(*diffusion, spec);
    add_scheme_options(*diffusion, spec);

    auto* traj = app.add_subcommand("trajectory", "conditional trajectories and measurement records");
    add_model_options(*traj, spec);
    add_scheme_options(*traj, spec);
    add_trajectory_options(*traj, spec);

    auto* sweep = app.add_subcommand("sweep", "any task over a grid of parameters");
    add_model_options(*sweep, spec);
    add_scheme_options(*sweep, spec);
    add_omega_options(*sweep, spec);
    add_trajectory_options(*sweep, spec);
    add_peak_options(*sweep, spec);
    add_wigner_options(*sweep, spec);
    sweep->add_option("--task", task, "steady_state|spectrum|diffusion|wigner|trajectory|scaling|phase_diagram")
        ->capture_default_str();
    sweep->add_option("--axis", axes, "name:start:stop:count[:lin|log] or name=v1,v2,... (repeatable)");
    sweep->add_option("--stop-after", spec.stop_after, "stop after this many points (resume testing)");

    auto* scaling = app.add_subcommand("scaling", "peak diffusion against kappa/U for both schemes");
    add_model_options(*scaling, spec);
    add_scheme_options(*scaling, spec);
    add_peak_options(*scaling, spec);
    scaling->add_option("--g-values", g_values, "pump strengths")->delimiter(',')->capture_default_str();
    scaling->add_option("--inverse-u-min", inv_min)->capture_default_str();
    scaling->add_option("--inverse-u-max", inv_max)->capture_default_str();
    scaling->add_option("--inverse-u-count", inv_count)->capture_default_str();

    try {
        app.parse(argc, argv);
        if (steady->parsed()) spec.task = Task::steady_state;
        if (wig->parsed()) spec.task = Task::wigner;
        if (spectrum->parsed()) spec.task = Task::spectrum;
        if (diffusion->parsed()) spec.task = Task::diffusion;
        if (traj->parsed()) spec.task = Task::trajectory;
        if (sweep->parsed()) {
            spec.task = ppk::cli::parse_task(task);
            for (const auto& a : axes) spec.axes.push_back(ppk::cli::Axis::parse(a));
            if (spec.task == Task::phase_diagram && spec.axes.empty())
                spec.axes = {ppk::cli::Axis::linear("g", 0.5, 1.5, 30), ppk::cli::Axis::linear("delta", -3.0, 3.0, 60)};
        }
        if (scaling->parsed()) {
            spec.task = Task::scaling;
            spec.axes = {ppk::cli::Axis{"g", g_values}, ppk::cli::Axis::linear("inverse_u", inv_min, inv_max, inv_count)};
        }
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return ppk::cli::run_with_exit_code(spec, std::cout, std::cerr);
}
