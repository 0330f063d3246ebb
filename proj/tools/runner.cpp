#include "runner.hpp"

#include "ppk/csv.hpp"
#include "ppk/parallel.hpp"
#include "ppk/sweep.hpp"
#include "ppk/trajectories.hpp"
#include "ppk/wigner.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace ppk::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::pair<Task, std::string>> kTasks = {
    {Task::steady_state, "steady_state"}, {Task::spectrum, "spectrum"},     {Task::diffusion, "diffusion"},
    {Task::wigner, "wigner"},             {Task::trajectory, "trajectory"}, {Task::scaling, "scaling"},
    {Task::phase_diagram, "phase_diagram"}};

const std::vector<std::string> kAxisNames = {"delta", "g", "u", "kappa", "theta", "inverse_u"};

double to_number(const std::string& s, const std::string& context) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError(context + ": '" + s + "' is not a number");
    }
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream is(s);
    while (std::getline(is, part, sep)) parts.push_back(part);
    return parts;
}

struct Point {
    ModelParams params;
    double theta = 0.0;
    double inverse_u = 0.0;
};

std::string describe(const Point& p) {
    std::ostringstream os;
    os << "g=" << p.params.g << ", delta=" << p.params.delta << ", u=" << p.params.u << ", kappa=" << p.params.kappa
       << ", theta=" << p.theta;
    return os.str();
}

std::vector<Point> expand(const SweepSpec& spec) {
    std::vector<Point> points{{spec.base, spec.theta, spec.base.kappa / spec.base.u}};
    for (const auto& axis : spec.axes) {
        std::vector<Point> next;
        next.reserve(points.size() * axis.values.size());
        for (const auto& p : points) {
            for (double v : axis.values) {
                Point q = p;
                if (axis.name == "delta") q.params.delta = v;
                else if (axis.name == "g") q.params.g = v;
                else if (axis.name == "u") q.params.u = v;
                else if (axis.name == "kappa") q.params.kappa = v;
                else if (axis.name == "theta") q.theta = v;
                else if (axis.name == "inverse_u") q.params.u = q.params.kappa / v;
                q.inverse_u = q.params.kappa / q.params.u;
                next.push_back(q);
            }
        }
        points = std::move(next);
    }
    return points;
}

std::vector<MeasurementScheme> schemes_for(const SweepSpec& spec, double theta) {
    if (spec.scheme == "pd") return {MeasurementScheme::photodetection()};
    if (spec.scheme == "hom") return {MeasurementScheme::homodyne(theta)};
    if (spec.task == Task::scaling) return {MeasurementScheme::photodetection(), MeasurementScheme::homodyne(theta)};
    return {MeasurementScheme::photodetection()};
}

std::string theta_cell(const MeasurementScheme& s) { return s.is_homodyne() ? csv::format(*s.theta()) : "nan"; }

std::vector<std::string> columns_for(Task t) {
    switch (t) {
        case Task::steady_state:
        case Task::phase_diagram:
            return {"g", "delta", "u", "kappa", "dim", "occupation", "scaled_occupation", "tail_population",
                    "steady_residual", "retries"};
        case Task::diffusion:
            return {"g", "delta", "u", "kappa", "scheme", "theta", "dim", "mean_current", "diffusion", "residual_norm"};
        case Task::spectrum:
            return {"g", "delta", "u", "kappa", "scheme", "theta", "dim", "omega", "spectrum"};
        case Task::wigner:
            return {"g", "delta", "u", "kappa", "dim", "x", "p", "w"};
        case Task::trajectory:
            return {"g",    "delta",   "u",          "kappa", "scheme", "theta", "dim",
                    "seed", "trajectory", "time",    "current", "occupation", "x",     "p"};
        case Task::scaling:
            return {"g", "inverse_u", "u", "kappa", "scheme", "theta", "delta_peak", "max_diffusion", "dim",
                    "at_boundary"};
    }
    return {};
}

SweepOptions sweep_options(const SweepSpec& spec, unsigned inner_workers) {
    SweepOptions o;
    o.fixed_dim = spec.dim;
    o.workers = inner_workers;
    return o;
}

using Rows = std::vector<csv::Row>;

Rows run_point(const SweepSpec& spec, const Point& pt, std::size_t index, unsigned inner_workers) {
    const auto& p = pt.params;
    const std::string g = csv::format(p.g), d = csv::format(p.delta), u = csv::format(p.u), k = csv::format(p.kappa);
    const SweepOptions opts = sweep_options(spec, inner_workers);
    Rows rows;
    switch (spec.task) {
        case Task::steady_state:
        case Task::phase_diagram: {
            const auto ss = solve_point(p, opts);
            const double n = ss.mean_occupation();
            rows.push_back({g, d, u, k, csv::format(std::int64_t(ss.dim)), csv::format(n), csv::format(n * p.u / p.kappa),
                            csv::format(ss.tail_population), csv::format(ss.solver->steady_state_residual()),
                            csv::format(ss.retries)});
            break;
        }
        case Task::diffusion: {
            const auto ss = solve_point(p, opts);
            for (const auto& s : schemes_for(spec, pt.theta)) {
                const auto cs = CountingStatistics::for_model(ss, s);
                rows.push_back({g, d, u, k, s.short_name(), theta_cell(s), csv::format(std::int64_t(ss.dim)),
                                csv::format(cs.mean_current()), csv::format(cs.diffusion()),
                                csv::format(cs.diffusion_residual())});
            }
            break;
        }
        case Task::spectrum: {
            const auto ss = solve_point(p, opts);
            const auto omegas = linspace(spec.omega_min, spec.omega_max, spec.omega_count);
            for (const auto& s : schemes_for(spec, pt.theta)) {
                const auto r = CountingStatistics::for_model(ss, s).spectrum(omegas, inner_workers);
                for (std::size_t i = 0; i < omegas.size(); ++i)
                    rows.push_back({g, d, u, k, s.short_name(), theta_cell(s), csv::format(std::int64_t(ss.dim)),
                                    csv::format(omegas[i]), csv::format(r.values[i])});
            }
            break;
        }
        case Task::wigner: {
            const auto ss = solve_point(p, opts);
            const auto fp = semiclassical_fixed_points(p);
            const double extent = spec.wigner_extent > 0.0 ? spec.wigner_extent : std::max(6.0, recommended_extent(fp.n0));
            const auto grid = wigner(ss.rho(), WignerGridSpec::symmetric(extent, spec.wigner_step), inner_workers);
            const std::string dim = csv::format(std::int64_t(ss.dim));
            for (std::size_t i = 0; i < grid.x_values.size(); ++i)
                for (std::size_t j = 0; j < grid.p_values.size(); ++j)
                    rows.push_back({g, d, u, k, dim, csv::format(grid.x_values[i]), csv::format(grid.p_values[j]),
                                    csv::format(grid.values(Index(i), Index(j)))});
            break;
        }
        case Task::trajectory: {
            TrajectoryConfig c;
            c.dt = spec.dt;
            c.t_final = spec.t_final;
            c.seed = spec.seed + index;
            c.record_stride = spec.record_stride;
            c.dim = spec.dim > 0 ? spec.dim : default_fock_dim(p);
            const auto s = schemes_for(spec, pt.theta).front();
            c.scheme = s;
            const auto records = run_ensemble(p, c, spec.n_traj, inner_workers);
            const std::string dim = csv::format(std::int64_t(c.dim)), seed = csv::format(c.seed);
            for (std::size_t t = 0; t < records.size(); ++t) {
                const auto& r = records[t];
                for (std::size_t i = 0; i < r.size(); ++i)
                    rows.push_back({g, d, u, k, s.short_name(), theta_cell(s), dim, seed, csv::format(std::uint64_t(t)),
                                    csv::format(r.times[i]), csv::format(r.current[i]),
                                    csv::format(r.moments.occupation[i]), csv::format(r.moments.x[i]),
                                    csv::format(r.moments.p[i])});
            }
            break;
        }
        case Task::scaling: {
            PeakSearch search{spec.delta_min, spec.delta_max, spec.delta_step, 1e-3};
            for (const auto& s : schemes_for(spec, pt.theta)) {
                const auto peak = max_diffusion(p, s, search, opts);
                rows.push_back({g, csv::format(pt.inverse_u), u, k, s.short_name(), theta_cell(s),
                                csv::format(peak.delta), csv::format(peak.diffusion),
                                csv::format(std::int64_t(peak.dim)), peak.at_boundary ? "1" : "0"});
            }
            break;
        }
    }
    return rows;
}

csv::Metadata metadata_for(const SweepSpec& spec, std::size_t points) {
    csv::Metadata m = {{"tool", std::string("ppk ") + kToolVersion},
                       {"task", task_name(spec.task)},
                       {"units", "rates and times in units of kappa"},
                       {"delta", csv::format(spec.base.delta)},
                       {"g", csv::format(spec.base.g)},
                       {"u", csv::format(spec.base.u)},
                       {"kappa", csv::format(spec.base.kappa)},
                       {"theta", csv::format(spec.theta)},
                       {"scheme", spec.scheme.empty() ? "default" : spec.scheme},
                       {"dim", spec.dim > 0 ? csv::format(std::int64_t(spec.dim)) : "adaptive"},
                       {"points", csv::format(std::uint64_t(points))}};
    for (const auto& a : spec.axes) {
        std::string vals;
        for (std::size_t i = 0; i < a.values.size(); ++i) vals += (i ? " " : "") + csv::format(a.values[i]);
        m.emplace_back("axis " + a.name, vals);
    }
    if (spec.dim == 0)
        m.emplace_back("truncation", "adaptive: top 10% of levels below 1e-8 population, up to 2 doublings");
    switch (spec.task) {
        case Task::spectrum:
            m.emplace_back("omega", csv::format(spec.omega_min) + " " + csv::format(spec.omega_max) + " " +
                                        csv::format(std::uint64_t(spec.omega_count)));
            break;
        case Task::trajectory:
            m.emplace_back("dt", csv::format(spec.dt));
            m.emplace_back("t_final", csv::format(spec.t_final));
            m.emplace_back("record_stride", csv::format(std::int64_t(spec.record_stride)));
            m.emplace_back("n_traj", csv::format(std::uint64_t(spec.n_traj)));
            m.emplace_back("seed", csv::format(spec.seed));
            m.emplace_back("current", "photodetection: clicks per bin / bin width; homodyne: dY per bin / bin width");
            break;
        case Task::wigner:
            m.emplace_back("convention", "x = a + a^dagger, p = i(a^dagger - a), vacuum W = exp(-(x^2+p^2)/2)/(2 pi)");
            m.emplace_back("grid_step", csv::format(spec.wigner_step));
            break;
        case Task::scaling:
            m.emplace_back("peak_search", csv::format(spec.delta_min) + " " + csv::format(spec.delta_max) + " " +
                                              csv::format(spec.delta_step));
            break;
        default:
            break;
    }
    return m;
}

struct Manifest {
    std::string fingerprint;
    std::size_t points_done = 0;
    std::size_t rows = 0;
    std::size_t points_total = 0;
};

void save_manifest(const std::string& path, const Manifest& m) {
    const json j = {{"fingerprint", m.fingerprint},
                    {"points_done", m.points_done},
                    {"rows", m.rows},
                    {"points_total", m.points_total},
                    {"complete", m.points_done == m.points_total}};
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::trunc);
        if (!os) throw ValidationError("cannot write manifest '" + tmp + "'");
        os << j.dump(2) << '\n';
    }
    fs::rename(tmp, path);
}

std::optional<Manifest> load_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) return std::nullopt;
    try {
        const json j = json::parse(is);
        Manifest m;
        m.fingerprint = j.at("fingerprint").get<std::string>();
        m.points_done = j.at("points_done").get<std::size_t>();
        m.rows = j.at("rows").get<std::size_t>();
        m.points_total = j.at("points_total").get<std::size_t>();
        return m;
    } catch (const std::exception& e) {
        throw ValidationError("manifest '" + path + "' is unreadable: " + e.what());
    }
}

}  // namespace

Task parse_task(const std::string& name) {
    for (const auto& [t, n] : kTasks)
        if (n == name) return t;
    throw ValidationError("unknown task '" + name + "'");
}

std::string task_name(Task t) {
    for (const auto& [k, n] : kTasks)
        if (k == t) return n;
    return "?";
}

Axis Axis::linear(std::string name, double start, double stop, std::size_t count) {
    return {std::move(name), linspace(start, stop, count)};
}

Axis Axis::parse(const std::string& text) {
    const auto eq = text.find('=');
    if (eq != std::string::npos) {
        Axis a{text.substr(0, eq), {}};
        for (const auto& v : split(text.substr(eq + 1), ','))
            a.values.push_back(to_number(v, "axis '" + a.name + "'"));
        if (a.values.empty()) throw ValidationError("axis '" + a.name + "' has no values");
        return a;
    }
    const auto parts = split(text, ':');
    if (parts.size() != 4 && parts.size() != 5)
        throw ValidationError("axis '" + text + "' must be name:start:stop:count[:lin|log] or name=v1,v2,...");
    const double start = to_number(parts[1], "axis start"), stop = to_number(parts[2], "axis stop");
    const double count = to_number(parts[3], "axis count");
    if (!(count >= 1.0) || count != std::floor(count)) throw ValidationError("axis count must be a positive integer");
    const std::string spacing = parts.size() == 5 ? parts[4] : "lin";
    Axis a{parts[0], {}};
    if (spacing == "lin") {
        a.values = linspace(start, stop, static_cast<std::size_t>(count));
    } else if (spacing == "log") {
        if (!(start > 0.0 && stop > 0.0)) throw ValidationError("log axis '" + a.name + "' needs positive bounds");
        for (double v : linspace(std::log(start), std::log(stop), static_cast<std::size_t>(count)))
            a.values.push_back(std::exp(v));
        a.values.front() = start;
        a.values.back() = stop;
    } else {
        throw ValidationError("axis spacing must be 'lin' or 'log', got '" + spacing + "'");
    }
    return a;
}

void SweepSpec::validate() const {
    try {
        base.validate();
    } catch (const std::invalid_argument& e) {
        throw ValidationError(e.what());
    }
    if (!scheme.empty() && scheme != "pd" && scheme != "hom")
        throw ValidationError("scheme must be 'pd' or 'hom', got '" + scheme + "'");
    if (!std::isfinite(theta)) throw ValidationError("theta must be finite");
    if (dim != 0 && dim < 2) throw ValidationError("dim must be >= 2 (or 0 for adaptive)");
    if (axes.size() > 3) throw ValidationError("at most three sweep axes are supported");
    for (const auto& a : axes) {
        if (std::find(kAxisNames.begin(), kAxisNames.end(), a.name) == kAxisNames.end())
            throw ValidationError("unknown axis parameter '" + a.name + "'");
        if (a.values.empty()) throw ValidationError("axis '" + a.name + "' has no values");
    }
    if (omega_count < 1) throw ValidationError("omega-count must be >= 1");
    if (!(omega_max >= omega_min)) throw ValidationError("omega-max must be >= omega-min");
    if (task == Task::trajectory) {
        if (!(dt > 0.0)) throw ValidationError("dt must be > 0");
        if (!(t_final > dt)) throw ValidationError("t-final must exceed dt");
        if (n_traj < 1) throw ValidationError("n-traj must be >= 1");
        if (record_stride < 1) throw ValidationError("record-stride must be >= 1");
    }
    if (task == Task::scaling && !(delta_max > delta_min && delta_step > 0.0))
        throw ValidationError("scaling needs delta-max > delta-min and delta-step > 0");
    if (task == Task::wigner && !(wigner_step > 0.0)) throw ValidationError("wigner step must be > 0");
    if (out.empty()) throw ValidationError("--out is required");
    for (const auto& p : expand(*this)) {
        try {
            p.params.validate();
        } catch (const std::invalid_argument& e) {
            throw ValidationError(std::string(e.what()) + " at sweep point (" + describe(p) + ")");
        }
    }
}

std::string SweepSpec::fingerprint() const {
    json axes_j = json::array();
    for (const auto& a : axes) axes_j.push_back({{"name", a.name}, {"values", a.values}});
    const json j = {{"version", kToolVersion},
                    {"task", task_name(task)},
                    {"params", {base.delta, base.g, base.u, base.kappa}},
                    {"scheme", scheme},
                    {"theta", theta},
                    {"dim", dim},
                    {"axes", axes_j},
                    {"omega", {omega_min, omega_max, omega_count}},
                    {"trajectory", {dt, t_final, n_traj, seed, record_stride}},
                    {"peak_search", {delta_min, delta_max, delta_step}},
                    {"wigner", {wigner_extent, wigner_step}}};
    return j.dump();
}

std::size_t SweepSpec::point_count() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.values.size();
    return n;
}

RunSummary run(const SweepSpec& spec, std::ostream& log) {
    spec.validate();
    const auto points = expand(spec);
    const std::string manifest_path = spec.out + ".manifest";
    const std::string fp = spec.fingerprint();

    std::size_t start = 0;
    std::optional<csv::Writer> writer;
    if (spec.resume) {
        if (const auto m = load_manifest(manifest_path)) {
            if (m->fingerprint != fp)
                throw ValidationError("cannot resume: '" + manifest_path + "' was written for a different run");
            try {
                writer.emplace(csv::Writer::resume(spec.out, m->rows));
            } catch (const std::runtime_error& e) {
                throw ValidationError(e.what());
            }
            start = m->points_done;
            log << "resuming at point " << start << " of " << points.size() << '\n';
        } else {
            log << "no manifest at '" << manifest_path << "'; starting from scratch\n";
        }
    }
    if (!writer) {
        const auto parent = fs::path(spec.out).parent_path();
        if (!parent.empty() && !fs::exists(parent)) throw ValidationError("output directory '" + parent.string() + "' does not exist");
        try {
            writer.emplace(spec.out, metadata_for(spec, points.size()), columns_for(spec.task));
        } catch (const std::runtime_error& e) {
            throw ValidationError(e.what());
        }
    }

    Manifest manifest{fp, start, writer->rows_written(), points.size()};
    save_manifest(manifest_path, manifest);

    std::size_t end = points.size();
    if (spec.stop_after > 0) end = std::min(end, start + spec.stop_after);
    const unsigned workers = resolve_workers(spec.workers);
    const unsigned inner = points.size() == 1 ? workers : 1;
    const std::size_t batch = points.size() == 1 ? 1 : workers;

    for (std::size_t b = start; b < end; b += batch) {
        const std::size_t n = std::min(batch, end - b);
        std::vector<Rows> results(n);
        std::vector<std::string> failures(n);
        parallel_for(n, workers, [&](std::size_t i) {
            try {
                results[i] = run_point(spec, points[b + i], b + i, inner);
            } catch (const std::invalid_argument& e) {
                failures[i] = std::string("v") + e.what();
            } catch (const std::exception& e) {
                failures[i] = std::string("n") + e.what();
            }
        });
        // Results are written strictly in point order; the first failing
        // point stops the run with everything before it flushed.
        for (std::size_t i = 0; i < n; ++i) {
            if (!failures[i].empty()) {
                std::ostringstream os;
                os << "point " << b + i << " (" << describe(points[b + i]) << "): " << failures[i].substr(1);
                if (failures[i][0] == 'v') throw ValidationError(os.str());
                throw NumericalFailure("numerical failure at " + os.str());
            }
            for (const auto& r : results[i]) writer->write_row(r);
            manifest.points_done = b + i + 1;
            manifest.rows = writer->rows_written();
            save_manifest(manifest_path, manifest);
        }
    }

    RunSummary s{points.size(), manifest.points_done, manifest.rows, manifest.points_done == points.size()};
    log << task_name(spec.task) << ": " << s.points_done << "/" << s.points_total << " points, " << s.rows
        << " rows -> " << spec.out << '\n';
    return s;
}

int run_with_exit_code(const SweepSpec& spec, std::ostream& log, std::ostream& err) {
    try {
        run(spec, log);
        return 0;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const NumericalFailure& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: numerical failure: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace ppk::cli
