#include "ppk/sweep.hpp"

#include "ppk/log.hpp"
#include "ppk/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ppk {

std::vector<double> linspace(double start, double stop, std::size_t count) {
    if (count == 0) throw InvalidParameter("linspace: count must be >= 1");
    std::vector<double> v(count, start);
    if (count == 1) return v;
    const double h = (stop - start) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) v[i] = start + h * static_cast<double>(i);
    v.back() = stop;
    return v;
}

SteadyStateSolution solve_point(const ModelParams& params, const SweepOptions& opts) {
    if (opts.fixed_dim > 0) return solve_steady_state(params, opts.fixed_dim);
    return solve_steady_state_adaptive(params, opts.rule);
}

std::vector<OccupationPoint> occupation_sweep(const ModelParams& base, std::span<const double> deltas,
                                              const SweepOptions& opts) {
    std::vector<OccupationPoint> out(deltas.size());
    parallel_for(deltas.size(), opts.workers, [&](std::size_t i) {
        ModelParams p = base;
        p.delta = deltas[i];
        const auto ss = solve_point(p, opts);
        auto& o = out[i];
        o.params = p;
        o.dim = ss.dim;
        o.occupation = ss.mean_occupation();
        o.scaled = o.occupation * p.u / p.kappa;
        o.tail_population = ss.tail_population;
    });
    return out;
}

namespace {

DiffusionPoint evaluate(const SteadyStateSolution& ss, const MeasurementScheme& scheme) {
    const auto cs = CountingStatistics::for_model(ss, scheme);
    DiffusionPoint d;
    d.params = ss.params;
    d.scheme = scheme;
    d.dim = ss.dim;
    d.mean_current = cs.mean_current();
    d.diffusion = cs.diffusion();
    d.residual_norm = cs.diffusion_residual();
    return d;
}

}  // namespace

DiffusionPoint diffusion_point(const ModelParams& params, const MeasurementScheme& scheme,
                               const SweepOptions& opts) {
    return evaluate(solve_point(params, opts), scheme);
}

std::vector<DiffusionPoint> diffusion_sweep(const ModelParams& base, std::span<const double> deltas,
                                            const MeasurementScheme& scheme, const SweepOptions& opts) {
    std::vector<DiffusionPoint> out(deltas.size());
    parallel_for(deltas.size(), opts.workers, [&](std::size_t i) {
        ModelParams p = base;
        p.delta = deltas[i];
        out[i] = diffusion_point(p, scheme, opts);
    });
    return out;
}

DiffusionPeak max_diffusion(const ModelParams& base, const MeasurementScheme& scheme, const PeakSearch& search,
                            const SweepOptions& opts) {
    if (!(search.delta_max > search.delta_min) || !(search.step > 0.0))
        throw InvalidParameter("max_diffusion: empty detuning range");
    const auto count = static_cast<std::size_t>(std::llround((search.delta_max - search.delta_min) / search.step)) + 1;
    const auto grid = linspace(search.delta_min, search.delta_max, count);
    const auto coarse = diffusion_sweep(base, grid, scheme, opts);

    std::size_t best = 0;
    for (std::size_t i = 1; i < coarse.size(); ++i)
        if (coarse[i].diffusion > coarse[best].diffusion) best = i;

    DiffusionPeak peak{grid[best], coarse[best].diffusion, coarse[best].dim, false};
    if (best == 0 || best + 1 == coarse.size()) {
        peak.at_boundary = true;
        std::ostringstream os;
        os << "diffusion maximum at search boundary delta = " << grid[best] << " (g = " << base.g
           << ", u = " << base.u << ")";
        warn(os.str());
        return peak;
    }

    // Fixed truncation for the refinement so the objective is smooth in Δ.
    SweepOptions fixed = opts;
    fixed.fixed_dim = std::max({coarse[best - 1].dim, coarse[best].dim, coarse[best + 1].dim});
    auto log_d = [&](double delta) {
        ModelParams p = base;
        p.delta = delta;
        return std::log(std::max(diffusion_point(p, scheme, fixed).diffusion, 1e-300));
    };

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = grid[best - 1], b = grid[best + 1];
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = log_d(c), fd = log_d(d);
    while (b - a > search.tolerance) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = log_d(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = log_d(d);
        }
    }
    const double x = fc > fd ? c : d;
    const double fx = std::exp(std::max(fc, fd));
    if (fx > peak.diffusion) {
        peak.delta = x;
        peak.diffusion = fx;
        peak.dim = fixed.fixed_dim;
    }
    return peak;
}

std::vector<DiscontinuousPoint> locate_discontinuous_line(const ModelParams& base, std::span<const double> g_grid,
                                                          const PeakSearch& search, const SweepOptions& opts) {
    std::vector<DiscontinuousPoint> out;
    out.reserve(g_grid.size());
    for (double g : g_grid) {
        if (!(g > 0.5 * base.kappa)) {
            std::ostringstream os;
            os << "locate_discontinuous_line: g = " << g << " is not above kappa/2";
            throw InvalidParameter(os.str());
        }
        ModelParams p = base;
        p.g = g;
        const auto peak = max_diffusion(p, MeasurementScheme::photodetection(), search, opts);
        out.push_back({g, peak.delta, peak.diffusion, peak.at_boundary});
    }
    return out;
}

BifurcationEstimate steepest_growth_detuning(const ModelParams& base, double delta_min, double delta_max,
                                             double step, const SweepOptions& opts) {
    if (!(delta_max > delta_min) || !(step > 0.0)) throw InvalidParameter("steepest_growth_detuning: bad grid");
    const auto count = static_cast<std::size_t>(std::llround((delta_max - delta_min) / step)) + 1;
    if (count < 5) throw InvalidParameter("steepest_growth_detuning: need at least 5 grid points");
    BifurcationEstimate est;
    est.deltas = linspace(delta_min, delta_max, count);
    // One extra point on each side so derivatives exist at the interval ends.
    std::vector<double> padded(count + 2);
    const double h = (delta_max - delta_min) / static_cast<double>(count - 1);
    padded[0] = delta_min - h;
    std::copy(est.deltas.begin(), est.deltas.end(), padded.begin() + 1);
    padded.back() = delta_max + h;
    const auto occ = occupation_sweep(base, padded, opts);

    std::vector<double> y(occ.size());
    for (std::size_t i = 0; i < occ.size(); ++i) y[i] = occ[i].scaled;
    est.scaled_occupation.assign(y.begin() + 1, y.end() - 1);

    double best_slope = -1e300, best_curv = -1e300;
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        const double slope = (y[i + 1] - y[i - 1]) / (2.0 * h);
        const double curv = (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h);
        if (slope > best_slope) {
            best_slope = slope;
            est.steepest = padded[i];
        }
        if (curv > best_curv) {
            best_curv = curv;
            est.max_curvature = padded[i];
        }
    }
    return est;
}

ScalingResult diffusion_scaling(const ModelParams& base, std::span<const double> inverse_u,
                                const MeasurementScheme& scheme, const PeakSearch& search,
                                const SweepOptions& opts) {
    ScalingResult r;
    r.inverse_u.assign(inverse_u.begin(), inverse_u.end());
    std::vector<double> x, logx, logd;
    for (double ratio : inverse_u) {
        if (!(ratio > 0.0)) throw InvalidParameter("diffusion_scaling: kappa/U must be positive");
        ModelParams p = base;
        p.u = base.kappa / ratio;
        r.peaks.push_back(max_diffusion(p, scheme, search, opts));
        x.push_back(ratio);
        logx.push_back(std::log(ratio));
        logd.push_back(std::log(r.peaks.back().diffusion));
    }
    if (x.size() >= 2) {
        r.log_fit = fit_line(x, logd);
        r.loglog_fit = fit_line(logx, logd);
    }
    return r;
}

}  // namespace ppk
