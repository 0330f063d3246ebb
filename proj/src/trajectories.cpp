#include "ppk/trajectories.hpp"

#include "ppk/log.hpp"
#include "ppk/parallel.hpp"
#include "ppk/stats.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ppk {

void TrajectoryConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("TrajectoryConfig: dt must be > 0");
    if (!(t_final > dt)) throw InvalidParameter("TrajectoryConfig: t_final must exceed dt");
    if (record_stride < 1) throw InvalidParameter("TrajectoryConfig: record_stride must be >= 1");
    if (!(max_jump_probability > 0.0 && max_jump_probability < 1.0))
        throw InvalidParameter("TrajectoryConfig: max_jump_probability must lie in (0, 1)");
    if (check_interval < 1) throw InvalidParameter("TrajectoryConfig: check_interval must be >= 1");
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x9e3779b9u};
    return std::mt19937_64(seq);
}

namespace {

struct Generator {
    Index dim;
    double kappa;
    SparseXc a;
    MatrixXc heff;  // H - i κ/2 a†a
    std::vector<std::pair<double, MatrixXc>> steps;  // e^{-i Heff h} by step size

    Generator(const ModelParams& p, Index d) : dim(d), kappa(p.kappa), a(annihilation_sparse(d)) {
        const MatrixXc h = build_hamiltonian(p, d);
        const MatrixXc n = MatrixXc(SparseXc(SparseXc(a.adjoint()) * a));
        heff = h - cplx(0.0, 0.5 * p.kappa) * n;
    }

    const MatrixXc& propagator(double h) {
        for (const auto& [key, m] : steps)
            if (key == h) return m;
        steps.emplace_back(h, MatrixXc((cplx(0.0, -h) * heff).exp()));
        return steps.back().second;
    }
};

struct Moments {
    double n = 0.0;
    double n2 = 0.0;
    cplx a{};
};

Moments moments_of(const VectorXc& psi) {
    Moments m;
    const Index d = psi.size();
    for (Index k = 0; k < d; ++k) {
        const double pk = std::norm(psi[k]);
        const double kk = static_cast<double>(k);
        m.n += kk * pk;
        m.n2 += kk * kk * pk;
        if (k + 1 < d) m.a += std::conj(psi[k]) * std::sqrt(kk + 1.0) * psi[k + 1];
    }
    return m;
}

Moments moments_of(const MatrixXc& rho) {
    Moments m;
    const Index d = rho.rows();
    for (Index k = 0; k < d; ++k) {
        const double pk = rho(k, k).real();
        const double kk = static_cast<double>(k);
        m.n += kk * pk;
        m.n2 += kk * kk * pk;
        if (k + 1 < d) m.a += std::sqrt(kk + 1.0) * rho(k + 1, k);
    }
    return m;
}

// Pure-state and mixed-state conditional states behind one interface.
class KetState {
public:
    explicit KetState(VectorXc psi) : psi_(std::move(psi)) {}
    Moments moments() const { return moments_of(psi_); }
    void apply(const MatrixXc& m) {
        psi_ = m * psi_;
        normalize();
    }
    void apply_with_jump_term(const MatrixXc& m, const SparseXc& a, cplx weight) {
        VectorXc next = m * psi_;
        next.noalias() += weight * (a * psi_);
        psi_ = std::move(next);
        normalize();
    }
    void jump(const SparseXc& a) {
        psi_ = a * psi_;
        normalize();
    }
    void check(double) const {}
    MatrixXc matrix() const { return psi_ * psi_.adjoint(); }

private:
    void normalize() {
        const double nrm = psi_.norm();
        if (!(nrm > 0.0) || !std::isfinite(nrm)) throw StepSizeFailure("conditional state collapsed to zero norm", 0.0, 0.0);
        psi_ /= nrm;
    }
    VectorXc psi_;
};

class MixedState {
public:
    explicit MixedState(MatrixXc rho) : rho_(std::move(rho)) {}
    Moments moments() const { return moments_of(rho_); }
    void apply(const MatrixXc& m) {
        const MatrixXc k = m * rho_;
        rho_ = k * m.adjoint();
        normalize();
    }
    void apply_with_jump_term(const MatrixXc& m, const SparseXc& a, cplx weight) {
        MatrixXc full = m;
        full += weight * MatrixXc(a);
        const MatrixXc k = full * rho_;
        rho_ = k * full.adjoint();
        normalize();
    }
    void jump(const SparseXc& a) {
        const MatrixXc k = a * rho_;
        rho_ = (a * k.adjoint()).adjoint();
        normalize();
    }
    void check(double t) const {
        const double lo = DensityMatrix<double>::smallest_eigenvalue(rho_);
        if (lo < -1e-6) {
            std::ostringstream os;
            os << "conditional state lost positivity at t = " << t << " (min eigenvalue " << lo
               << "); reduce dt";
            throw StepSizeFailure(os.str(), t, lo);
        }
    }
    MatrixXc matrix() const { return rho_; }

private:
    void normalize() {
        rho_ = 0.5 * (rho_ + rho_.adjoint()).eval();
        const double tr = rho_.trace().real();
        if (!(tr > 0.0) || !std::isfinite(tr)) throw StepSizeFailure("conditional state has non-positive trace", 0.0, tr);
        rho_ /= tr;
    }
    MatrixXc rho_;
};

struct Recorder {
    TrajectoryRecord rec;
    double bin_sum = 0.0;
    Index in_bin = 0;
    Index stride;
    double bin_width;

    Recorder(const TrajectoryConfig& c, std::size_t steps)
        : stride(c.record_stride), bin_width(static_cast<double>(c.record_stride) * c.dt) {
        const std::size_t bins = steps / static_cast<std::size_t>(stride);
        rec.times.reserve(bins);
        rec.current.reserve(bins);
        rec.moments.occupation.reserve(bins);
        rec.moments.x.reserve(bins);
        rec.moments.p.reserve(bins);
        rec.moments.occupation_variance.reserve(bins);
        rec.seed = c.seed;
        rec.stream = c.stream;
        rec.bin_width = bin_width;
    }

    void add(double charge, double t_end, const Moments& m) {
        bin_sum += charge;
        if (++in_bin < stride) return;
        rec.times.push_back(t_end);
        rec.current.push_back(bin_sum / bin_width);
        rec.moments.occupation.push_back(m.n);
        rec.moments.x.push_back(2.0 * m.a.real());
        rec.moments.p.push_back(2.0 * m.a.imag());
        rec.moments.occupation_variance.push_back(std::max(0.0, m.n2 - m.n * m.n));
        bin_sum = 0.0;
        in_bin = 0;
    }
};

Index trajectory_dim(const ModelParams& params, const TrajectoryConfig& c) {
    if (c.initial_state) return c.initial_state->dim();
    if (c.dim > 0) return c.dim;
    return default_fock_dim(params);
}

std::size_t step_count(const TrajectoryConfig& c) {
    return static_cast<std::size_t>(std::llround(c.t_final / c.dt));
}

template <typename State>
void run_photodetection(State& state, Generator& gen, const TrajectoryConfig& c, Recorder& rec,
                        std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const std::size_t steps = step_count(c);
    double clicks = 0.0;
    Moments m = state.moments();

    // Advances by h, splitting the interval while the click probability is
    // above the guard.
    auto advance = [&](auto&& self, double t0, double h, int depth) -> void {
        const double p = gen.kappa * m.n * h;
        if (p > c.max_jump_probability && depth < 40) {
            self(self, t0, 0.5 * h, depth + 1);
            self(self, t0 + 0.5 * h, 0.5 * h, depth + 1);
            return;
        }
        if (uniform(rng) < p) {
            state.jump(gen.a);
            clicks += 1.0;
            rec.rec.jump_times.push_back(t0 + h);
        } else {
            state.apply(gen.propagator(h));
        }
        m = state.moments();
    };

    for (std::size_t k = 0; k < steps; ++k) {
        const double t0 = static_cast<double>(k) * c.dt;
        clicks = 0.0;
        advance(advance, t0, c.dt, 0);
        const double t1 = static_cast<double>(k + 1) * c.dt;
        if ((k + 1) % static_cast<std::size_t>(c.check_interval) == 0) state.check(t1);
        rec.add(clicks, t1, m);
    }
}

template <typename State>
void run_homodyne(State& state, Generator& gen, const TrajectoryConfig& c, Recorder& rec, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t steps = step_count(c);
    const double theta = *c.scheme.theta();
    const double sk = std::sqrt(gen.kappa);
    const cplx phase = std::polar(1.0, -theta);
    const double sdt = std::sqrt(c.dt);
    const MatrixXc& m_step = gen.propagator(c.dt);
    Moments m = state.moments();
    for (std::size_t k = 0; k < steps; ++k) {
        const double q = 2.0 * (m.a * phase).real();
        const double dy = sk * q * c.dt + sdt * normal(rng);
        state.apply_with_jump_term(m_step, gen.a, sk * phase * dy);
        m = state.moments();
        const double t1 = static_cast<double>(k + 1) * c.dt;
        if ((k + 1) % static_cast<std::size_t>(c.check_interval) == 0) state.check(t1);
        rec.add(dy, t1, m);
    }
}

template <typename Runner>
TrajectoryRecord simulate_with(const ModelParams& params, const TrajectoryConfig& c, Runner&& runner) {
    params.validate();
    c.validate();
    const Index dim = trajectory_dim(params, c);
    const DensityMatrix<double> rho0 = c.initial_state ? *c.initial_state : DensityMatrix<double>::fock(dim, 0);
    Generator gen(params, dim);
    auto rng = make_stream(c.seed, c.stream);
    Recorder rec(c, step_count(c));
    if (rho0.is_pure(1e-12)) {
        KetState s(rho0.dominant_state().amplitudes());
        runner(s, gen, c, rec, rng);
        if (c.keep_final_state) rec.rec.final_state = s.matrix();
    } else {
        MixedState s(rho0.matrix());
        runner(s, gen, c, rec, rng);
        if (c.keep_final_state) rec.rec.final_state = s.matrix();
    }
    return std::move(rec.rec);
}

}  // namespace

TrajectoryRecord simulate_photodetection(const ModelParams& params, const TrajectoryConfig& config) {
    if (config.scheme.is_homodyne()) throw InvalidParameter("simulate_photodetection: scheme is homodyne");
    return simulate_with(params, config, [](auto& s, Generator& g, const TrajectoryConfig& c, Recorder& r,
                                            std::mt19937_64& rng) { run_photodetection(s, g, c, r, rng); });
}

TrajectoryRecord simulate_homodyne(const ModelParams& params, const TrajectoryConfig& config) {
    if (!config.scheme.is_homodyne()) throw InvalidParameter("simulate_homodyne: scheme is photodetection");
    return simulate_with(params, config, [](auto& s, Generator& g, const TrajectoryConfig& c, Recorder& r,
                                            std::mt19937_64& rng) { run_homodyne(s, g, c, r, rng); });
}

TrajectoryRecord simulate(const ModelParams& params, const TrajectoryConfig& config) {
    return config.scheme.is_homodyne() ? simulate_homodyne(params, config) : simulate_photodetection(params, config);
}

std::vector<TrajectoryRecord> run_ensemble(const ModelParams& params, const TrajectoryConfig& config,
                                           std::size_t n_traj, unsigned workers) {
    std::vector<TrajectoryRecord> out(n_traj);
    parallel_for(n_traj, workers, [&](std::size_t i) {
        TrajectoryConfig c = config;
        c.stream = i;
        out[i] = simulate(params, c);
    });
    return out;
}

// ------------------------------ post-processing -----------------------------

std::vector<double> low_pass_filter(std::span<const double> samples, double dt, double tau_f) {
    if (!(tau_f > dt)) {
        std::ostringstream os;
        os << "low_pass_filter: tau_f (" << tau_f << ") must exceed the sample spacing (" << dt << ")";
        throw InvalidParameter(os.str());
    }
    std::vector<double> y(samples.size());
    if (samples.empty()) return y;
    const double w = dt / tau_f;
    y[0] = samples[0];
    for (std::size_t k = 0; k + 1 < samples.size(); ++k) y[k + 1] = y[k] + w * (samples[k] - y[k]);
    return y;
}

std::vector<double> low_pass_filter(const TrajectoryRecord& record, double tau_f) {
    return low_pass_filter(record.current, record.bin_width, tau_f);
}

std::vector<int> classify_plateaus(std::span<const double> filtered, double threshold) {
    if (!(threshold > 0.0)) throw InvalidParameter("classify_plateaus: threshold must be positive");
    std::vector<int> labels(filtered.size());
    for (std::size_t i = 0; i < filtered.size(); ++i)
        labels[i] = filtered[i] > threshold ? 1 : (filtered[i] < -threshold ? -1 : 0);
    return labels;
}

std::array<double, 3> dwell_fractions(std::span<const int> labels) {
    std::array<double, 3> f{0.0, 0.0, 0.0};
    if (labels.empty()) return f;
    for (int l : labels) f[static_cast<std::size_t>(l + 1)] += 1.0;
    for (double& v : f) v /= static_cast<double>(labels.size());
    return f;
}

double plateau_threshold(const ModelParams& params) {
    const auto fp = semiclassical_fixed_points(params);
    if (!fp.bistable) throw DomainError("plateau_threshold: parameters are not in the bistable region");
    return 0.5 * std::sqrt(params.kappa) * std::sqrt(fp.n0);
}

DiffusionEstimate estimate_diffusion(std::span<const TrajectoryRecord> records, double burn_in, double window,
                                     const EstimateOptions& opts) {
    if (records.size() < opts.min_records) {
        std::ostringstream os;
        os << "estimate_diffusion: " << records.size() << " records, need at least " << opts.min_records;
        throw InvalidParameter(os.str());
    }
    if (!(window >= opts.min_window)) {
        std::ostringstream os;
        os << "estimate_diffusion: window " << window << " is shorter than " << opts.min_window;
        throw InvalidParameter(os.str());
    }
    if (burn_in < 0.0) throw InvalidParameter("estimate_diffusion: burn_in must be >= 0");
    if (opts.checkpoints < 20) throw InvalidParameter("estimate_diffusion: need at least 20 checkpoints");

    const double bin = records.front().bin_width;
    const auto& times = records.front().times;
    for (const auto& r : records)
        if (r.bin_width != bin || r.times.size() != times.size())
            throw DimensionMismatch("estimate_diffusion: records have different sampling");
    if (times.empty() || times.back() < burn_in + window - 0.5 * bin)
        throw InvalidParameter("estimate_diffusion: records are shorter than burn_in + window");

    // First bin that starts at or after burn_in, and the bin count spanning the window.
    const auto first = static_cast<std::size_t>(std::ceil(burn_in / bin - 1e-9));
    const auto span_bins = static_cast<std::size_t>(std::llround(window / bin));
    const auto lead = static_cast<std::size_t>(std::ceil(opts.first_checkpoint * static_cast<double>(span_bins)));
    if (span_bins <= lead + opts.checkpoints) throw InvalidParameter("estimate_diffusion: window too coarse");

    std::vector<std::size_t> marks(opts.checkpoints);  // bins integrated up to each checkpoint
    for (std::size_t j = 0; j < opts.checkpoints; ++j)
        marks[j] = lead + (span_bins - lead) * j / (opts.checkpoints - 1);
    std::vector<double> t(opts.checkpoints);
    for (std::size_t j = 0; j < opts.checkpoints; ++j) t[j] = static_cast<double>(marks[j]) * bin;

    const std::size_t n = records.size();
    std::vector<std::vector<double>> charge(n, std::vector<double>(opts.checkpoints));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& cur = records[i].current;
        double q = 0.0;
        std::size_t done = 0;
        for (std::size_t j = 0; j < opts.checkpoints; ++j) {
            for (; done < marks[j]; ++done) q += cur[first + done] * bin;
            charge[i][j] = q;
        }
    }

    auto slope_for = [&](const std::vector<std::size_t>& pick) {
        std::vector<double> var(opts.checkpoints);
        std::vector<double> col(pick.size());
        for (std::size_t j = 0; j < opts.checkpoints; ++j) {
            for (std::size_t k = 0; k < pick.size(); ++k) col[k] = charge[pick[k]][j];
            var[j] = variance(col);
        }
        return fit_line(t, var);
    };

    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    const LinearFit fit = slope_for(all);

    std::mt19937_64 rng = make_stream(opts.bootstrap_seed, 0xb00751u);
    std::uniform_int_distribution<std::size_t> pick_index(0, n - 1);
    std::vector<double> slopes(opts.bootstrap_samples);
    std::vector<std::size_t> pick(n);
    for (auto& s : slopes) {
        for (auto& k : pick) k = pick_index(rng);
        s = slope_for(pick).slope;
    }

    DiffusionEstimate est;
    est.d_hat = fit.slope;
    est.std_error = std::sqrt(variance(slopes));
    est.n_trajectories = n;
    est.burn_in = burn_in;
    est.window = window;
    est.r_squared = fit.r_squared;
    if (fit.r_squared < 0.9) {
        std::ostringstream os;
        os << "estimate_diffusion: Var[Q(t)] is not linear in t (R^2 = " << fit.r_squared
           << "); metastable dynamics may be unconverged over the window";
        warn(os.str());
    }
    return est;
}

}  // namespace ppk
