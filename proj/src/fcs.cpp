#include "ppk/fcs.hpp"

#include "ppk/log.hpp"
#include "ppk/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ppk {

SuperOperator jump_superop(double kappa, const SparseXc& a) {
    if (a.rows() != a.cols()) throw DimensionMismatch("jump_superop: operator must be square");
    return {a.rows(), SparseXc(kappa * sprepost(a, SparseXc(a.adjoint())))};
}

SuperOperator homodyne_superop(double kappa, const SparseXc& a, double theta) {
    if (a.rows() != a.cols()) throw DimensionMismatch("homodyne_superop: operator must be square");
    const cplx left = std::sqrt(kappa) * std::polar(1.0, -theta);
    const cplx right = std::sqrt(kappa) * std::polar(1.0, theta);
    SparseXc m = left * spre(a) + right * spost(SparseXc(a.adjoint()));
    m.makeCompressed();
    return {a.rows(), std::move(m)};
}

SuperOperator measurement_superop(const MeasurementScheme& scheme, double kappa, const SparseXc& a) {
    if (scheme.is_homodyne()) return homodyne_superop(kappa, a, *scheme.theta());
    return jump_superop(kappa, a);
}

double mean_current(const SuperOperator& measurement, const DensityMatrix<double>& rho) {
    if (rho.dim() != measurement.dim) throw DimensionMismatch("mean_current: dimension mismatch");
    return vec_trace(measurement * vectorize(rho), rho.dim()).real();
}

// ----------------------------- CountingStatistics ---------------------------

CountingStatistics::CountingStatistics(std::shared_ptr<const LiouvillianSolver> solver, SuperOperator measurement,
                                       double singular_weight)
    : solver_(std::move(solver)), measurement_(std::move(measurement)), singular_weight_(singular_weight) {
    if (!solver_) throw InvalidParameter("CountingStatistics: null solver");
    if (measurement_.dim != solver_->generator().dim)
        throw DimensionMismatch("CountingStatistics: measurement and Liouvillian dimensions differ");
    identity_ = vectorized_identity(measurement_.dim);
    seed_ = measurement_ * solver_->steady_state_vector();
    mean_current_ = identity_.dot(seed_).real();
}

CountingStatistics CountingStatistics::for_model(const SteadyStateSolution& ss, const MeasurementScheme& scheme) {
    auto m = measurement_superop(scheme, ss.params.kappa, annihilation_sparse(ss.dim));
    CountingStatistics cs(ss.solver, std::move(m), 0.0);
    cs.singular_weight_ = scheme.is_homodyne() ? 1.0 : cs.mean_current_;
    return cs;
}

double CountingStatistics::quadratic_form(const VectorXc& x) const {
    return identity_.dot(measurement_ * x).real();
}

double CountingStatistics::diffusion() const {
    const VectorXc x = solver_->drazin_apply(seed_);
    const double d = -2.0 * quadratic_form(x) + singular_weight_;
    if (d < 0.0) {
        if (d >= -1e-8) {
            std::ostringstream os;
            os << "diffusion coefficient " << d << " slightly negative; clamped to 0";
            warn(os.str());
            return 0.0;
        }
        std::ostringstream os;
        os << "diffusion coefficient is negative (" << d << "): Drazin solve is unreliable";
        throw SolverFailure(os.str(), solver_->drazin_residual(x, seed_));
    }
    return d;
}

double CountingStatistics::diffusion_residual() const {
    const VectorXc x = solver_->drazin_apply(seed_);
    return solver_->drazin_residual(x, seed_);
}

double CountingStatistics::spectrum_at(double omega) const {
    if (omega == 0.0) return diffusion();
    const Resolvent res(solver_->generator(), omega);
    const VectorXc x = res.apply(seed_);
    const cplx v = -2.0 * identity_.dot(measurement_ * x) + singular_weight_;
    if (std::abs(v.imag()) > 1e-8 * std::max(1.0, std::abs(v.real()))) {
        std::ostringstream os;
        os << "spectrum at omega = " << omega << " has imaginary residual " << v.imag();
        warn(os.str());
    }
    return v.real();
}

SpectrumResult CountingStatistics::spectrum(std::span<const double> omegas, unsigned workers) const {
    SpectrumResult r;
    r.omegas.assign(omegas.begin(), omegas.end());
    r.values.assign(omegas.size(), 0.0);
    std::vector<double> imag(omegas.size(), 0.0);
    parallel_for(omegas.size(), workers, [&](std::size_t i) {
        const double w = omegas[i];
        if (w == 0.0) {
            r.values[i] = diffusion();
            return;
        }
        const Resolvent res(solver_->generator(), w);
        const VectorXc x = res.apply(seed_);
        const cplx v = -2.0 * identity_.dot(measurement_ * x) + singular_weight_;
        r.values[i] = v.real();
        imag[i] = std::abs(v.imag()) / std::max(1.0, std::abs(v.real()));
    });
    r.max_imag_residual = imag.empty() ? 0.0 : *std::max_element(imag.begin(), imag.end());
    if (r.max_imag_residual > 1e-8) {
        std::ostringstream os;
        os << "spectrum: relative imaginary residual " << r.max_imag_residual << " exceeds 1e-8";
        warn(os.str());
    }
    r.diffusion = diffusion();
    r.mean_current = mean_current_;
    return r;
}

CorrelationResult CountingStatistics::correlation(std::span<const double> taus) const {
    CorrelationResult r;
    r.taus.assign(taus.begin(), taus.end());
    r.singular_weight = singular_weight_;
    r.values.reserve(taus.size());
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (taus[i] < 0.0 || (i > 0 && taus[i] < taus[i - 1]))
            throw InvalidParameter("correlation: taus must be non-negative and ascending");
    }
    // The stationary component J|ρ> is removed before propagation, so F is
    // read off directly instead of as a difference of two O(J²) numbers.
    VectorXc w = seed_ - mean_current_ * solver_->steady_state_vector();
    double t = 0.0;
    double peak = 0.0;
    for (double tau : taus) {
        w = propagate(solver_->generator(), w, tau - t);
        t = tau;
        const cplx v = identity_.dot(measurement_ * w);
        r.values.push_back(v.real());
        r.max_imag_residual = std::max(r.max_imag_residual, std::abs(v.imag()));
        peak = std::max(peak, std::abs(v.real()));
    }
    r.decayed = !r.values.empty() && std::abs(r.values.back()) < 1e-6 * peak;
    return r;
}

double diffusion(const SteadyStateSolution& ss, const MeasurementScheme& scheme) {
    return CountingStatistics::for_model(ss, scheme).diffusion();
}

SpectrumResult spectrum(const SteadyStateSolution& ss, const MeasurementScheme& scheme,
                        std::span<const double> omegas, unsigned workers) {
    return CountingStatistics::for_model(ss, scheme).spectrum(omegas, workers);
}

CorrelationResult correlation(const SteadyStateSolution& ss, const MeasurementScheme& scheme,
                              std::span<const double> taus) {
    return CountingStatistics::for_model(ss, scheme).correlation(taus);
}

}  // namespace ppk
