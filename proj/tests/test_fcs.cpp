#include "ppk/fcs.hpp"
#include "ppk/sweep.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace ppk;

namespace {

const ModelParams kDesk{0.0, 1.0, 1.0, 1.0};

CountingStatistics random_channel(const oracle::RandomLindblad& r, bool homodyne, double theta,
                                  std::shared_ptr<const LiouvillianSolver> solver) {
    const SparseXc c = r.jumps[0].first.sparseView();
    const double rate = r.jumps[0].second;
    SuperOperator m = homodyne ? homodyne_superop(rate, c, theta) : jump_superop(rate, c);
    const double w = homodyne ? 1.0 : mean_current(m, solver->steady_state());
    return CountingStatistics(std::move(solver), std::move(m), w);
}

}  // namespace

TEST_SUITE("fcs") {

TEST_CASE("measurement superoperators") {
    const Index d = 6;
    const SparseXc a = annihilation_sparse(d);
    std::mt19937_64 rng(21);

    SUBCASE("jump term removes one photon") {
        const MatrixXc out = devectorize(jump_superop(0.7, annihilation_sparse(2)) *
                                         vectorize(DensityMatrix<double>::fock(2, 1)));
        CHECK(std::abs(out(0, 0) - cplx(0.7)) < 1e-15);
        CHECK(out.cwiseAbs().sum() == doctest::Approx(0.7));
    }
    SUBCASE("traces give the mean currents") {
        const auto j = jump_superop(0.8, a);
        for (int k = 0; k < 5; ++k) {
            const auto rho = DensityMatrix<double>::from_unnormalized(oracle::random_density(d, rng));
            CHECK(mean_current(j, rho) == doctest::Approx(0.8 * expectation(number(d), rho).real()).epsilon(1e-12));
            for (double theta : {0.0, 0.4, std::numbers::pi / 2}) {
                const auto h = homodyne_superop(0.8, a, theta);
                const double q = expectation(quadrature(d, theta), rho).real();
                CHECK(mean_current(h, rho) == doctest::Approx(std::sqrt(0.8) * q).epsilon(1e-12));
                CHECK(std::abs(vec_trace(h * vectorize(rho), d).imag()) < 1e-12);
            }
        }
    }
    SUBCASE("odd moments vanish on parity-even states") {
        const auto h = homodyne_superop(1.0, a, std::numbers::pi / 2);
        CHECK(std::abs(vec_trace(h * vectorize(DensityMatrix<double>::fock(d, 0)), d)) < 1e-15);
        const auto ss = solve_steady_state({1.0, 1.0, 0.5, 1.0}, 20);
        CHECK(std::abs(vec_trace(homodyne_superop(1.0, annihilation_sparse(20), 0.3) * vectorize(ss.rho()), 20)) < 1e-8);
    }
    SUBCASE("the jump term splits off the PPK generator exactly") {
        const ModelParams p{1.5, 1.0, 0.5, 0.9};
        const Index n = 12;
        const SparseXc an = annihilation_sparse(n);
        const SparseXc h = build_hamiltonian_sparse(p, n);
        const SparseXc decay = (cplx(0, -1) * h - cplx(0.5 * p.kappa) * SparseXc(an.adjoint() * an)).eval();
        const SparseXc free = spre(decay) + spost(SparseXc(decay.adjoint()));
        const SparseXc total = free + jump_superop(p.kappa, an).matrix;
        CHECK(MatrixXc(total - ppk_liouvillian(p, n).matrix).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("shot-noise limits of the undriven cavity") {
    const auto ss = solve_steady_state({0.5, 0.0, 1.0, 1.0}, 10);
    const auto pd = CountingStatistics::for_model(ss, MeasurementScheme::photodetection());
    const auto hom = CountingStatistics::for_model(ss, MeasurementScheme::homodyne());
    CHECK(std::abs(pd.mean_current()) < 1e-12);
    CHECK(std::abs(pd.diffusion()) < 1e-8);
    CHECK(hom.diffusion() == doctest::Approx(1.0).epsilon(1e-10));
    const std::vector<double> w{0.0, 0.5, 3.0, 10.0};
    for (double s : pd.spectrum(w).values) CHECK(std::abs(s) < 1e-8);
    for (double s : hom.spectrum(w).values) CHECK(std::abs(s - 1.0) < 1e-8);
    const std::vector<double> taus{0.0, 1.0, 2.0};
    for (double f : hom.correlation(taus).values) CHECK(std::abs(f) < 1e-12);
}

TEST_CASE("PPK steady-state currents") {
    const auto ss = solve_steady_state_adaptive(kDesk);
    const auto pd = CountingStatistics::for_model(ss, MeasurementScheme::photodetection());
    CHECK(pd.mean_current() == doctest::Approx(ss.mean_occupation()).epsilon(1e-10));
    for (double theta : {0.0, 0.7, std::numbers::pi / 2}) {
        const auto hom = CountingStatistics::for_model(ss, MeasurementScheme::homodyne(theta));
        CHECK(std::abs(hom.mean_current()) < 1e-8);
        CHECK(hom.singular_weight() == 1.0);
        CHECK(hom.diffusion() >= 0.0);
    }
    CHECK(pd.singular_weight() == pd.mean_current());
    CHECK(pd.diffusion() >= 0.0);
    CHECK(pd.diffusion_residual() < 1e-8);
}

TEST_CASE("spectrum is even and continuous at zero") {
    const auto ss = solve_steady_state({1.0, 1.0, 1.0 / 3.0, 1.0}, 30);
    for (auto scheme : {MeasurementScheme::photodetection(), MeasurementScheme::homodyne()}) {
        const auto fcs = CountingStatistics::for_model(ss, scheme);
        const std::vector<double> w{-2.5, -0.3, 0.0, 0.3, 2.5};
        const auto s = fcs.spectrum(w, 2);
        CHECK(s.max_imag_residual < 1e-8);
        CHECK(std::abs(s.values[0] - s.values[4]) < 1e-8);
        CHECK(std::abs(s.values[1] - s.values[3]) < 1e-8);
        CHECK(s.values[2] == s.diffusion);
        CHECK(fcs.spectrum_at(1e-4) == doctest::Approx(s.diffusion).epsilon(1e-3));
    }
}

TEST_CASE("spectra match the eigen-sum oracle on random generators") {
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    for (int trial = 0; trial < 8; ++trial) {
        const Index d = 2 + trial % 7;
        const auto r = oracle::random_lindblad(d, rng);
        const auto solver = std::make_shared<const LiouvillianSolver>(
            liouvillian(r.h, std::span<const std::pair<MatrixXc, double>>(r.jumps)));
        const auto es = oracle::eigensystem(r.l);
        const VectorXc rho = oracle::vec(oracle::kernel_state(es, d));
        const bool hom = trial % 2 == 1;
        const double theta = angle(rng);
        const auto fcs = random_channel(r, hom, theta, solver);
        const MatrixXc m = fcs.measurement().matrix;
        for (double w : {0.0, 0.4, 3.0}) {
            const double expected = oracle::eigen_sum_spectrum(es, m, rho, fcs.singular_weight(), w, d);
            CHECK(fcs.spectrum_at(w) == doctest::Approx(expected).epsilon(1e-6));
        }
    }
}

TEST_CASE("correlation function") {
    const auto ss = solve_steady_state(kDesk, 25);
    const auto pd = CountingStatistics::for_model(ss, MeasurementScheme::photodetection());
    const Index d = 25;
    const MatrixXc a = annihilation(d);
    const double kappa = kDesk.kappa;

    SUBCASE("equal-time value is the normally ordered second moment") {
        const std::vector<double> taus{0.0};
        const auto f = pd.correlation(taus);
        const MatrixXc a2 = a * a;
        const double g2 = expectation(MatrixXc(a2.adjoint() * a2), ss.rho()).real();
        const double j = pd.mean_current();
        CHECK(f.values[0] == doctest::Approx(kappa * kappa * g2 - j * j).epsilon(1e-9));
        CHECK(f.singular_weight == j);
    }
    SUBCASE("integral plus singular weight reproduces the diffusion coefficient") {
        for (auto scheme : {MeasurementScheme::photodetection(), MeasurementScheme::homodyne()}) {
            const auto fcs = CountingStatistics::for_model(ss, scheme);
            const double h = 0.02;
            const auto taus = linspace(0.0, 200.0, 10001);
            const auto f = fcs.correlation(taus);
            CHECK(f.decayed);
            CHECK(f.max_imag_residual < 1e-8);
            const double integral = 2.0 * oracle::simpson(f.values, h) + f.singular_weight;
            CHECK(integral == doctest::Approx(fcs.diffusion()).epsilon(0.01));
        }
    }
    SUBCASE("grid errors") {
        const std::vector<double> bad{1.0, 0.5};
        CHECK_THROWS_AS(pd.correlation(bad), InvalidParameter);
        const std::vector<double> negative{-1.0, 0.5};
        CHECK_THROWS_AS(pd.correlation(negative), InvalidParameter);
    }
}

TEST_CASE("clicks come in pairs deep in the inactive phase") {
    // The two-photon pump populates the near-vacuum state with photon pairs,
    // so each emission event carries two counts.
    const auto ss = solve_steady_state_adaptive({6.0, 1.0, 0.1, 1.0});
    const auto pd = CountingStatistics::for_model(ss, MeasurementScheme::photodetection());
    const double fano = pd.diffusion() / pd.mean_current();
    MESSAGE("Fano factor at delta = 6: " << fano);
    CHECK(fano == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("diffusion peak is invariant under a common rescaling of the rates") {
    const ModelParams base{0.0, 1.0, 1.0, 1.0};
    const double s = 2.5;
    const PeakSearch search{0.0, 3.0, 0.1, 1e-4};
    const PeakSearch scaled_search{0.0, 3.0 * s, 0.1 * s, 1e-4 * s};
    const auto p1 = max_diffusion(base, MeasurementScheme::photodetection(), search);
    const auto p2 = max_diffusion(base.scaled(s), MeasurementScheme::photodetection(), scaled_search);
    CHECK(p2.delta / s == doctest::Approx(p1.delta).epsilon(1e-3));
    // D carries units of a rate.
    CHECK(p2.diffusion / s == doctest::Approx(p1.diffusion).epsilon(1e-6));
    CHECK_FALSE(p1.at_boundary);
}

TEST_CASE("discontinuous line rejects pumps below threshold") {
    const std::vector<double> g{0.4};
    CHECK_THROWS_AS(locate_discontinuous_line({0.0, 1.0, 1.0, 1.0}, g), InvalidParameter);
}

}
