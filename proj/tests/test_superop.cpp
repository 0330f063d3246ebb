#include "ppk/system.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace ppk;

namespace {

SuperOperator two_level_decay(double kappa) {
    const MatrixXc a = annihilation(2);
    const std::pair<MatrixXc, double> jump{a, kappa};
    return liouvillian(MatrixXc(MatrixXc::Zero(2, 2)), std::span(&jump, 1));
}

SuperOperator from_random(const oracle::RandomLindblad& r) {
    return liouvillian(r.h, std::span<const std::pair<MatrixXc, double>>(r.jumps));
}

const ModelParams kTestPoint{1.0, 1.0, 1.0 / 3.0, 1.0};

}  // namespace

TEST_SUITE("superop") {

TEST_CASE("column-stacking convention") {
    const VectorXc v = vectorize(MatrixXc(MatrixXc::Identity(2, 2)));
    CHECK(v(0) == cplx(1.0));
    CHECK(v(1) == cplx(0.0));
    CHECK(v(2) == cplx(0.0));
    CHECK(v(3) == cplx(1.0));
    MatrixXc m(2, 2);
    m << 1.0, 2.0, 3.0, 4.0;
    CHECK(vectorize(m)(1) == cplx(3.0));  // (row 1, col 0)

    std::mt19937_64 rng(5);
    const MatrixXc rho = oracle::random_density(5, rng);
    CHECK(devectorize(vectorize(rho)) == rho);
    CHECK(std::abs(vec_trace(vectorize(rho), 5) - rho.trace()) < 1e-15);
    CHECK(std::abs(vectorized_identity(5).dot(vectorize(rho)) - rho.trace()) < 1e-15);
    CHECK_THROWS_AS(devectorize(VectorXc::Zero(5)), InvalidDimension);
}

TEST_CASE("Kronecker builders act as left, right and sandwich products") {
    std::mt19937_64 rng(6);
    const MatrixXc a = oracle::random_matrix(4, rng), b = oracle::random_matrix(4, rng), x = oracle::random_matrix(4, rng);
    const SparseXc as = a.sparseView(), bs = b.sparseView();
    CHECK((devectorize(spre(as) * vectorize(x)) - a * x).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((devectorize(spost(bs) * vectorize(x)) - x * b).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((devectorize(sprepost(as, bs) * vectorize(x)) - a * x * b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two-level decay golden values") {
    const auto L = two_level_decay(0.7);
    const VectorXc out = L * vectorize(DensityMatrix<double>::fock(2, 1));
    const MatrixXc m = devectorize(out);
    CHECK(std::abs(m(0, 0) - cplx(0.7)) < 1e-15);
    CHECK(std::abs(m(1, 1) - cplx(-0.7)) < 1e-15);
    CHECK(std::abs(m(0, 1)) < 1e-15);

    const auto sd = spectral_decomposition(L);
    std::vector<double> ev;
    for (Index j = 0; j < 4; ++j) {
        CHECK(std::abs(sd.eigenvalues(j).imag()) < 1e-12);
        ev.push_back(sd.eigenvalues(j).real());
    }
    std::sort(ev.begin(), ev.end());
    CHECK(ev[0] == doctest::Approx(-0.7));
    CHECK(ev[1] == doctest::Approx(-0.35));
    CHECK(ev[2] == doctest::Approx(-0.35));
    CHECK(std::abs(ev[3]) < 1e-12);
}

TEST_CASE("liouvillian matches the term-by-term oracle and preserves trace") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const auto r = oracle::random_lindblad(2 + trial % 6, rng, 1 + trial % 3);
        const auto L = from_random(r);
        CHECK((MatrixXc(L.matrix) - r.l).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(trace_preservation_residual(L) < 1e-10);
    }
    CHECK(trace_preservation_residual(ppk_liouvillian(kTestPoint, 30)) < 1e-10);
}

TEST_CASE("liouvillian input errors") {
    const MatrixXc h = MatrixXc::Zero(3, 3);
    const std::pair<MatrixXc, double> wrong{MatrixXc::Zero(4, 4), 1.0};
    CHECK_THROWS_AS(liouvillian(h, std::span(&wrong, 1)), DimensionMismatch);
    const std::pair<MatrixXc, double> negative{MatrixXc::Zero(3, 3), -0.1};
    CHECK_THROWS_AS(liouvillian(h, std::span(&negative, 1)), InvalidParameter);
}

TEST_CASE("PPK steady state") {
    SUBCASE("undriven cavity relaxes to vacuum") {
        for (double delta : {-1.0, 0.0, 2.5}) {
            const auto ss = solve_steady_state({delta, 0.0, 0.5, 1.0}, 12);
            CHECK(std::abs(ss.rho().matrix()(0, 0) - cplx(1.0)) < 1e-12);
        }
    }
    SUBCASE("invariants, residual and parity") {
        const auto ss = solve_steady_state(kTestPoint, 30);
        CHECK(ss.solver->steady_state_residual() < 1e-10);
        CHECK(ss.rho().min_eigenvalue() > -1e-8);
        CHECK(std::abs(expectation(annihilation(30), ss.rho())) < 1e-8);
    }
    SUBCASE("agrees with independent time evolution") {
        // Dense exponential of the oracle generator applied to vacuum out to t = 400.
        const Index d = 30;
        const auto L = ppk_liouvillian(kTestPoint, d);
        const MatrixXc h = build_hamiltonian(kTestPoint, d);
        const std::vector<std::pair<MatrixXc, double>> jumps{{annihilation(d), 1.0}};
        const MatrixXc lo = oracle::dense_liouvillian(h, jumps);
        VectorXc v = oracle::vec(DensityMatrix<double>::fock(d, 0).matrix());
        const MatrixXc step = oracle::expm(MatrixXc(10.0 * lo));
        for (int k = 0; k < 40; ++k) v = step * v;
        const double n_evolved = expectation(number(d), DensityMatrix<double>::from_unnormalized(oracle::unvec(v, d))).real();
        const double n_ss = expectation(number(d), steady_state(L)).real();
        CHECK(n_ss == doctest::Approx(n_evolved).epsilon(1e-6));
        CHECK(n_ss * kTestPoint.u > 0.5);  // active branch at this detuning
    }
}

TEST_CASE("adaptive truncation") {
    const auto ss = solve_steady_state_adaptive({2.0, 1.0, 1.0 / 3.0, 1.0});
    CHECK(ss.tail_population < 1e-8);
    CHECK(ss.dim == truncation_for_occupation(semiclassical_fixed_points({2.0, 1.0, 1.0 / 3.0, 1.0}).n0));
    TruncationRule tiny;
    tiny.floor_levels = 3;
    tiny.cap_levels = 6;
    tiny.max_retries = 1;
    CHECK_THROWS_AS(solve_steady_state_adaptive({2.0, 1.0, 1.0 / 3.0, 1.0}, tiny, 4), TruncationTooSmall);
}

TEST_CASE("degenerate generator is reported") {
    // Pure Hamiltonian dynamics: every diagonal state is stationary.
    const MatrixXc h = number(3);
    const SuperOperator L = liouvillian(h, std::span<const std::pair<MatrixXc, double>>{});
    CHECK_THROWS_AS(LiouvillianSolver{L}, DegenerateSteadyState);
    CHECK_THROWS_AS(spectral_decomposition(L), DegenerateSteadyState);
}

TEST_CASE("Drazin inverse") {
    const auto ss = solve_steady_state(kTestPoint, 30);
    const auto& solver = *ss.solver;
    const auto& L = solver.generator();
    const VectorXc one = vectorized_identity(30);
    const VectorXc rho = solver.steady_state_vector();
    std::mt19937_64 rng(8);

    CHECK(solver.drazin_apply(rho).cwiseAbs().maxCoeff() < 1e-10);
    for (int k = 0; k < 5; ++k) {
        const VectorXc y = oracle::random_vector(L.dim2(), rng);
        const VectorXc proj = y - rho * one.dot(y);
        const VectorXc x = solver.drazin_apply(y);
        CHECK(std::abs(one.dot(x)) < 1e-10);
        CHECK((L * x - proj).cwiseAbs().maxCoeff() < 1e-8);
        // L⁺ L y
        const VectorXc back = solver.drazin_apply(L * y);
        CHECK((back - proj).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(solver.drazin_residual(x, y) < 1e-8);
    }
    const VectorXc y = oracle::random_vector(L.dim2(), rng);
    CHECK((drazin_apply(L, ss.rho(), y) - solver.drazin_apply(y)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("Drazin and resolvent agree with the eigen-sum oracle") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 6; ++trial) {
        const Index d = 2 + trial;
        const auto r = oracle::random_lindblad(d, rng);
        const auto es = oracle::eigensystem(r.l);
        const LiouvillianSolver solver(from_random(r));
        const VectorXc y = oracle::random_vector(d * d, rng);
        CHECK((solver.drazin_apply(y) - oracle::eigen_drazin(es, y)).cwiseAbs().maxCoeff() < 1e-6);
        const auto sd = spectral_decomposition(solver.generator());
        CHECK(sd.biorthogonality_residual < 1e-8);
        CHECK((sd.drazin_apply(y) - solver.drazin_apply(y)).cwiseAbs().maxCoeff() < 1e-6);
        for (double w : {0.3, 2.0, 17.0}) {
            const VectorXc x = resolvent_apply(solver.generator(), w, y);
            CHECK((x - sd.resolvent_apply(w, y)).cwiseAbs().maxCoeff() < 1e-6);
        }
    }
}

TEST_CASE("resolvent limits") {
    const auto ss = solve_steady_state(kTestPoint, 20);
    const auto& L = ss.solver->generator();
    std::mt19937_64 rng(10);
    const VectorXc y = oracle::random_vector(L.dim2(), rng);
    CHECK(resolvent_apply(L, 1e6, y).norm() < 1e-5 * y.norm());
    const VectorXc proj = y - ss.solver->steady_state_vector() * vectorized_identity(20).dot(y);
    const VectorXc small = resolvent_apply(L, 1e-4, proj);
    const VectorXc dr = ss.solver->drazin_apply(proj);
    CHECK((small - dr).norm() < 1e-3 * dr.norm());
    CHECK_THROWS_AS(resolvent_apply(L, 0.0, y), InvalidParameter);
    const Resolvent res(L, 0.8);
    CHECK(res.relative_residual(res.apply(y), y) < 1e-7);
}

TEST_CASE("spectral decomposition") {
    const auto L = ppk_liouvillian({0.5, 1.0, 1.0, 1.0}, 6);
    const auto sd = spectral_decomposition(L);
    CHECK(sd.biorthogonality_residual < 1e-8);
    CHECK(std::abs(vec_trace(sd.right_vectors.col(sd.steady_index), 6) - cplx(1.0)) < 1e-12);
    for (Index j = 0; j < sd.eigenvalues.size(); ++j)
        if (j != sd.steady_index) CHECK(sd.eigenvalues(j).real() < 0.0);
    const MatrixXc direct = oracle::expm(MatrixXc(L.matrix));
    CHECK((sd.propagator(1.0) - direct).cwiseAbs().maxCoeff() < 1e-7);

    SpectralOptions small;
    small.max_dim2 = 16;
    CHECK_THROWS_AS(spectral_decomposition(L, small), TooLarge);
}

TEST_CASE("Taylor propagation matches the dense exponential") {
    const auto L = ppk_liouvillian({2.0, 1.0, 1.0 / 3.0, 1.0}, 12);
    std::mt19937_64 rng(12);
    const VectorXc v = oracle::vec(oracle::random_density(12, rng));
    for (double t : {0.01, 0.7, 5.0}) {
        const VectorXc ref = oracle::expm(MatrixXc(t * MatrixXc(L.matrix))) * v;
        CHECK((propagate(L, v, t) - ref).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("parity superoperator commutes with the PPK generator") {
    const Index d = 16;
    const auto L = ppk_liouvillian({1.5, 1.0, 0.5, 1.0}, d);
    const SparseXc p = parity(d).sparseView();
    const SparseXc conj = sprepost(p, p);
    std::mt19937_64 rng(13);
    for (int k = 0; k < 3; ++k) {
        const VectorXc v = oracle::random_vector(d * d, rng);
        CHECK((L * VectorXc(conj * v) - conj * (L * v)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

}
