#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "syncnet/dynamics.hpp"
#include "syncnet/experiments.hpp"
#include "syncnet/stability.hpp"

using namespace syncnet;

namespace {

RealMatrix counterexample_Gamma() {
    RealMatrix G(2, 2);
    G << 2, 1,
         -17, 0;
    return G;
}

CouplingSpec jordan_block_coupling(int m, double beta) {
    ComplexMatrix J = ComplexMatrix::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        J(i, i) = beta;
        if (i + 1 < m) J(i, i + 1) = 1.0;
    }
    return coupling_from_jordan(ComplexMatrix::Identity(m, m), J);
}

RealMatrix permutation_conjugate(const RealMatrix& W, const std::vector<int>& perm) {
    const int n = static_cast<int>(W.rows());
    RealMatrix out = RealMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(perm[i], perm[j]) = W(i, j);
    return out;
}

}  // namespace

TEST_CASE("gamma of the counterexample is -1") {
    LaplacianBundle b = build_laplacian(counterexample_weights());
    CouplingSpec c = make_coupling(counterexample_Gamma());
    CHECK(compute_gamma(b, c) == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("gamma reduces to beta * lambda2 for symmetric L and scaled identity coupling") {
    for (double beta : {0.5, 1.0, 4.0}) {
        LaplacianBundle b = build_laplacian(ring_weights(3));
        CouplingSpec c = make_coupling(beta * RealMatrix::Identity(3, 3));
        double l2 = spectral_gap(b).value;
        CHECK(compute_gamma(b, c) == doctest::Approx(beta * l2).epsilon(1e-9));
    }
}

TEST_CASE("gamma on a two-node path with diagonal coupling") {
    LaplacianBundle b = build_laplacian(path_weights(2));
    RealMatrix G(2, 2);
    G << 1, 0, 0, 3;
    CouplingSpec c = make_coupling(G);
    // brute force over all products of nonzero lambda and betas
    double expect = std::numeric_limits<double>::infinity();
    for (const auto& lam : b.spectrum) {
        if (std::abs(lam) < 1e-9) continue;
        for (const auto& beta : c.beta_spectrum) expect = std::min(expect, (lam * beta).real());
    }
    CHECK(expect == doctest::Approx(2.0));
    CHECK(compute_gamma(b, c) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("gamma is invariant under node relabelling") {
    WeightMatrix w = counterexample_weights();
    CouplingSpec c = make_coupling(counterexample_Gamma());
    double g0 = compute_gamma(build_laplacian(w), c);
    std::vector<int> perm = {2, 0, 1};
    WeightMatrix wp = make_weight_matrix(permutation_conjugate(w.W, perm));
    double g1 = compute_gamma(build_laplacian(wp), c);
    CHECK(g0 == doctest::Approx(g1).epsilon(1e-9));
}

TEST_CASE("gamma scales linearly in the coupling") {
    LaplacianBundle b = build_laplacian(counterexample_weights());
    double g1 = compute_gamma(b, make_coupling(counterexample_Gamma()));
    double g3 = compute_gamma(b, make_coupling(RealMatrix(3.0 * counterexample_Gamma())));
    CHECK(g3 == doctest::Approx(3.0 * g1).epsilon(1e-9));
}

TEST_CASE("gamma refuses disconnected networks") {
    RealMatrix two_pairs = RealMatrix::Zero(4, 4);
    two_pairs(0, 1) = two_pairs(1, 0) = 1.0;
    two_pairs(2, 3) = two_pairs(3, 2) = 1.0;
    LaplacianBundle b = build_laplacian(make_weight_matrix(two_pairs));
    CHECK_THROWS_AS(compute_gamma(b, make_coupling(RealMatrix::Identity(2, 2))),
                    std::domain_error);
}

TEST_CASE("gamma flags a spectrally inconsistent bundle") {
    LaplacianBundle b = build_laplacian(path_weights(2));
    b.spectrum = {Complex(0.5, 0), Complex(2, 0)};  // doctored: no zero eigenvalue
    CHECK_THROWS_AS(compute_gamma(b, make_coupling(RealMatrix::Identity(2, 2))), NumericalError);
}

TEST_CASE("rho bound for symmetric couplings ignores the spectrum") {
    RealMatrix g1(3, 3), g2(3, 3);
    g1 = 0.3 * RealMatrix::Identity(3, 3);
    g2 = 7.0 * RealMatrix::Identity(3, 3);
    double r1 = rho_bound(2.0, make_coupling(g1));
    double r2 = rho_bound(2.0, make_coupling(g2));
    CHECK(r1 == doctest::Approx(r2));
    CHECK(r1 == doctest::Approx(2.0));  // c = 1 in inf-norm accounting
}

TEST_CASE("rho bound for the identity coupling is c * varrho") {
    auto detail = rho_bound_detailed(2.0, make_coupling(RealMatrix::Identity(2, 2)));
    CHECK(detail.kappa_Q == doctest::Approx(1.0));
    CHECK(detail.value == doctest::Approx(2.0));
}

TEST_CASE("rho bound scales like 1/beta for a 2x2 Jordan coupling") {
    double r_small = rho_bound(1.0, jordan_block_coupling(2, 0.01), 0.5);
    double r_half = rho_bound(1.0, jordan_block_coupling(2, 0.02), 0.5);
    CHECK(r_small / r_half == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("rho bound rejects defective couplings with nonpositive beta") {
    CHECK_THROWS_AS(rho_bound(1.0, jordan_block_coupling(2, -1.0), 0.5), std::domain_error);
}

TEST_CASE("make_coupling refuses defective matrices") {
    RealMatrix J(2, 2);
    J << 1, 1, 0, 1;
    CHECK_THROWS_AS(make_coupling(J), std::invalid_argument);
    CouplingSpec c = jordan_block_coupling(2, 1.0);
    CHECK_FALSE(c.diagonalizable);
    CHECK(c.jordan_blocks == std::vector<int>{2});
}

TEST_CASE("sync analysis on the counterexample reports A3 violated") {
    SyncAnalysis a = make_sync_analysis(build_laplacian(counterexample_weights()),
                                        make_coupling(counterexample_Gamma()), 0.1);
    CHECK_FALSE(a.a3_satisfied);
    CHECK_FALSE(a.alpha_threshold.has_value());
    CHECK(a.gamma == doctest::Approx(-1.0));
}

TEST_CASE("sync analysis threshold for symmetric L and scaled identity") {
    double beta = 2.0, varrho = 3.0;
    LaplacianBundle b = build_laplacian(ring_weights(3));
    SyncAnalysis a = make_sync_analysis(b, make_coupling(beta * RealMatrix::Identity(3, 3)),
                                        varrho);
    double l2 = spectral_gap(b).value;
    REQUIRE(a.alpha_threshold.has_value());
    CHECK(*a.alpha_threshold == doctest::Approx(varrho / (beta * l2)));
    CHECK(a.C_estimate >= 1.0);
}

TEST_CASE("sync analysis with contracting isolated dynamics") {
    // gamma = 1, rho = 1 * kappa = 1 with identity coupling on a half-weight path
    LaplacianBundle b = build_laplacian(path_weights(2, 0.5));  // lambda2 = 1
    SyncAnalysis a = make_sync_analysis(b, make_coupling(RealMatrix::Identity(2, 2)), 1.0);
    CHECK(a.gamma == doctest::Approx(1.0));
    CHECK(a.rate_at(5.0) == doctest::Approx(5.0 - a.rho_bound));
    // rate is affine increasing in alpha
    CHECK(a.rate_at(2.0) > a.rate_at(1.0));

    // assembled arithmetic for perfectly contracting dynamics: rho = 0
    SyncAnalysis trivial;
    trivial.gamma = 1.0;
    trivial.rho_bound = 0.0;
    trivial.a3_satisfied = true;
    trivial.alpha_threshold = 0.0;
    CHECK(trivial.rate_at(3.5) == doctest::Approx(3.5));
}

TEST_CASE("diagonal dominance margin on constant samples") {
    std::vector<ComplexMatrix> zero = {ComplexMatrix::Zero(2, 2)};
    std::vector<Complex> betas = {Complex(1, 0), Complex(1, 0)};
    CHECK(diagonal_dominance_margin(zero, 1.0, Complex(1, 0), betas) == doctest::Approx(1.0));

    std::vector<ComplexMatrix> eye = {ComplexMatrix::Identity(2, 2)};
    CHECK(diagonal_dominance_margin(eye, 3.0, Complex(1, 0), betas) == doctest::Approx(2.0));

    CHECK_THROWS_AS(diagonal_dominance_margin({}, 1.0, Complex(1, 0), betas), std::domain_error);
}

TEST_CASE("diagonal dominance margin along a Lorenz orbit") {
    // sample the Jacobian along an attractor orbit (Q = I, so A = D2 f)
    VectorField lorenz = builtin_lorenz();
    Eigen::VectorXd x(3);
    x << 1.0, 1.0, 1.0;
    RhsFn rhs = [&lorenz](double t, const NetworkState& s, NetworkState& ds) {
        ds.resize(3);
        lorenz.eval(t, {s.data(), 3}, {ds.data(), 3});
    };
    Trajectory burn = integrate(rhs, x, 0.0, 20.0, 1e-3, RKMethod::RK6);
    std::vector<ComplexMatrix> samples;
    Trajectory orbit = integrate(rhs, burn.states.back(), 0.0, 40.0, 1e-3, RKMethod::RK6);
    for (std::size_t i = 0; i < orbit.states.size(); i += 10) {
        const auto& s = orbit.states[i];
        samples.push_back(lorenz.jacobian(0.0, {s.data(), 3}).cast<Complex>());
    }
    std::vector<Complex> betas = {Complex(1, 0), Complex(1, 0), Complex(1, 0)};

    double mu30 = diagonal_dominance_margin(samples, 30.0, Complex(1, 0), betas);
    double mu100 = diagonal_dominance_margin(samples, 100.0, Complex(1, 0), betas);
    // the certificate turns positive once alpha*lambda exceeds the worst row sum
    CHECK(mu100 > 0.0);
    CHECK(mu100 > mu30);

    // antitone in alpha when all Re(lambda beta) > 0
    double prev = -1e300;
    for (double alpha : {10.0, 20.0, 40.0, 80.0}) {
        double mu = diagonal_dominance_margin(samples, alpha, Complex(1, 0), betas);
        CHECK(mu >= prev);
        prev = mu;
    }
}

TEST_CASE("roughness adjustment") {
    CHECK(roughness_adjust(5.0, 2.0, 1.0) == doctest::Approx(3.0));
    CHECK(roughness_adjust(1.7, 9.0, 0.0) == doctest::Approx(1.7));

    // perturbed-rate form of the non-diagonalisable estimate: with
    // mu = alpha gamma - rho and delta = alpha K eps / K the adjusted rate
    // equals alpha gamma - (rho + alpha K eps)
    double alpha = 4.0, gamma = 1.5, rho = 2.0, K = 3.0, eps = 0.05;
    double mu = alpha * gamma - rho;
    double adjusted = roughness_adjust(mu, K, alpha * eps);
    CHECK(adjusted == doctest::Approx(alpha * gamma - (rho + alpha * K * eps)));
}

TEST_CASE("persistence bound arithmetic") {
    CHECK(persistence_bound(1.0, 0.0, 2.0, 1.0, 0.5).asymptotic_error == doctest::Approx(0.0));
    CHECK(persistence_bound(2.0, 0.1, 5.0, 1.0, 3.0).asymptotic_error == doctest::Approx(0.1));

    // reciprocal law: doubling the headroom halves the bound
    double b2 = persistence_bound(1.0, 1.0, 2.0, 1.0, 0.0).asymptotic_error;
    double b4 = persistence_bound(1.0, 1.0, 4.0, 1.0, 0.0).asymptotic_error;
    CHECK(b2 == doctest::Approx(0.5));
    CHECK(b4 == doctest::Approx(0.25));

    CHECK_THROWS_AS(persistence_bound(1.0, 0.1, 1.0, 1.0, 2.0), std::domain_error);
}

TEST_CASE("persistence bound is linear in eps0 and decreasing in alpha") {
    std::mt19937 gen(9);
    std::uniform_real_distribution<double> dist(0.1, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        double C = dist(gen), eps0 = dist(gen), gamma = dist(gen), rho = dist(gen);
        double alpha = rho / gamma + dist(gen);
        double b1 = persistence_bound(C, eps0, alpha, gamma, rho).asymptotic_error;
        double b2 = persistence_bound(C, 2.0 * eps0, alpha, gamma, rho).asymptotic_error;
        CHECK(b2 == doctest::Approx(2.0 * b1));
        double b3 = persistence_bound(C, eps0, alpha + 1.0, gamma, rho).asymptotic_error;
        CHECK(b3 < b1);
    }
}

TEST_CASE("delta estimate formula") {
    CHECK(delta_estimate(2.0, 1.0, 0.5, 1.0, 3.0, 0.5) ==
          doctest::Approx((2.0 - 0.5) / (4.0 * 1.0 * 3.0 * 0.5)));
    CHECK_THROWS_AS(delta_estimate(0.1, 1.0, 0.5, 1.0, 3.0, 0.5), std::domain_error);
}
