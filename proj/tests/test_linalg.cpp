#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "syncnet/linalg.hpp"

using namespace syncnet;

namespace {

// Greedy nearest-neighbour multiset match; adequate when true eigenvalue
// separation is far above the tolerance.
bool spectra_match(const Spectrum& a, const Spectrum& b, double tol) {
    if (a.size() != b.size()) return false;
    std::vector<bool> used(b.size(), false);
    for (const auto& za : a) {
        double best = 1e300;
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (used[j]) continue;
            double d = std::abs(za - b[j]);
            if (d < best) {
                best = d;
                best_j = j;
            }
        }
        if (best > tol) return false;
        used[best_j] = true;
    }
    return true;
}

RealMatrix counterexample_L() {
    RealMatrix L(3, 3);
    L << 3, -2, -1,
         0, 2, -2,
         -1, 0, 1;
    return L;
}

RealMatrix counterexample_Gamma() {
    RealMatrix G(2, 2);
    G << 2, 1,
         -17, 0;
    return G;
}

}  // namespace

TEST_CASE("eigenvalues of the counterexample Laplacian are 0, 3+i, 3-i") {
    Spectrum s = eigenvalues(counterexample_L());
    CHECK(spectra_match(s, {Complex(0, 0), Complex(3, 1), Complex(3, -1)}, 1e-9));
}

TEST_CASE("eigenvalues of the counterexample coupling are 1 +/- 4i") {
    Spectrum s = eigenvalues(counterexample_Gamma());
    CHECK(spectra_match(s, {Complex(1, 4), Complex(1, -4)}, 1e-9));
}

TEST_CASE("eigenvalues of the identity") {
    Spectrum s = eigenvalues(RealMatrix(RealMatrix::Identity(2, 2)));
    CHECK(spectra_match(s, {Complex(1, 0), Complex(1, 0)}, 1e-12));
}

TEST_CASE("eigenvalues rejects non-square input") {
    CHECK_THROWS_AS(eigenvalues(RealMatrix(RealMatrix::Zero(2, 3))), DimensionError);
}

TEST_CASE("real spectra close under conjugation") {
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        int n = 2 + trial % 5;
        RealMatrix A(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = dist(gen);
        Spectrum s = eigenvalues(A);
        double imag_sum = 0;
        for (const auto& z : s) imag_sum += z.imag();
        CHECK(std::abs(imag_sum) < 1e-9);
    }
}

TEST_CASE("kronecker with identity factor is block diagonal") {
    RealMatrix B(2, 2);
    B << 1, 2, 3, 4;
    RealMatrix K = kronecker(RealMatrix::Identity(2, 2), B);
    REQUIRE(K.rows() == 4);
    CHECK((K.block(0, 0, 2, 2) - B).norm() == 0.0);
    CHECK((K.block(2, 2, 2, 2) - B).norm() == 0.0);
    CHECK(K.block(0, 2, 2, 2).isZero(0.0));
}

TEST_CASE("kronecker of scalars multiplies") {
    RealMatrix a(1, 1), b(1, 1);
    a << 2;
    b << 3;
    CHECK(kronecker(a, b)(0, 0) == 6.0);
}

TEST_CASE("kronecker spectrum is the product multiset on the counterexample") {
    Spectrum sl = eigenvalues(counterexample_L());
    Spectrum sg = eigenvalues(counterexample_Gamma());
    Spectrum expected;
    for (const auto& l : sl)
        for (const auto& g : sg) expected.push_back(l * g);
    Spectrum got = eigenvalues(kronecker(counterexample_L(), counterexample_Gamma()));
    CHECK(spectra_match(got, expected, 1e-8));
    // contains zero twice (lambda_1 = 0 against both betas)
    int zeros = 0;
    for (const auto& z : got)
        if (std::abs(z) < 1e-8) ++zeros;
    CHECK(zeros == 2);
}

TEST_CASE("kronecker spectrum property on random pairs") {
    std::mt19937 gen(42);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::uniform_int_distribution<int> dim(1, 6);
    for (int trial = 0; trial < 200; ++trial) {
        int n = dim(gen), m = dim(gen);
        RealMatrix A(n, n), B(m, m);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = dist(gen);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) B(i, j) = dist(gen);
        Spectrum expected;
        for (const auto& l : eigenvalues(A))
            for (const auto& g : eigenvalues(B)) expected.push_back(l * g);
        CHECK(spectra_match(eigenvalues(kronecker(A, B)), expected, 1e-8));
    }
}

TEST_CASE("operator norms on fixed matrices") {
    RealMatrix M(2, 2);
    M << 1, -2, 3, 4;
    CHECK(operator_norm(M, NormKind::Inf) == doctest::Approx(7.0));
    CHECK(operator_norm(RealMatrix(RealMatrix::Identity(3, 3)), NormKind::Two) == doctest::Approx(1.0));
    RealMatrix D(2, 2);
    D << 3, 0, 0, -5;
    CHECK(operator_norm(D, NormKind::Two) == doctest::Approx(5.0));
}

TEST_CASE("condition number basics") {
    CHECK(condition_number(RealMatrix(RealMatrix::Identity(4, 4)), NormKind::Two) == doctest::Approx(1.0));
    CHECK(condition_number(RealMatrix(RealMatrix::Identity(4, 4)), NormKind::Inf) == doctest::Approx(1.0));

    double th = 0.3;
    RealMatrix rot(2, 2);
    rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    CHECK(condition_number(rot, NormKind::Two) == doctest::Approx(1.0));

    auto basis = jordan_perturbation_basis(2, Complex(0, 0), 0.1);
    CHECK(condition_number(basis.R, NormKind::Inf) == doctest::Approx(22.0));
}

TEST_CASE("condition number is at least one") {
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        int n = 1 + trial % 6;
        RealMatrix A(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = dist(gen);
        try {
            CHECK(condition_number(A, trial % 2 ? NormKind::Two : NormKind::Inf) >= 1.0 - 1e-12);
        } catch (const SingularMatrixError&) {
            // acceptable draw
        }
    }
}

TEST_CASE("singular matrix raises with the offending singular value") {
    RealMatrix S(2, 2);
    S << 1, 2, 2, 4;
    try {
        condition_number(S, NormKind::Two);
        FAIL("expected SingularMatrixError");
    } catch (const SingularMatrixError& e) {
        CHECK(e.smallest_singular_value < 1e-12);
    }
}

TEST_CASE("jordan perturbation basis m=2 closed forms") {
    double eps = 0.25;
    auto b = jordan_perturbation_basis(2, Complex(1.5, -0.5), eps);
    CHECK(b.R(0, 0) == 1.0);
    CHECK(b.R(0, 1) == 1.0);
    CHECK(b.R(1, 0) == 0.0);
    CHECK(b.R(1, 1) == eps);
    CHECK(b.Rinv(0, 0) == 1.0);
    CHECK(b.Rinv(0, 1) == doctest::Approx(-1.0 / eps));
    CHECK(b.Rinv(1, 1) == doctest::Approx(1.0 / eps));
    CHECK((b.R * b.Rinv - RealMatrix::Identity(2, 2)).norm() < 1e-12);
    CHECK(b.diag[0] == Complex(1.5, -0.5));
    CHECK(std::abs(b.diag[1] - Complex(1.75, -0.5)) < 1e-12);
}

TEST_CASE("jordan perturbation basis m=1 is trivial") {
    auto b = jordan_perturbation_basis(1, Complex(2, 3), 0.7);
    CHECK(b.R(0, 0) == 1.0);
    CHECK(b.bound == 0.0);
    CHECK(conjugated_perturbation_norm(b) == 0.0);
}

TEST_CASE("conjugated perturbation norm equals the closed-form bound") {
    CHECK(conjugated_perturbation_norm(jordan_perturbation_basis(2, Complex(0, 0), 0.5)) ==
          doctest::Approx(0.5));
    CHECK(conjugated_perturbation_norm(jordan_perturbation_basis(3, Complex(0, 0), 0.01)) ==
          doctest::Approx(0.03));
    CHECK(conjugated_perturbation_norm(jordan_perturbation_basis(3, Complex(1, 1), 1.0)) ==
          doctest::Approx(3.0));
}

TEST_CASE("jordan basis identities across m and eps") {
    for (int m = 1; m <= 8; ++m) {
        for (double eps : {1e-3, 1e-1, 1.0}) {
            Complex lambda(0.8, 0.0);
            auto b = jordan_perturbation_basis(m, lambda, eps);

            double kappa = operator_norm(b.R, NormKind::Inf) * operator_norm(b.Rinv, NormKind::Inf);
            RealMatrix prod = b.R * b.Rinv;
            CHECK(operator_norm(RealMatrix(prod - RealMatrix::Identity(m, m)), NormKind::Inf) <
                  1e-9 * kappa);

            // Rinv (J+E) R diagonal with entries lambda + (i-1) eps
            ComplexMatrix J = ComplexMatrix::Zero(m, m);
            for (int i = 0; i < m; ++i) {
                J(i, i) = lambda + Complex(double(i) * eps, 0.0);
                if (i + 1 < m) J(i, i + 1) = 1.0;
            }
            // J+E above already folds E into the diagonal
            ComplexMatrix conj = b.Rinv.cast<Complex>() * J * b.R.cast<Complex>();
            double offdiag = 0.0;
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    if (i != j) offdiag += std::abs(conj(i, j));
            CHECK(offdiag < 1e-9 * (std::abs(lambda) + eps));
            for (int i = 0; i < m; ++i) {
                CHECK(std::abs(conj(i, i) - b.diag[i]) < 1e-9);
            }

            CHECK(conjugated_perturbation_norm(b) == doctest::Approx(b.bound).epsilon(1e-12));
        }
    }
}

TEST_CASE("jordan basis rejects oversized blocks") {
    CHECK_THROWS_AS(jordan_perturbation_basis(13, Complex(0, 0), 0.1), std::range_error);
}
