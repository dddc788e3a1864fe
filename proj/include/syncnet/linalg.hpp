#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace syncnet {

using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

/// Eigenvalues listed with algebraic multiplicity, in solver order.
using Spectrum = std::vector<Complex>;

enum class NormKind { Two, Inf };

/// Central tolerance policy. Absolute tolerances on algebraic identities are
/// scaled by the relevant condition number at the call site.
struct Tolerances {
    double algebraic = 1e-10;     ///< absolute, on algebraic identities
    double singular_rel = 1e-12;  ///< sigma_min < singular_rel*||M||_2 counts as singular
    double zero_eig_rel = 1e-9;   ///< |lambda| < zero_eig_rel*||L||_inf counts as zero
    double distinct_rel = 1e-6;   ///< pairwise-distinct eigenvalue gap, relative
};

const Tolerances& default_tolerances();

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingularMatrixError : std::runtime_error {
    SingularMatrixError(const std::string& what, double sigma_min)
        : std::runtime_error(what), smallest_singular_value(sigma_min) {}
    double smallest_singular_value;
};

/// All eigenvalues of a square real matrix, with multiplicity. Conjugate
/// symmetric by construction of the underlying real Schur decomposition.
Spectrum eigenvalues(const RealMatrix& M);
Spectrum eigenvalues(const ComplexMatrix& M);

RealMatrix kronecker(const RealMatrix& A, const RealMatrix& B);
ComplexMatrix kronecker(const ComplexMatrix& A, const ComplexMatrix& B);

/// Induced operator norm: Inf is the max absolute row sum, Two the largest
/// singular value.
double operator_norm(const RealMatrix& M, NormKind p);
double operator_norm(const ComplexMatrix& M, NormKind p);

/// ||M||_p * ||M^-1||_p. Throws SingularMatrixError when the smallest singular
/// value falls below the relative singularity threshold.
double condition_number(const RealMatrix& M, NormKind p,
                        const Tolerances& tol = default_tolerances());
double condition_number(const ComplexMatrix& M, NormKind p,
                        const Tolerances& tol = default_tolerances());

/// Explicit eigenbasis of the perturbed Jordan block J + E, where J has a
/// single eigenvalue lambda, E = diag(0, eps, 2 eps, ..., (m-1) eps), and R
/// carries the normalised eigenvectors in closed form:
///   R[l][j]    = (j-1)!/(j-l)! * eps^(l-1)            for l <= j (1-based)
///   Rinv[i][k] = (-1)^(i+k)/((i-1)!(k-i)!) * eps^(1-k) for i <= k
/// Rinv (J+E) R is diagonal with entries lambda + (i-1) eps, and
/// ||Rinv E R||_inf = max{2m-3, m-1} * eps.
struct JordanPerturbationBasis {
    int m = 0;
    double eps = 0.0;
    Complex lambda;
    RealMatrix R;
    RealMatrix Rinv;
    Spectrum diag;   ///< lambda + (i-1)*eps
    double bound = 0.0;  ///< max{2m-3, m-1} * eps
};

/// Factorials are evaluated in exact integer arithmetic; m is capped at 12 so
/// every intermediate stays exactly representable in a double.
JordanPerturbationBasis jordan_perturbation_basis(int m, Complex lambda, double eps);

/// Computes ||Rinv*E*R||_inf explicitly and checks it against the closed-form
/// bound carried by the basis (mismatch beyond 1e-10 raises NumericalError).
double conjugated_perturbation_norm(const JordanPerturbationBasis& basis);

/// Spectrum helpers.
bool is_conjugate_symmetric(const Spectrum& s, double tol = 1e-9);
Spectrum sorted_spectrum(Spectrum s);

}  // namespace syncnet
