#include "syncnet/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace syncnet {

const Tolerances& default_tolerances() {
    static const Tolerances tol{};
    return tol;
}

namespace {

void require_square(Eigen::Index rows, Eigen::Index cols, const char* who) {
    if (rows != cols) {
        throw DimensionError(std::string(who) + ": matrix is " + std::to_string(rows) +
                             "x" + std::to_string(cols) + ", expected square");
    }
    if (rows == 0) {
        throw DimensionError(std::string(who) + ": empty matrix");
    }
}

}  // namespace

Spectrum eigenvalues(const RealMatrix& M) {
    require_square(M.rows(), M.cols(), "eigenvalues");
    if (!M.allFinite()) throw std::invalid_argument("eigenvalues: non-finite entries");
    Eigen::EigenSolver<RealMatrix> solver(M, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("eigenvalues: QR iteration did not converge (n=" +
                             std::to_string(M.rows()) + ")");
    }
    const auto& v = solver.eigenvalues();
    return Spectrum(v.data(), v.data() + v.size());
}

Spectrum eigenvalues(const ComplexMatrix& M) {
    require_square(M.rows(), M.cols(), "eigenvalues");
    if (!M.allFinite()) throw std::invalid_argument("eigenvalues: non-finite entries");
    Eigen::ComplexEigenSolver<ComplexMatrix> solver(M, false);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("eigenvalues: iteration did not converge (n=" +
                             std::to_string(M.rows()) + ")");
    }
    const auto& v = solver.eigenvalues();
    return Spectrum(v.data(), v.data() + v.size());
}

namespace {

template <typename Mat>
Mat kron_impl(const Mat& A, const Mat& B) {
    Mat C(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            C.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return C;
}

template <typename Mat>
double inf_norm(const Mat& M) {
    double best = 0.0;
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        double row = 0.0;
        for (Eigen::Index j = 0; j < M.cols(); ++j) row += std::abs(M(i, j));
        best = std::max(best, row);
    }
    return best;
}

template <typename Mat>
double norm_impl(const Mat& M, NormKind p) {
    if (p == NormKind::Inf) return inf_norm(M);
    Eigen::JacobiSVD<Mat> svd(M);
    return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

template <typename Mat>
double cond_impl(const Mat& M, NormKind p, const Tolerances& tol) {
    require_square(M.rows(), M.cols(), "condition_number");
    Eigen::JacobiSVD<Mat> svd(M);
    const auto& sv = svd.singularValues();
    double sigma_max = sv(0);
    double sigma_min = sv(sv.size() - 1);
    if (sigma_min <= tol.singular_rel * sigma_max || sigma_min == 0.0) {
        throw SingularMatrixError("condition_number: matrix numerically singular", sigma_min);
    }
    if (p == NormKind::Two) return sigma_max / sigma_min;
    Mat inv = M.fullPivLu().inverse();
    return inf_norm(M) * inf_norm(inv);
}

std::uint64_t falling_factorial(int top, int count) {
    // top * (top-1) * ... * (top-count+1); empty product is 1
    std::uint64_t r = 1;
    for (int k = 0; k < count; ++k) r *= static_cast<std::uint64_t>(top - k);
    return r;
}

std::uint64_t factorial(int n) { return falling_factorial(n, n); }

}  // namespace

RealMatrix kronecker(const RealMatrix& A, const RealMatrix& B) { return kron_impl(A, B); }
ComplexMatrix kronecker(const ComplexMatrix& A, const ComplexMatrix& B) { return kron_impl(A, B); }

double operator_norm(const RealMatrix& M, NormKind p) { return norm_impl(M, p); }
double operator_norm(const ComplexMatrix& M, NormKind p) { return norm_impl(M, p); }

double condition_number(const RealMatrix& M, NormKind p, const Tolerances& tol) {
    return cond_impl(M, p, tol);
}
double condition_number(const ComplexMatrix& M, NormKind p, const Tolerances& tol) {
    return cond_impl(M, p, tol);
}

JordanPerturbationBasis jordan_perturbation_basis(int m, Complex lambda, double eps) {
    if (m < 1) throw DimensionError("jordan_perturbation_basis: m must be >= 1");
    if (m > 12) {
        throw std::range_error("jordan_perturbation_basis: m > 12 loses exact factorials");
    }
    if (!(eps > 0.0)) throw std::invalid_argument("jordan_perturbation_basis: eps must be > 0");

    JordanPerturbationBasis b;
    b.m = m;
    b.eps = eps;
    b.lambda = lambda;
    b.R = RealMatrix::Zero(m, m);
    b.Rinv = RealMatrix::Zero(m, m);

    // powers of eps, both signs, computed once
    std::vector<double> pow_pos(m), pow_neg(m);
    pow_pos[0] = pow_neg[0] = 1.0;
    for (int k = 1; k < m; ++k) {
        pow_pos[k] = pow_pos[k - 1] * eps;
        pow_neg[k] = pow_neg[k - 1] / eps;
    }

    for (int l = 1; l <= m; ++l) {
        for (int j = l; j <= m; ++j) {
            // (j-1)!/(j-l)! = (j-1)(j-2)...(j-l+1), exactly representable
            double num = static_cast<double>(falling_factorial(j - 1, l - 1));
            b.R(l - 1, j - 1) = num * pow_pos[l - 1];
        }
    }
    for (int i = 1; i <= m; ++i) {
        for (int k = i; k <= m; ++k) {
            double denom = static_cast<double>(factorial(i - 1) * factorial(k - i));
            double sign = ((i + k) % 2 == 0) ? 1.0 : -1.0;
            b.Rinv(i - 1, k - 1) = sign / denom * pow_neg[k - 1];
        }
    }

    b.diag.reserve(m);
    for (int i = 0; i < m; ++i) b.diag.push_back(lambda + double(i) * eps);
    b.bound = std::max(2.0 * m - 3.0, m - 1.0) * eps;
    if (m == 1) b.bound = 0.0;
    return b;
}

double conjugated_perturbation_norm(const JordanPerturbationBasis& basis) {
    const int m = basis.m;
    RealMatrix E = RealMatrix::Zero(m, m);
    for (int i = 0; i < m; ++i) E(i, i) = double(i) * basis.eps;
    RealMatrix conj = basis.Rinv * E * basis.R;
    double norm = inf_norm(conj);
    if (std::abs(norm - basis.bound) > 1e-10) {
        throw NumericalError("conjugated_perturbation_norm: computed " + std::to_string(norm) +
                             " differs from closed-form bound " + std::to_string(basis.bound));
    }
    return norm;
}

bool is_conjugate_symmetric(const Spectrum& s, double tol) {
    double imag_sum = 0.0;
    for (const auto& z : s) imag_sum += z.imag();
    return std::abs(imag_sum) < tol;
}

Spectrum sorted_spectrum(Spectrum s) {
    std::sort(s.begin(), s.end(), [](const Complex& a, const Complex& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return s;
}

}  // namespace syncnet
