#include "syncnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include <Eigen/Eigenvalues>

namespace syncnet {

WeightMatrix make_weight_matrix(const RealMatrix& W) {
    if (W.rows() != W.cols() || W.rows() == 0) {
        throw DimensionError("weight matrix must be square and non-empty, got " +
                             std::to_string(W.rows()) + "x" + std::to_string(W.cols()));
    }
    if (!W.allFinite()) throw std::invalid_argument("weight matrix has non-finite entries");
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
        if (W(i, i) != 0.0) {
            throw std::invalid_argument("weight matrix diagonal must be zero (node " +
                                        std::to_string(i) + ")");
        }
    }
    return WeightMatrix{static_cast<int>(W.rows()), W};
}

LaplacianBundle build_laplacian(const WeightMatrix& wm, const Tolerances& tol) {
    const int n = wm.n;
    const RealMatrix& W = wm.W;
    if (!W.allFinite()) throw std::invalid_argument("build_laplacian: non-finite entries");

    LaplacianBundle bundle;
    bundle.intensities.resize(n);
    bundle.L = RealMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        double vi = 0.0;
        for (int j = 0; j < n; ++j) vi += W(i, j);  // left-to-right, W(i,i) == 0
        bundle.intensities[i] = vi;
        for (int j = 0; j < n; ++j) bundle.L(i, j) = (i == j) ? vi : -W(i, j);
    }

    bundle.spectrum = eigenvalues(bundle.L);
    double scale = std::max(operator_norm(bundle.L, NormKind::Inf), 1.0);
    double tz = tol.zero_eig_rel * scale;
    bundle.zero_multiplicity = 0;
    for (const auto& lam : bundle.spectrum) {
        if (std::abs(lam) < tz) ++bundle.zero_multiplicity;
    }
    return bundle;
}

int connectivity(const WeightMatrix& wm) {
    const int n = wm.n;
    std::vector<int> comp(n, -1);
    int ncomp = 0;
    for (int start = 0; start < n; ++start) {
        if (comp[start] >= 0) continue;
        comp[start] = ncomp;
        std::queue<int> q;
        q.push(start);
        while (!q.empty()) {
            int i = q.front();
            q.pop();
            for (int j = 0; j < n; ++j) {
                if (comp[j] < 0 && std::abs(wm.W(i, j)) + std::abs(wm.W(j, i)) > 0.0) {
                    comp[j] = ncomp;
                    q.push(j);
                }
            }
        }
        ++ncomp;
    }
    return ncomp;
}

SpectralGapResult spectral_gap(const LaplacianBundle& bundle, const Tolerances& tol) {
    const RealMatrix& L = bundle.L;
    double scale = std::max(operator_norm(L, NormKind::Inf), 1.0);
    if (operator_norm(RealMatrix(L - L.transpose()), NormKind::Inf) > tol.algebraic * scale) {
        throw std::domain_error("spectral_gap: Laplacian is not symmetric");
    }
    if (bundle.zero_multiplicity != 1) return {0.0, true};

    Eigen::SelfAdjointEigenSolver<RealMatrix> solver(L);
    if (solver.info() != Eigen::Success) throw NumericalError("spectral_gap: eigensolver failed");
    return {solver.eigenvalues()(1), false};
}

namespace {

struct JordanBlockInfo {
    int start;  // 0-based row of the block
    int size;
    Complex lambda;
};

// Validates the canonical-form shape of J and splits it into blocks.
std::vector<JordanBlockInfo> split_jordan_blocks(const ComplexMatrix& J, double tol_zero) {
    const int n = static_cast<int>(J.rows());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            Complex v = J(i, j);
            if (j == i + 1) {
                if (std::abs(v) > 1e-12 && std::abs(v - 1.0) > 1e-12) {
                    throw std::invalid_argument(
                        "approx_diagonalizable: J superdiagonal entries must be 0 or 1");
                }
            } else if (std::abs(v) > 1e-12) {
                throw std::invalid_argument("approx_diagonalizable: J is not in Jordan form");
            }
        }
    }
    std::vector<JordanBlockInfo> blocks;
    int start = 0;
    for (int i = 0; i < n; ++i) {
        bool chain = (i + 1 < n) && std::abs(J(i, i + 1) - 1.0) <= 1e-12;
        if (chain) {
            if (std::abs(J(i + 1, i + 1) - J(i, i)) > 1e-9) {
                throw std::invalid_argument(
                    "approx_diagonalizable: Jordan chain with unequal eigenvalues");
            }
            continue;
        }
        blocks.push_back({start, i - start + 1, J(start, start)});
        start = i + 1;
    }
    if (blocks.empty() || blocks.front().size != 1 || std::abs(blocks.front().lambda) > tol_zero) {
        throw std::invalid_argument(
            "approx_diagonalizable: first Jordan block must be the 1x1 zero block");
    }
    for (std::size_t b = 1; b < blocks.size(); ++b) {
        if (std::abs(blocks[b].lambda) < tol_zero) {
            throw std::domain_error("approx_diagonalizable: zero eigenvalue is not simple");
        }
    }
    return blocks;
}

}  // namespace

DiagonalizableApproximation approx_diagonalizable(const LaplacianBundle& bundle,
                                                  const std::optional<JordanForm>& jordan_form,
                                                  double eps, const Tolerances& tol) {
    if (!(eps > 0.0)) throw std::invalid_argument("approx_diagonalizable: eps must be > 0");
    if (bundle.zero_multiplicity != 1) {
        throw std::domain_error("approx_diagonalizable: network disconnected (zero multiplicity " +
                                std::to_string(bundle.zero_multiplicity) + ")");
    }
    const RealMatrix& L = bundle.L;
    const int n = static_cast<int>(L.rows());
    double scale = std::max(operator_norm(L, NormKind::Inf), 1.0);

    DiagonalizableApproximation out;
    out.eps = eps;

    bool symmetric =
        operator_norm(RealMatrix(L - L.transpose()), NormKind::Inf) <= tol.algebraic * scale;
    if (symmetric) {
        Eigen::SelfAdjointEigenSolver<RealMatrix> solver(L);
        if (solver.info() != Eigen::Success)
            throw NumericalError("approx_diagonalizable: eigensolver failed");
        out.Ltilde = L;
        out.P = solver.eigenvectors().cast<Complex>();
        out.Lambda_tilde = solver.eigenvalues().cast<Complex>().asDiagonal();
        out.conjugated_error = 0.0;
        return out;
    }

    // pairwise-distinct spectrum: already diagonalisable, Ltilde = L
    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < bundle.spectrum.size(); ++i)
        for (std::size_t j = i + 1; j < bundle.spectrum.size(); ++j)
            min_gap = std::min(min_gap, std::abs(bundle.spectrum[i] - bundle.spectrum[j]));
    if (min_gap > tol.distinct_rel * scale) {
        Eigen::EigenSolver<RealMatrix> solver(L);
        if (solver.info() != Eigen::Success)
            throw NumericalError("approx_diagonalizable: eigensolver failed");
        out.Ltilde = L;
        out.P = solver.eigenvectors();
        out.Lambda_tilde = solver.eigenvalues().asDiagonal();
        out.conjugated_error = 0.0;
        return out;
    }

    if (!jordan_form) {
        throw std::invalid_argument(
            "approx_diagonalizable: repeated eigenvalues; supply the Jordan factorisation "
            "(numerical Jordan decomposition is refused)");
    }

    const ComplexMatrix& O = jordan_form->O;
    const ComplexMatrix& J = jordan_form->J;
    if (O.rows() != n || O.cols() != n || J.rows() != n || J.cols() != n) {
        throw DimensionError("approx_diagonalizable: Jordan factors must be n x n");
    }
    ComplexMatrix Oinv = O.fullPivLu().inverse();
    double kappaO = operator_norm(O, NormKind::Inf) * operator_norm(Oinv, NormKind::Inf);
    double resid = operator_norm(ComplexMatrix(O * J * Oinv - L.cast<Complex>()), NormKind::Inf);
    if (resid > 1e-8 * scale * std::max(kappaO, 1.0)) {
        throw std::invalid_argument(
            "approx_diagonalizable: supplied (O, J) is not a factorisation of L (residual " +
            std::to_string(resid) + ")");
    }
    double tz = tol.zero_eig_rel * scale;
    auto blocks = split_jordan_blocks(J, tz);

    ComplexMatrix E = ComplexMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i) E(i, i) = Complex(double(i) * eps, 0.0);

    ComplexMatrix Lt_c = O * (J + E) * Oinv;
    double imag_mass = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) imag_mass = std::max(imag_mass, std::abs(Lt_c(i, j).imag()));
    if (imag_mass > 1e-8 * scale * std::max(kappaO, 1.0)) {
        throw std::invalid_argument(
            "approx_diagonalizable: O (J+E) O^-1 is not real; conjugate-pair Jordan blocks are "
            "not supported by this perturbation");
    }
    out.Ltilde = Lt_c.real();

    // P = O * blockdiag(R_b); each R_b diagonalises its shifted block.
    ComplexMatrix Rfull = ComplexMatrix::Zero(n, n);
    ComplexMatrix Lam = ComplexMatrix::Zero(n, n);
    for (const auto& blk : blocks) {
        if (blk.size == 1) {
            Rfull(blk.start, blk.start) = 1.0;
            Lam(blk.start, blk.start) = blk.lambda + Complex(double(blk.start) * eps, 0.0);
            continue;
        }
        auto basis = jordan_perturbation_basis(blk.size, blk.lambda, eps);
        Rfull.block(blk.start, blk.start, blk.size, blk.size) = basis.R.cast<Complex>();
        for (int i = 0; i < blk.size; ++i) {
            Lam(blk.start + i, blk.start + i) =
                blk.lambda + Complex(double(blk.start + i) * eps, 0.0);
        }
    }
    out.P = O * Rfull;
    out.Lambda_tilde = Lam;

    ComplexMatrix Pinv = out.P.fullPivLu().inverse();
    ComplexMatrix diff = (out.Ltilde - L).cast<Complex>();
    out.conjugated_error = operator_norm(ComplexMatrix(Pinv * diff * out.P), NormKind::Inf);

    double b_n = std::max(2.0 * n - 3.0, n - 1.0) * eps;
    if (out.conjugated_error > b_n + 1e-9) {
        throw NumericalError("approx_diagonalizable: conjugated error " +
                             std::to_string(out.conjugated_error) + " exceeds bound " +
                             std::to_string(b_n));
    }
    return out;
}

WeightMatrix ring_weights(int n, double w) {
    RealMatrix W = RealMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        W(i, (i + 1) % n) = w;
        W(i, (i + n - 1) % n) = w;
    }
    return make_weight_matrix(W);
}

WeightMatrix complete_weights(int n, double w) {
    RealMatrix W = RealMatrix::Constant(n, n, w);
    W.diagonal().setZero();
    return make_weight_matrix(W);
}

WeightMatrix path_weights(int n, double w) {
    RealMatrix W = RealMatrix::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) W(i, i + 1) = W(i + 1, i) = w;
    return make_weight_matrix(W);
}

WeightMatrix counterexample_weights() {
    RealMatrix W = RealMatrix::Zero(3, 3);
    W(0, 1) = 2.0;
    W(0, 2) = 1.0;
    W(1, 2) = 2.0;
    W(2, 0) = 1.0;
    return make_weight_matrix(W);
}

}  // namespace syncnet
