#include "syncnet/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace syncnet {

namespace {

double min_real(const Spectrum& s) {
    double r = std::numeric_limits<double>::infinity();
    for (const auto& z : s) r = std::min(r, z.real());
    return r;
}

bool is_symmetric(const RealMatrix& M, const Tolerances& tol) {
    double scale = std::max(operator_norm(M, NormKind::Inf), 1.0);
    return operator_norm(RealMatrix(M - M.transpose()), NormKind::Inf) <= tol.algebraic * scale;
}

}  // namespace

CouplingSpec make_coupling(const RealMatrix& Gamma, const Tolerances& tol) {
    if (Gamma.rows() != Gamma.cols() || Gamma.rows() == 0) {
        throw DimensionError("coupling matrix must be square");
    }
    if (!Gamma.allFinite()) throw std::invalid_argument("coupling matrix has non-finite entries");

    CouplingSpec spec;
    spec.Gamma = Gamma;
    spec.beta_spectrum = eigenvalues(Gamma);
    spec.beta_min = min_real(spec.beta_spectrum);

    if (is_symmetric(Gamma, tol)) {
        Eigen::SelfAdjointEigenSolver<RealMatrix> solver(Gamma);
        spec.Q = solver.eigenvectors().cast<Complex>();
        spec.diagonalizable = true;
        return spec;
    }

    Eigen::EigenSolver<RealMatrix> solver(Gamma);
    if (solver.info() != Eigen::Success) throw NumericalError("make_coupling: eigensolver failed");
    ComplexMatrix Q = solver.eigenvectors();
    Eigen::JacobiSVD<ComplexMatrix> svd(Q);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= tol.distinct_rel * sv(0)) {
        throw std::invalid_argument(
            "make_coupling: Gamma appears defective; build it with coupling_from_jordan");
    }
    spec.Q = Q;
    spec.diagonalizable = true;
    return spec;
}

CouplingSpec coupling_from_jordan(const ComplexMatrix& Q, const ComplexMatrix& J,
                                  const Tolerances& tol) {
    const int m = static_cast<int>(J.rows());
    if (Q.rows() != m || Q.cols() != m || J.cols() != m || m == 0) {
        throw DimensionError("coupling_from_jordan: Q and J must be square of equal size");
    }
    CouplingSpec spec;
    ComplexMatrix Qinv = Q.fullPivLu().inverse();
    ComplexMatrix G = Q * J * Qinv;
    double imag_mass = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) imag_mass = std::max(imag_mass, std::abs(G(i, j).imag()));
    if (imag_mass > 1e-9 * std::max(1.0, operator_norm(G, NormKind::Inf))) {
        throw std::invalid_argument("coupling_from_jordan: Q J Q^-1 is not a real matrix");
    }
    spec.Gamma = G.real();
    spec.Q = Q;
    spec.beta_spectrum.reserve(m);
    for (int i = 0; i < m; ++i) spec.beta_spectrum.push_back(J(i, i));
    spec.beta_min = min_real(spec.beta_spectrum);

    spec.jordan_blocks.clear();
    int blk = 1;
    bool defective = false;
    for (int i = 0; i + 1 < m; ++i) {
        if (std::abs(J(i, i + 1) - 1.0) <= 1e-12) {
            ++blk;
            defective = true;
        } else {
            spec.jordan_blocks.push_back(blk);
            blk = 1;
        }
    }
    spec.jordan_blocks.push_back(blk);
    spec.diagonalizable = !defective;
    (void)tol;
    return spec;
}

double compute_gamma(const LaplacianBundle& laplacian, const CouplingSpec& coupling,
                     const Tolerances& tol) {
    if (laplacian.zero_multiplicity != 1) {
        throw std::domain_error("compute_gamma: network disconnected (zero multiplicity " +
                                std::to_string(laplacian.zero_multiplicity) + ")");
    }
    const Spectrum& lam = laplacian.spectrum;
    if (lam.size() < 2) throw std::domain_error("compute_gamma: need at least two nodes");

    std::size_t excluded = 0;
    for (std::size_t i = 1; i < lam.size(); ++i) {
        if (std::abs(lam[i]) < std::abs(lam[excluded])) excluded = i;
    }
    double scale = std::max(operator_norm(laplacian.L, NormKind::Inf), 1.0);
    if (std::abs(lam[excluded]) >= tol.zero_eig_rel * scale) {
        throw NumericalError("compute_gamma: smallest-modulus eigenvalue " +
                             std::to_string(std::abs(lam[excluded])) +
                             " is not numerically zero");
    }

    double gamma = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < lam.size(); ++i) {
        if (i == excluded) continue;
        for (const auto& beta : coupling.beta_spectrum) {
            gamma = std::min(gamma, (lam[i] * beta).real());
        }
    }
    return gamma;
}

RhoBoundBreakdown rho_bound_detailed(double varrho, const CouplingSpec& coupling,
                                     double jordan_eps_ratio, const Tolerances& tol) {
    if (!(varrho > 0.0)) throw std::invalid_argument("rho_bound: varrho must be > 0");

    RhoBoundBreakdown out;
    out.c_factor = 1.0;  // inf-norm row-sum accounting

    if (is_symmetric(coupling.Gamma, tol)) {
        out.kappa_Q = 1.0;  // orthogonal eigenbasis
        out.value = out.c_factor * varrho;
        return out;
    }
    if (coupling.diagonalizable) {
        out.kappa_Q = condition_number(coupling.Q, NormKind::Two, tol);
        out.value = out.c_factor * varrho * out.kappa_Q;
        return out;
    }

    // defective coupling, known Jordan blocks
    if (!(jordan_eps_ratio > 0.0 && jordan_eps_ratio < 1.0)) {
        throw std::invalid_argument("rho_bound: jordan_eps_ratio must lie in (0,1)");
    }
    if (coupling.beta_min <= 0.0) {
        throw std::domain_error(
            "rho_bound: defective coupling with beta_min <= 0; perturbed eigenvalues would "
            "cross zero");
    }
    double eps = jordan_eps_ratio * coupling.beta_min;
    out.jordan_eps = eps;
    out.kappa_Q = condition_number(coupling.Q, NormKind::Inf, tol);
    double kappa_P = 1.0;
    for (int mb : coupling.jordan_blocks) {
        if (mb < 2) continue;
        auto basis = jordan_perturbation_basis(mb, Complex(coupling.beta_min, 0.0), eps);
        double k = operator_norm(basis.R, NormKind::Inf) * operator_norm(basis.Rinv, NormKind::Inf);
        kappa_P = std::max(kappa_P, k);
    }
    out.kappa_P = kappa_P;
    out.value = out.c_factor * varrho * out.kappa_Q * out.kappa_P;
    return out;
}

double rho_bound(double varrho, const CouplingSpec& coupling, double jordan_eps_ratio,
                 const Tolerances& tol) {
    return rho_bound_detailed(varrho, coupling, jordan_eps_ratio, tol).value;
}

SyncAnalysis make_sync_analysis(const LaplacianBundle& laplacian, const CouplingSpec& coupling,
                                double varrho, double jordan_eps_ratio, double K,
                                const Tolerances& tol) {
    SyncAnalysis a;
    a.varrho = varrho;
    a.K = K;
    a.gamma = compute_gamma(laplacian, coupling, tol);
    a.rho_breakdown = rho_bound_detailed(varrho, coupling, jordan_eps_ratio, tol);
    a.rho_bound = a.rho_breakdown.value;
    a.a3_satisfied = a.gamma > 0.0;
    if (a.a3_satisfied) a.alpha_threshold = a.rho_bound / a.gamma;

    Eigen::EigenSolver<RealMatrix> solver(laplacian.L);
    if (solver.info() == Eigen::Success) {
        try {
            a.kappa_P_inf = condition_number(ComplexMatrix(solver.eigenvectors()), NormKind::Inf,
                                             tol);
        } catch (const SingularMatrixError&) {
            a.kappa_P_inf = std::numeric_limits<double>::infinity();
        }
    }
    try {
        a.kappa_Q_two = condition_number(coupling.Q, NormKind::Two, tol);
    } catch (const SingularMatrixError&) {
        a.kappa_Q_two = std::numeric_limits<double>::infinity();
    }
    a.C_estimate = std::max(1.0, K * a.kappa_P_inf * a.kappa_Q_two);
    return a;
}

double diagonal_dominance_margin(const std::vector<ComplexMatrix>& A_samples, double alpha,
                                 Complex lambda_i, const std::vector<Complex>& B_diag) {
    if (A_samples.empty()) {
        throw std::domain_error("diagonal_dominance_margin: no samples");
    }
    const int m = static_cast<int>(B_diag.size());
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& A : A_samples) {
        if (A.rows() != m || A.cols() != m) {
            throw DimensionError("diagonal_dominance_margin: sample size mismatch");
        }
        for (int k = 0; k < m; ++k) {
            double row = (A(k, k) - alpha * lambda_i * B_diag[k]).real();
            for (int j = 0; j < m; ++j) {
                if (j != k) row += std::abs(A(k, j));
            }
            worst = std::max(worst, row);
        }
    }
    return -worst;
}

double roughness_adjust(double mu, double K, double delta_pert) {
    if (!(std::isfinite(mu) && std::isfinite(K) && std::isfinite(delta_pert))) {
        throw std::invalid_argument("roughness_adjust: non-finite input");
    }
    return mu - delta_pert * K;
}

PersistenceBound persistence_bound(double C, double eps0, double alpha, double gamma, double rho) {
    if (eps0 < 0.0) throw std::invalid_argument("persistence_bound: eps0 must be >= 0");
    double margin = alpha * gamma - rho;
    if (!(margin > 0.0)) {
        throw std::domain_error("persistence_bound: alpha*gamma <= rho, no certificate");
    }
    PersistenceBound b;
    b.eps0 = eps0;
    b.K_corollary = C;
    b.asymptotic_error = C * eps0 / margin;
    return b;
}

double delta_estimate(double alpha, double gamma, double rho, double sigma, double C,
                      double pi_n_norm) {
    if (!(sigma > 0.0) || !(C > 0.0) || !(pi_n_norm > 0.0)) {
        throw std::invalid_argument("delta_estimate: sigma, C, pi_n_norm must be > 0");
    }
    double margin = alpha * gamma - rho;
    if (!(margin > 0.0)) throw std::domain_error("delta_estimate: alpha*gamma <= rho");
    return margin / (4.0 * sigma * C * pi_n_norm);
}

}  // namespace syncnet
