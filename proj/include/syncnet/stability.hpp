#pragma once

#include <optional>
#include <vector>

#include "syncnet/linalg.hpp"
#include "syncnet/network.hpp"

namespace syncnet {

/// Linearised coupling Gamma = Dh(0) together with its spectrum and, when
/// known, the similarity transform used in the contraction estimates.
struct CouplingSpec {
    RealMatrix Gamma;
    Spectrum beta_spectrum;
    double beta_min = 0.0;  ///< min_j Re(beta_j)
    bool diagonalizable = true;
    ComplexMatrix Q;  ///< eigenvector / similarity matrix (identity for symmetric)
    std::vector<int> jordan_blocks;  ///< block sizes when built from a Jordan form
};

/// Coupling spec from a plain matrix. Requires Gamma to be numerically
/// diagonalisable; defective couplings must supply their Jordan form instead.
CouplingSpec make_coupling(const RealMatrix& Gamma,
                           const Tolerances& tol = default_tolerances());

/// Coupling spec from Gamma = Q J Q^-1 with J in Jordan canonical form.
CouplingSpec coupling_from_jordan(const ComplexMatrix& Q, const ComplexMatrix& J,
                                  const Tolerances& tol = default_tolerances());

/// gamma = min over nonzero Laplacian eigenvalues lambda_i and all coupling
/// eigenvalues beta_j of Re(lambda_i beta_j). Exactly one eigenvalue (the one
/// of smallest modulus) is excluded and must itself be numerically zero.
double compute_gamma(const LaplacianBundle& laplacian, const CouplingSpec& coupling,
                     const Tolerances& tol = default_tolerances());

/// Breakdown of the analytic rho estimate; the constants the estimates depend
/// on are reported rather than folded in silently.
struct RhoBoundBreakdown {
    double value = 0.0;
    double c_factor = 1.0;  ///< norm-equivalence row-sum factor (1 in inf-norm accounting)
    double kappa_Q = 1.0;
    double kappa_P = 1.0;  ///< Jordan-basis condition number (defective branch only)
    double jordan_eps = 0.0;
};

/// Conservative bound on rho(f, Gamma) from the Jacobian bound varrho:
///  - symmetric Gamma:       c * varrho (independent of the spectrum)
///  - diagonalisable Gamma:  c * varrho * kappa_2(Q)
///  - defective Gamma:       c * varrho * kappa(Q) * kappa(R) with R the
///    perturbed-Jordan eigenbasis at eps = jordan_eps_ratio * beta_min,
///    which scales like beta^-(m-1).
RhoBoundBreakdown rho_bound_detailed(double varrho, const CouplingSpec& coupling,
                                     double jordan_eps_ratio = 0.5,
                                     const Tolerances& tol = default_tolerances());
double rho_bound(double varrho, const CouplingSpec& coupling, double jordan_eps_ratio = 0.5,
                 const Tolerances& tol = default_tolerances());

struct SyncAnalysis {
    double gamma = 0.0;
    double rho_bound = 0.0;
    double varrho = 0.0;
    std::optional<double> alpha_threshold;  ///< rho/gamma when gamma > 0
    double C_estimate = 1.0;                ///< K * kappa_inf(P) * kappa_2(Q)
    bool a3_satisfied = false;
    double kappa_P_inf = 1.0;
    double kappa_Q_two = 1.0;
    double K = 1.0;
    RhoBoundBreakdown rho_breakdown;

    double rate_at(double alpha) const { return alpha * gamma - rho_bound; }
};

SyncAnalysis make_sync_analysis(const LaplacianBundle& laplacian, const CouplingSpec& coupling,
                                double varrho, double jordan_eps_ratio = 0.5, double K = 1.0,
                                const Tolerances& tol = default_tolerances());

/// Diagonal-dominance margin over sampled conjugated matrices: the largest mu
/// with Re(A_kk - alpha lambda_i beta_k) + sum_{j != k} |A_kj| <= -mu for every
/// sample and row. mu > 0 certifies uniform exponential stability at rate mu.
double diagonal_dominance_margin(const std::vector<ComplexMatrix>& A_samples, double alpha,
                                 Complex lambda_i, const std::vector<Complex>& B_diag);

/// Roughness-degraded rate mu_hat = mu - delta * K.
double roughness_adjust(double mu, double K, double delta_pert);

struct PersistenceBound {
    double eps0 = 0.0;
    double asymptotic_error = 0.0;  ///< C eps0 / (alpha gamma - rho)
    double K_corollary = 1.0;
};

PersistenceBound persistence_bound(double C, double eps0, double alpha, double gamma, double rho);

/// Initial-ball radius estimate delta = (alpha gamma - rho)/(4 sigma C |pi_N|)
/// for linear couplings, with |pi_N| estimated by kappa_inf(P).
double delta_estimate(double alpha, double gamma, double rho, double sigma, double C,
                      double pi_n_norm);

}  // namespace syncnet
