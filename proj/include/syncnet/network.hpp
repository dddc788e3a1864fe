#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "syncnet/linalg.hpp"

namespace syncnet {

/// Interaction weights W_ij = strength of the influence of node j on node i.
/// Self-coupling vanishes, so the diagonal is identically zero.
struct WeightMatrix {
    int n = 0;
    RealMatrix W;
};

/// Validating constructor: square, finite, zero diagonal.
WeightMatrix make_weight_matrix(const RealMatrix& W);

struct LaplacianBundle {
    RealMatrix L;                     ///< L = V - W
    std::vector<double> intensities;  ///< V_i = sum_j W_ij
    Spectrum spectrum;
    int zero_multiplicity = 0;
};

/// L_ij = delta_ij V_i - W_ij with V_i accumulated left to right, so the exact
/// off-diagonal row sum cancels the diagonal bit for bit.
LaplacianBundle build_laplacian(const WeightMatrix& W,
                                const Tolerances& tol = default_tolerances());

/// Number of weakly connected components of the support graph
/// (edge between i and j iff |W_ij| + |W_ji| > 0), by graph search.
int connectivity(const WeightMatrix& W);

struct SpectralGapResult {
    double value = 0.0;
    bool disconnected = false;
};

/// lambda_2 of a symmetric connected Laplacian. Asymmetric input raises a
/// domain error; a disconnected network yields {0, disconnected=true}.
SpectralGapResult spectral_gap(const LaplacianBundle& bundle,
                               const Tolerances& tol = default_tolerances());

struct DiagonalizableApproximation {
    RealMatrix Ltilde;
    ComplexMatrix P;             ///< eigenvector matrix of Ltilde
    ComplexMatrix Lambda_tilde;  ///< diagonal
    double eps = 0.0;
    double conjugated_error = 0.0;  ///< ||P^-1 (Ltilde - L) P||_inf, computed explicitly
};

/// Jordan factorisation L = O J O^-1 supplied by the caller, J in canonical
/// form with the 1x1 zero block first. Numerical Jordan decomposition is
/// deliberately refused (the block structure is discontinuous in the entries).
struct JordanForm {
    ComplexMatrix O;
    ComplexMatrix J;
};

/// Diagonalisable approximation of the Laplacian: exact when the spectrum is
/// simple or L symmetric; otherwise Ltilde = O (J + E) O^-1 with
/// E = diag(0, eps, 2 eps, ...), which keeps the ones vector in the kernel and
/// makes zero a simple eigenvalue.
DiagonalizableApproximation approx_diagonalizable(
    const LaplacianBundle& bundle, const std::optional<JordanForm>& jordan_form,
    double eps, const Tolerances& tol = default_tolerances());

// Built-in test fixtures.
WeightMatrix ring_weights(int n, double w = 1.0);
WeightMatrix complete_weights(int n, double w = 1.0);
WeightMatrix path_weights(int n, double w = 1.0);
/// The directed three-node network used by the A3 counterexample
/// (W_12 = 2, W_13 = 1, W_23 = 2, W_31 = 1).
WeightMatrix counterexample_weights();

}  // namespace syncnet
