#pragma once

#include <Eigen/Dense>

#include "turnpike/model.hpp"

namespace turnpike {

/// Solutions of X A + A^T X + X B B^T X - C^T C = 0 in the sign convention
/// where E_minus is negative definite and A + B B^T E_minus is Hurwitz.
/// (E_minus equals minus the standard stabilizing LQR solution.)
struct RiccatiSolution {
    Eigen::MatrixXd E_minus;
    Eigen::MatrixXd E_plus;
    Eigen::VectorXcd hamiltonian_spectrum;  // 2d entries
    double lambda = 0.0;                    // -max Re eig(A + BB^T E_minus)
    double residual_minus = 0.0;
    double residual_plus = 0.0;
};

/// [[A, BB^T], [C^T C, -A^T]].
Eigen::MatrixXd hamiltonian_matrix(const LtiSystem& sys);

RiccatiSolution solve_are(const LtiSystem& sys);

/// Checks P^{-1} H P = blockdiag(A + BB^T E_-, A + BB^T E_+) with
/// P = [[I, I], [E_-, E_+]].
struct DiagonalizationReport {
    double off_block_norm = 0.0;
    double h_norm = 0.0;
    double cond_P = 0.0;
    bool ok = false;
};
DiagonalizationReport verify_diagonalization(const RiccatiSolution& sol,
                                             const LtiSystem& sys);

struct SpectralDichotomy {
    Eigen::VectorXcd spectrum;
    double gap = 0.0;  // min |Re mu| over the Hamiltonian spectrum
};
SpectralDichotomy spectral_dichotomy(const LtiSystem& sys);

/// Eigenvalues of a dense real matrix (LAPACK dgeev when available).
Eigen::VectorXcd dense_spectrum(const Eigen::MatrixXd& M);

/// Lyapunov solve A^T X + X A = Q by Bartels-Stewart; A may be stable or
/// antistable (no eigenvalue pair may sum to zero).
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q);

}  // namespace turnpike
