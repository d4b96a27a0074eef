#include "turnpike/riccati.hpp"

#include <Eigen/Eigenvalues>
#include <complex>
#include <functional>

#include "turnpike/errors.hpp"

#ifdef TURNPIKE_HAVE_LAPACKE
#include <lapacke.h>
#endif

namespace turnpike {

Eigen::MatrixXd hamiltonian_matrix(const LtiSystem& sys) {
    const Eigen::Index d = sys.dim();
    Eigen::MatrixXd H(2 * d, 2 * d);
    H.topLeftCorner(d, d) = sys.A;
    H.topRightCorner(d, d) = sys.B * sys.B.transpose();
    H.bottomLeftCorner(d, d) = sys.C.transpose() * sys.C;
    H.bottomRightCorner(d, d) = -sys.A.transpose();
    return H;
}

Eigen::VectorXcd dense_spectrum(const Eigen::MatrixXd& M) {
#ifdef TURNPIKE_HAVE_LAPACKE
    const lapack_int n = static_cast<lapack_int>(M.rows());
    Eigen::MatrixXd work = M;  // column-major, overwritten
    Eigen::VectorXd wr(n), wi(n);
    lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, work.data(), n,
                                    wr.data(), wi.data(), nullptr, 1, nullptr, 1);
    if (info == 0) {
        Eigen::VectorXcd ev(n);
        for (lapack_int i = 0; i < n; ++i) ev(i) = {wr(i), wi(i)};
        return ev;
    }
#endif
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
    return es.eigenvalues();
}

SpectralDichotomy spectral_dichotomy(const LtiSystem& sys) {
    SpectralDichotomy out;
    out.spectrum = dense_spectrum(hamiltonian_matrix(sys));
    out.gap = out.spectrum.real().cwiseAbs().minCoeff();
    return out;
}

namespace {

// Reorders a complex Schur form so that the eigenvalues selected by `sel`
// come first, using unitary swaps of adjacent diagonal entries.
void order_complex_schur(Eigen::MatrixXcd& T, Eigen::MatrixXcd& Q,
                         const std::function<bool(std::complex<double>)>& sel) {
    const Eigen::Index n = T.rows();
    for (Eigen::Index target = 0; target < n; ++target) {
        Eigen::Index src = -1;
        for (Eigen::Index k = target; k < n; ++k) {
            if (sel(T(k, k))) { src = k; break; }
        }
        if (src < 0) break;
        for (Eigen::Index k = src; k > target; --k) {
            // swap diagonal entries k-1 and k
            const std::complex<double> t11 = T(k - 1, k - 1);
            const std::complex<double> t12 = T(k - 1, k);
            const std::complex<double> t22 = T(k, k);
            // Givens rotation annihilating the coupling so diagonals commute
            Eigen::JacobiRotation<std::complex<double>> rot;
            rot.makeGivens(t12, t22 - t11);
            T.applyOnTheRight(k - 1, k, rot);
            T.applyOnTheLeft(k - 1, k, rot.adjoint());
            Q.applyOnTheRight(k - 1, k, rot);
            T(k, k - 1) = 0.0;  // exact by construction, clear roundoff
        }
    }
}

Eigen::MatrixXd invariant_subspace_solution(const Eigen::MatrixXcd& T,
                                            const Eigen::MatrixXcd& Q,
                                            Eigen::Index d, double cond_limit) {
    Eigen::MatrixXcd U1 = Q.topLeftCorner(d, d);
    Eigen::MatrixXcd U2 = Q.bottomLeftCorner(d, d);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(U1);
    const double cond = svd.singularValues()(0) / svd.singularValues()(d - 1);
    if (!std::isfinite(cond) || cond > cond_limit)
        throw SubspaceIllConditioned("invariant-subspace basis has condition " +
                                     std::to_string(cond));
    Eigen::MatrixXcd Xc = U2 * U1.partialPivLu().inverse();
    Eigen::MatrixXd Xr = Xc.real();
    return 0.5 * (Xr + Xr.transpose());
}

double are_residual_norm(const Eigen::MatrixXd& X, const Eigen::MatrixXd& A,
                         const Eigen::MatrixXd& S, const Eigen::MatrixXd& Q) {
    return (X * A + A.transpose() * X + X * S * X - Q).norm();
}

// One Newton step for R(X) = XA + A^T X + XSX - Q: solve the Lyapunov
// equation  Acl^T D + D Acl = -R(X)  with Acl = A + S X.
Eigen::MatrixXd newton_refine(Eigen::MatrixXd X, const Eigen::MatrixXd& A,
                              const Eigen::MatrixXd& S, const Eigen::MatrixXd& Q,
                              int max_iter) {
    for (int it = 0; it < max_iter; ++it) {
        Eigen::MatrixXd R = X * A + A.transpose() * X + X * S * X - Q;
        if (R.norm() <= 1e-13 * (1.0 + X.norm())) break;
        Eigen::MatrixXd Acl = A + S * X;
        Eigen::MatrixXd D = solve_lyapunov(Acl, -R);
        if (!D.allFinite()) break;
        Eigen::MatrixXd Xn = X + D;
        Xn = 0.5 * (Xn + Xn.transpose());
        if (are_residual_norm(Xn, A, S, Q) >= are_residual_norm(X, A, S, Q)) break;
        X = Xn;
    }
    return X;
}

}  // namespace

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
    // A^T X + X A = Q via complex Schur of A: with A = U T U^*,
    // T^* Y + Y T = U^* Q U and back-substitution column by column.
    const Eigen::Index n = A.rows();
    Eigen::ComplexSchur<Eigen::MatrixXd> schur(A);
    const Eigen::MatrixXcd& T = schur.matrixT();
    const Eigen::MatrixXcd& U = schur.matrixU();
    Eigen::MatrixXcd Qp = U.adjoint() * Q.cast<std::complex<double>>() * U;
    Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::VectorXcd rhs = Qp.col(k);
        for (Eigen::Index j = 0; j < k; ++j) rhs -= Y.col(j) * T(j, k);
        // (T^* + T(k,k) I) y = rhs, lower triangular
        for (Eigen::Index i = 0; i < n; ++i) {
            std::complex<double> acc = rhs(i);
            for (Eigen::Index j = 0; j < i; ++j) acc -= std::conj(T(j, i)) * Y(j, k);
            Y(i, k) = acc / (std::conj(T(i, i)) + T(k, k));
        }
    }
    return (U * Y * U.adjoint()).real();
}

RiccatiSolution solve_are(const LtiSystem& sys) {
    if (!hautus_stabilizable(sys)) throw NotStabilizable("(A,B) fails the Hautus test");
    if (!hautus_detectable(sys)) throw NotDetectable("(C,A) fails the Hautus test");

    const Eigen::Index d = sys.dim();
    const Eigen::MatrixXd S = sys.B * sys.B.transpose();
    const Eigen::MatrixXd Q = sys.C.transpose() * sys.C;
    const Eigen::MatrixXd H = hamiltonian_matrix(sys);

    Eigen::ComplexSchur<Eigen::MatrixXd> schur(H);
    Eigen::MatrixXcd T = schur.matrixT();
    Eigen::MatrixXcd U = schur.matrixU();

    RiccatiSolution sol;
    {
        Eigen::MatrixXcd Ts = T, Us = U;
        order_complex_schur(Ts, Us, [](std::complex<double> l) { return l.real() < 0.0; });
        sol.E_minus = newton_refine(invariant_subspace_solution(Ts, Us, d, 1e12),
                                    sys.A, S, Q, 20);
        sol.hamiltonian_spectrum = Ts.diagonal();
    }
    {
        Eigen::MatrixXcd Ta = T, Ua = U;
        order_complex_schur(Ta, Ua, [](std::complex<double> l) { return l.real() > 0.0; });
        if (S.norm() == 0.0) {
            // B = 0 degenerates the ARE to a linear Lyapunov equation with a
            // unique solution; no antistabilizing branch exists.
            sol.E_plus = sol.E_minus;
        } else {
            sol.E_plus = newton_refine(invariant_subspace_solution(Ta, Ua, d, 1e12),
                                       sys.A, S, Q, 20);
        }
    }

    sol.residual_minus = are_residual_norm(sol.E_minus, sys.A, S, Q);
    sol.residual_plus = are_residual_norm(sol.E_plus, sys.A, S, Q);

    Eigen::EigenSolver<Eigen::MatrixXd> es(sys.A + S * sol.E_minus, false);
    sol.lambda = -es.eigenvalues().real().maxCoeff();
    return sol;
}

DiagonalizationReport verify_diagonalization(const RiccatiSolution& sol,
                                             const LtiSystem& sys) {
    const Eigen::Index d = sys.dim();
    const Eigen::MatrixXd S = sys.B * sys.B.transpose();
    Eigen::MatrixXd P(2 * d, 2 * d);
    P.topLeftCorner(d, d) = Eigen::MatrixXd::Identity(d, d);
    P.topRightCorner(d, d) = Eigen::MatrixXd::Identity(d, d);
    P.bottomLeftCorner(d, d) = sol.E_minus;
    P.bottomRightCorner(d, d) = sol.E_plus;

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(P);
    DiagonalizationReport rep;
    rep.cond_P = svd.singularValues()(0) / svd.singularValues()(2 * d - 1);
    if (!std::isfinite(rep.cond_P) || rep.cond_P > 1e12)
        throw SubspaceIllConditioned("P = [[I,I],[E-,E+]] is ill conditioned");

    const Eigen::MatrixXd H = hamiltonian_matrix(sys);
    Eigen::MatrixXd G = P.partialPivLu().solve(H * P);
    G.topLeftCorner(d, d) -= sys.A + S * sol.E_minus;
    G.bottomRightCorner(d, d) -= sys.A + S * sol.E_plus;
    rep.off_block_norm = G.norm();
    rep.h_norm = H.norm();
    rep.ok = rep.off_block_norm <= 1e-8 * rep.h_norm;
    return rep;
}

}  // namespace turnpike
