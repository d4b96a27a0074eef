#pragma once

#include <Eigen/Dense>
#include <optional>

#include "turnpike/model.hpp"

namespace turnpike {

// Sign convention used throughout this module (stated once):
// the adjoint p is the negative of the standard costate, so that the
// optimal control is u = u_d + alpha^{-1} B^T p and the optimality system is
//   dy/dt =  A y + B u,
//   dp/dt = -A^T p + C^T (C y - y_d),
// with terminal condition p(T) = 0 (no payoff), p(T) = pT (linear tag) or
// p(T) = -M (y(T) - c) (quadratic tag). The payoff consistent with the
// linear tag is phi(y) = -<pT, y>; with the quadratic tag it is
// phi(y) = 0.5 (y-c)^T M (y-c). Objectives reported by the solvers include
// the payoff term matching the configured terminal condition.

enum class TerminalKind { none, linear, quadratic };

struct TerminalCondition {
    TerminalKind kind = TerminalKind::none;
    Eigen::VectorXd pT;      // linear: adjoint terminal value
    Eigen::MatrixXd M;       // quadratic: payoff Hessian (symmetric PSD)
    Eigen::VectorXd center;  // quadratic: payoff center

    static TerminalCondition none_() { return {}; }
    static TerminalCondition linear(Eigen::VectorXd p);
    static TerminalCondition quadratic(Eigen::MatrixXd M, Eigen::VectorXd center);
};

struct QuadraticCost {
    Eigen::VectorXd y_d;                  // target in observation space (length s)
    std::optional<Eigen::VectorXd> u_d;   // optional control reference (length m)
    double alpha = 1.0;                   // control weight > 0
    TerminalCondition terminal;
};

struct OcpProblem {
    LtiSystem sys;
    QuadraticCost cost;
    Eigen::VectorXd y0;
    double T = 1.0;
    int nt = 2;
};

struct Trajectory {
    Eigen::VectorXd t;   // nt+1 nodes
    Eigen::MatrixXd y;   // (nt+1) x d
    Eigen::MatrixXd u;   // (nt+1) x m
    Eigen::MatrixXd p;   // (nt+1) x d
    double objective = 0.0;
};

struct SteadyOptimum {
    Eigen::VectorXd u_bar, y_bar, p_bar;
    double value = 0.0;  // V_s
};

/// Unique steady optimum from the KKT system
///   A ybar + B ubar = 0, A^T pbar = C^T (C ybar - y_d), ubar = u_d + alpha^{-1} B^T pbar.
SteadyOptimum solve_steady(const LtiSystem& sys, const QuadraticCost& cost);

/// Two-point optimality system solved by a backward Riccati sweep: the
/// implicit-midpoint (Cayley) one-step map of the coupled Hamiltonian flow
/// induces a Moebius recursion for P_k, r_k with p_k = -P_k y_k + r_k.
/// Objective uses trapezoidal quadrature plus the terminal payoff.
Trajectory solve_finite_horizon(const OcpProblem& ocp);

/// Cross-check mode: assembles the same implicit-midpoint optimality system
/// as one sparse linear system over all (y_k, p_k) and solves it directly.
Trajectory solve_finite_horizon_kkt(const OcpProblem& ocp);

/// Integrates the plant with implicit midpoint under a prescribed nodal
/// control path (interval controls = node averages) and evaluates the same
/// trapezoid-plus-payoff objective. Independent of the sweep solution path.
double simulate_objective(const OcpProblem& ocp, const Eigen::MatrixXd& u_nodes);
Trajectory simulate(const OcpProblem& ocp, const Eigen::MatrixXd& u_nodes);

struct ETResult {
    Eigen::VectorXd p0;      // -p_T(0) = E(T) y0
    double quad_form = 0.0;  // < -p_T(0), y0 >
};

/// E(T) y0 := -p_T(0) for the problem with y_d = 0 and no payoff.
ETResult compute_E_T(const LtiSystem& sys, const QuadraticCost& cost_zero_target,
                     double T, const Eigen::VectorXd& y0, int nt);

/// Assembles E(T) column by column with unit initial vectors (d <= 50).
Eigen::MatrixXd reconstruct_E_T(const LtiSystem& sys, double alpha, double T, int nt);

struct AffineFeedbackReport {
    Eigen::VectorXd t;
    Eigen::VectorXd h_norm;        // ||h(t)|| with h = (p - pbar) - E(T-t)(y - ybar)
    double h_terminal_error = 0.0; // || h(T) + pbar ||
    double c_fit = 0.0;            // fit h ~ c * exp(-rate (T-t))
    double rate_fit = 0.0;
    bool fit_valid = false;
    double max_h = 0.0;
};

/// Verifies the affine feedback correction term h(t) decays like
/// exp(-lambda (T-t)) scaled by ||pbar||. E(T-t) is taken from the exact
/// backward Riccati sweep of the same discretization.
AffineFeedbackReport verify_affine_feedback(const OcpProblem& ocp, const Trajectory& traj,
                                            const SteadyOptimum& steady,
                                            double lambda_hint);

}  // namespace turnpike
