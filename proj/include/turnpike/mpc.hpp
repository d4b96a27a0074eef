#pragma once

#include <Eigen/Dense>

#include "turnpike/lq.hpp"

namespace turnpike {

enum class GridKind { uniform, adapted };

struct MpcConfig {
    double T = 1.0;    // prediction horizon
    double tau = 0.1;  // implementation window, 0 < tau < T
    int K = 1;         // loop iterations
    GridKind grid = GridKind::uniform;
    int nt = 8;        // prediction-grid nodes per horizon
    double lambda = 0.0;   // decay rate for the adapted grid
    bool two_sided = true; // weight e^{-lt} + e^{-l(T-t)} vs e^{-lt} only
    int fine_factor = 10;  // fine reference resolution multiplier
};

/// Turnpike-adapted grid: nodes t_j with equal panel integrals of the weight
/// e^{-lambda t} + e^{-lambda (T-t)} (or its one-sided variant), found by
/// monotone bisection on the exact antiderivative. lambda <= 1e-12 yields the
/// uniform grid exactly.
Eigen::VectorXd adapted_grid(double lambda, double T, int nt, bool two_sided = true);

struct MpcResult {
    Eigen::VectorXd t;              // fine closed-loop grid over [0, K tau]
    Eigen::MatrixXd y;              // closed-loop states on the fine grid
    Eigen::MatrixXd u;              // applied control on the fine grid
    double closed_loop_cost = 0.0;  // true running cost accumulated on the fine grid
    Eigen::VectorXd per_step_cost;  // cost per MPC step
};

/// Receding-horizon loop: at step k solve the finite-horizon OCP from the
/// current state on the configured prediction grid (direct sparse solve of
/// the optimality system), apply the control on [k tau, (k+1) tau] to the
/// plant integrated on a fine reference grid, accumulate the true cost.
MpcResult run_mpc(const LtiSystem& sys, const QuadraticCost& cost,
                  const Eigen::VectorXd& y0, const MpcConfig& config);

/// Finite-horizon LQ solve on an arbitrary strictly increasing grid
/// (implicit-midpoint optimality system assembled sparsely).
Trajectory solve_on_grid(const LtiSystem& sys, const QuadraticCost& cost,
                         const Eigen::VectorXd& y0, const Eigen::VectorXd& grid);

}  // namespace turnpike
