#pragma once

#include <Eigen/Dense>

#include "turnpike/lq.hpp"

namespace turnpike {

struct ErrorCurves {
    Eigen::VectorXd err_y, err_u, err_p;  // per-node deviation norms
};

ErrorCurves error_curves(const Trajectory& traj, const SteadyOptimum& steady);

enum class FitSide { entry, exit };

struct DecayFit {
    double c = 0.0;
    double lambda = 0.0;
    bool flat = false;
    int points = 0;
};

/// Least-squares fit of log(curve) against t (entry) or T-t (exit) over
/// [window_lo, window_hi]. Values below 1e-14 are excluded.
DecayFit fit_decay(const Eigen::VectorXd& curve, const Eigen::VectorXd& grid,
                   FitSide side, double window_lo, double window_hi);

/// | objective/T - steady value |.
double integral_turnpike(const Trajectory& traj, const SteadyOptimum& steady);

/// Lebesgue measure (trapezoid counting on the grid) of
/// { t : err_y(t) + err_u(t) > eps } for each eps in eps_grid.
Eigen::VectorXd measure_turnpike(const Trajectory& traj, const SteadyOptimum& steady,
                                 const Eigen::VectorXd& eps_grid);

struct DissipationReport {
    Eigen::VectorXd accumulated_supply;  // integral of f0 - f0(steady) up to each node
    Eigen::VectorXd storage;             // S(y(t)) - S(y(0))
    double max_violation = 0.0;          // max over tau of storage - supply
};

/// Checks S(y(tau)) - S(y(0)) <= int_0^tau (f0(y,u) - f0(ybar,ubar)) dt with
/// the candidate S(y) = 0.5 (y-ybar)^T M (y-ybar) + <pbar, y-ybar>. The
/// linear part ties the candidate to the steady adjoint; with pbar = 0 it is
/// the pure quadratic from the stabilizing Riccati solution.
DissipationReport dissipation_check(const OcpProblem& ocp, const Trajectory& traj,
                                    const SteadyOptimum& steady,
                                    const Eigen::MatrixXd& storage_matrix);

struct TurnpikeReport {
    Eigen::VectorXd err_y, err_u, err_p;
    DecayFit entry, exit;
    double integral_residual = 0.0;
    Eigen::VectorXd eps_grid;
    Eigen::VectorXd measure_excess;
    double window_lo = 0.0, window_hi = 0.0;  // entry window; exit is mirrored
};

/// Full diagnostic bundle with the default fit windows [0.1T, 0.45T] (entry)
/// and [0.55T, 0.9T] (exit).
TurnpikeReport diagnose(const OcpProblem& ocp, const Trajectory& traj,
                        const SteadyOptimum& steady, const Eigen::VectorXd& eps_grid);

}  // namespace turnpike
