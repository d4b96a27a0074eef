#pragma once

#include <Eigen/Dense>

#include "turnpike/lq.hpp"
#include "turnpike/riccati.hpp"

namespace turnpike {

/// Terminal pay-off phi added to the LQ functional; the adjoint terminal
/// condition it induces is p(T) = -grad phi(y(T)).
struct HjbPayoff {
    TerminalKind kind = TerminalKind::none;
    Eigen::VectorXd linear;   // phi(x) = <linear, x>
    Eigen::MatrixXd M;        // phi(x) = 0.5 (x-c)^T M (x-c)
    Eigen::VectorXd center;

    static HjbPayoff none_() { return {}; }
    static HjbPayoff linear_(Eigen::VectorXd q);
    static HjbPayoff quadratic_(Eigen::MatrixXd M, Eigen::VectorXd c);
    TerminalCondition to_terminal() const;
};

/// Quadratic-ansatz representation of the corrected infinite-horizon value
/// V_infty(x) = 0.5 x^T P x + q^T x + r, gauge-fixed by V_infty(ybar) = 0.
struct QuadraticValue {
    Eigen::MatrixXd P;
    Eigen::VectorXd q;
    double r = 0.0;
    double operator()(const Eigen::VectorXd& x) const {
        return 0.5 * x.dot(P * x) + q.dot(x) + r;
    }
};

struct HjbDecomposition {
    double V_s = 0.0;
    QuadraticValue V_infty;
    double lambda_infty = 0.0;
    double lambda_uncertainty = 0.0;
    Eigen::MatrixXd convergence_table;  // rows: (T, x..., V(T,x), defect)
};

/// V(T,x): optimal value of the finite-horizon problem from y0 = x,
/// including the terminal pay-off.
double value(const LtiSystem& sys, const QuadraticCost& cost_base, const HjbPayoff& phi,
             const Eigen::VectorXd& x, double T, int nt);

/// V_s: optimal steady cost (pay-off independent).
double steady_value(const LtiSystem& sys, const QuadraticCost& cost_base);

/// V_infty from the stationary Hamilton-Jacobi equation: P from the standard
/// stabilizing Riccati equation, affine part from a linear solve, constant
/// from the gauge V_infty(ybar) = 0.
QuadraticValue infinite_value(const LtiSystem& sys, const QuadraticCost& cost_base);

/// lambda_infty = lim V(T, ybar) - V_s T, estimated at T in {20,30,40}/lambda
/// with Aitken extrapolation; throws NotConverged when the spread exceeds
/// 1e-4 (1 + |lambda_infty|).
double lambda_infinity(const LtiSystem& sys, const QuadraticCost& cost_base,
                       const HjbPayoff& phi, double lambda, double* uncertainty = nullptr,
                       int nt_per_unit = 400);

/// Defect |V(T,x) - V_infty(x) - V_s T - lambda_infty| over a (T, x) table.
HjbDecomposition decompose(const LtiSystem& sys, const QuadraticCost& cost_base,
                           const HjbPayoff& phi, const std::vector<double>& horizons,
                           const std::vector<Eigen::VectorXd>& points, double lambda,
                           int nt_per_unit = 400);

}  // namespace turnpike
