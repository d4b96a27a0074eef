#include "turnpike/hjb.hpp"

#include <cmath>

#include "turnpike/errors.hpp"

namespace turnpike {

HjbPayoff HjbPayoff::linear_(Eigen::VectorXd q) {
    HjbPayoff p;
    p.kind = TerminalKind::linear;
    p.linear = std::move(q);
    return p;
}

HjbPayoff HjbPayoff::quadratic_(Eigen::MatrixXd M, Eigen::VectorXd c) {
    HjbPayoff p;
    p.kind = TerminalKind::quadratic;
    p.M = std::move(M);
    p.center = std::move(c);
    return p;
}

TerminalCondition HjbPayoff::to_terminal() const {
    switch (kind) {
        case TerminalKind::none:
            return TerminalCondition::none_();
        case TerminalKind::linear:
            // p(T) = -grad phi = -linear
            return TerminalCondition::linear(-linear);
        case TerminalKind::quadratic:
            return TerminalCondition::quadratic(M, center);
    }
    return TerminalCondition::none_();
}

namespace {

double payoff_of(const HjbPayoff& phi, const Eigen::VectorXd& x) {
    switch (phi.kind) {
        case TerminalKind::none:
            return 0.0;
        case TerminalKind::linear:
            return phi.linear.dot(x);
        case TerminalKind::quadratic: {
            Eigen::VectorXd e = x - phi.center;
            return 0.5 * e.dot(phi.M * e);
        }
    }
    return 0.0;
}

}  // namespace

double value(const LtiSystem& sys, const QuadraticCost& cost_base, const HjbPayoff& phi,
             const Eigen::VectorXd& x, double T, int nt) {
    QuadraticCost cost = cost_base;
    cost.terminal = phi.to_terminal();
    OcpProblem ocp{sys, cost, x, T, nt};
    Trajectory traj = solve_finite_horizon(ocp);
    // solve_finite_horizon already accounts for the pay-off consistent with
    // the terminal condition; for the linear tag its value is -<pT, y> =
    // <linear, y>, which equals phi. Nothing to adjust.
    return traj.objective;
}

double steady_value(const LtiSystem& sys, const QuadraticCost& cost_base) {
    return solve_steady(sys, cost_base).value;
}

QuadraticValue infinite_value(const LtiSystem& sys, const QuadraticCost& cost_base) {
    if (!hautus_stabilizable(sys)) throw NotStabilizable("(A,B) fails the Hautus test");
    LtiSystem sys_are = sys;
    RiccatiSolution are = solve_are(sys_are);
    QuadraticValue V;
    V.P = -are.E_minus;  // standard stabilizing solution
    // linear coefficient: (alpha^{-1} P B B^T - A^T) q = -C^T y_d
    const Eigen::MatrixXd S = (sys.B * sys.B.transpose()) / cost_base.alpha;
    Eigen::MatrixXd Mq = V.P * S - sys.A.transpose();
    V.q = Mq.partialPivLu().solve(-sys.C.transpose() * cost_base.y_d);
    SteadyOptimum st = solve_steady(sys, cost_base);
    V.r = -(0.5 * st.y_bar.dot(V.P * st.y_bar) + V.q.dot(st.y_bar));
    return V;
}

double lambda_infinity(const LtiSystem& sys, const QuadraticCost& cost_base,
                       const HjbPayoff& phi, double lambda, double* uncertainty,
                       int nt_per_unit) {
    SteadyOptimum st = solve_steady(sys, cost_base);
    const double Vs = st.value;
    double a[3];
    const double Ts[3] = {20.0 / lambda, 30.0 / lambda, 40.0 / lambda};
    for (int i = 0; i < 3; ++i) {
        const int nt = std::max(100, static_cast<int>(std::ceil(nt_per_unit * Ts[i])));
        a[i] = value(sys, cost_base, phi, st.y_bar, Ts[i], nt) - Vs * Ts[i];
    }
    // Aitken extrapolation of the geometric tail
    const double d1 = a[1] - a[0];
    const double d2 = a[2] - a[1];
    double lim = a[2];
    if (std::abs(d1 - d2) > 1e-300) lim = a[2] - d2 * d2 / (d1 - d2);
    const double spread = std::abs(lim - a[2]) + std::abs(d2);
    if (uncertainty) *uncertainty = spread;
    if (spread > 1e-4 * (1.0 + std::abs(lim)))
        throw NotConverged("lambda_infty extrapolation spread " + std::to_string(spread));
    return lim;
}

HjbDecomposition decompose(const LtiSystem& sys, const QuadraticCost& cost_base,
                           const HjbPayoff& phi, const std::vector<double>& horizons,
                           const std::vector<Eigen::VectorXd>& points, double lambda,
                           int nt_per_unit) {
    HjbDecomposition dec;
    dec.V_s = steady_value(sys, cost_base);
    dec.V_infty = infinite_value(sys, cost_base);
    dec.lambda_infty =
        lambda_infinity(sys, cost_base, phi, lambda, &dec.lambda_uncertainty, nt_per_unit);

    const Eigen::Index d = sys.dim();
    dec.convergence_table.resize(
        static_cast<Eigen::Index>(horizons.size() * points.size()), d + 3);
    Eigen::Index row = 0;
    for (double T : horizons) {
        const int nt = std::max(100, static_cast<int>(std::ceil(nt_per_unit * T)));
        for (const auto& x : points) {
            const double V = value(sys, cost_base, phi, x, T, nt);
            const double defect =
                std::abs(V - dec.V_infty(x) - dec.V_s * T - dec.lambda_infty);
            dec.convergence_table(row, 0) = T;
            dec.convergence_table.block(row, 1, 1, d) = x.transpose();
            dec.convergence_table(row, d + 1) = V;
            dec.convergence_table(row, d + 2) = defect;
            ++row;
        }
    }
    return dec;
}

}  // namespace turnpike
