#include "turnpike/diagnostics.hpp"

#include <cmath>

#include "turnpike/errors.hpp"

namespace turnpike {

ErrorCurves error_curves(const Trajectory& traj, const SteadyOptimum& steady) {
    const int n = static_cast<int>(traj.t.size());
    if (traj.y.cols() != steady.y_bar.size() || traj.u.cols() != steady.u_bar.size())
        throw DimensionMismatch("trajectory and steady optimum disagree in shape");
    ErrorCurves ec;
    ec.err_y.resize(n);
    ec.err_u.resize(n);
    for (int k = 0; k < n; ++k) {
        ec.err_y(k) = (traj.y.row(k).transpose() - steady.y_bar).norm();
        ec.err_u(k) = (traj.u.row(k).transpose() - steady.u_bar).norm();
    }
    if (traj.p.rows() == n && traj.p.cols() == steady.p_bar.size()) {
        ec.err_p.resize(n);
        for (int k = 0; k < n; ++k)
            ec.err_p(k) = (traj.p.row(k).transpose() - steady.p_bar).norm();
    }
    return ec;
}

DecayFit fit_decay(const Eigen::VectorXd& curve, const Eigen::VectorXd& grid,
                   FitSide side, double window_lo, double window_hi) {
    if (curve.size() != grid.size()) throw DimensionMismatch("curve/grid size mismatch");
    const double T = grid(grid.size() - 1);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
        const double t = grid(k);
        if (t < window_lo || t > window_hi) continue;
        const double v = curve(k);
        if (v < 1e-14) continue;  // floor: solver noise excluded
        const double x = (side == FitSide::entry) ? t : (T - t);
        const double ly = std::log(v);
        sx += x;
        sy += ly;
        sxx += x * x;
        sxy += x * ly;
        ++cnt;
    }
    if (cnt < 2) throw WindowEmpty("fit window contains fewer than two usable samples");
    DecayFit fit;
    fit.points = cnt;
    const double det = sxx * cnt - sx * sx;
    if (std::abs(det) < 1e-300) throw WindowEmpty("fit window has no spread in t");
    const double slope = (sxy * cnt - sx * sy) / det;
    fit.lambda = -slope;
    fit.c = std::exp((sy - slope * sx) / cnt);
    // a curve with no decay over the window is flagged rather than fitted
    const double span = window_hi - window_lo;
    fit.flat = std::abs(fit.lambda) * span < 1e-8;
    return fit;
}

double integral_turnpike(const Trajectory& traj, const SteadyOptimum& steady) {
    const double T = traj.t(traj.t.size() - 1);
    return std::abs(traj.objective / T - steady.value);
}

Eigen::VectorXd measure_turnpike(const Trajectory& traj, const SteadyOptimum& steady,
                                 const Eigen::VectorXd& eps_grid) {
    for (Eigen::Index i = 1; i < eps_grid.size(); ++i)
        if (eps_grid(i) <= eps_grid(i - 1) || eps_grid(0) <= 0.0)
            throw OutOfRange("eps grid must be positive and increasing");
    ErrorCurves ec = error_curves(traj, steady);
    Eigen::VectorXd err = ec.err_y + ec.err_u;
    Eigen::VectorXd out(eps_grid.size());
    for (Eigen::Index i = 0; i < eps_grid.size(); ++i) {
        const double eps = eps_grid(i);
        double meas = 0.0;
        for (Eigen::Index k = 0; k + 1 < traj.t.size(); ++k) {
            const double h = traj.t(k + 1) - traj.t(k);
            const double frac =
                0.5 * ((err(k) > eps ? 1.0 : 0.0) + (err(k + 1) > eps ? 1.0 : 0.0));
            meas += h * frac;
        }
        out(i) = meas;
    }
    return out;
}

DissipationReport dissipation_check(const OcpProblem& ocp, const Trajectory& traj,
                                    const SteadyOptimum& steady,
                                    const Eigen::MatrixXd& storage_matrix) {
    const int n = static_cast<int>(traj.t.size());
    const Eigen::VectorXd u_ref =
        ocp.cost.u_d ? *ocp.cost.u_d : Eigen::VectorXd::Zero(ocp.sys.inputs());
    auto f0 = [&](const Eigen::VectorXd& y, const Eigen::VectorXd& u) {
        return 0.5 * (ocp.sys.C * y - ocp.cost.y_d).squaredNorm() +
               0.5 * ocp.cost.alpha * (u - u_ref).squaredNorm();
    };
    const double f0_bar = f0(steady.y_bar, steady.u_bar);
    auto storage = [&](const Eigen::VectorXd& y) {
        Eigen::VectorXd dy = y - steady.y_bar;
        return 0.5 * dy.dot(storage_matrix * dy) + steady.p_bar.dot(dy);
    };

    DissipationReport rep;
    rep.accumulated_supply.resize(n);
    rep.storage.resize(n);
    const double S0 = storage(traj.y.row(0).transpose());
    double acc = 0.0;
    double prev = f0(traj.y.row(0).transpose(), traj.u.row(0).transpose()) - f0_bar;
    rep.accumulated_supply(0) = 0.0;
    rep.storage(0) = 0.0;
    rep.max_violation = 0.0;
    for (int k = 1; k < n; ++k) {
        const double cur = f0(traj.y.row(k).transpose(), traj.u.row(k).transpose()) - f0_bar;
        acc += 0.5 * (traj.t(k) - traj.t(k - 1)) * (prev + cur);
        prev = cur;
        rep.accumulated_supply(k) = acc;
        rep.storage(k) = storage(traj.y.row(k).transpose()) - S0;
        rep.max_violation = std::max(rep.max_violation, rep.storage(k) - acc);
    }
    return rep;
}

TurnpikeReport diagnose(const OcpProblem& ocp, const Trajectory& traj,
                        const SteadyOptimum& steady, const Eigen::VectorXd& eps_grid) {
    TurnpikeReport rep;
    ErrorCurves ec = error_curves(traj, steady);
    rep.err_y = ec.err_y;
    rep.err_u = ec.err_u;
    rep.err_p = ec.err_p;
    const double T = ocp.T;
    rep.window_lo = 0.1 * T;
    rep.window_hi = 0.45 * T;
    rep.entry = fit_decay(ec.err_y, traj.t, FitSide::entry, 0.1 * T, 0.45 * T);
    rep.exit = fit_decay(ec.err_y, traj.t, FitSide::exit, 0.55 * T, 0.9 * T);
    rep.integral_residual = integral_turnpike(traj, steady);
    rep.eps_grid = eps_grid;
    if (eps_grid.size()) rep.measure_excess = measure_turnpike(traj, steady, eps_grid);
    return rep;
}

}  // namespace turnpike
