#include "turnpike/mpc.hpp"

#include <Eigen/Sparse>
#include <cmath>

#include "turnpike/errors.hpp"

namespace turnpike {

Eigen::VectorXd adapted_grid(double lambda, double T, int nt, bool two_sided) {
    if (lambda < 0.0 || nt < 2 || T <= 0.0) throw OutOfRange("invalid grid parameters");
    if (lambda <= 1e-12) return Eigen::VectorXd::LinSpaced(nt, 0.0, T);

    // exact antiderivative of the weight
    auto F = [&](double t) {
        double v = (1.0 - std::exp(-lambda * t)) / lambda;
        if (two_sided) v += (std::exp(-lambda * (T - t)) - std::exp(-lambda * T)) / lambda;
        return v;
    };
    const double total = F(T);
    Eigen::VectorXd grid(nt);
    grid(0) = 0.0;
    grid(nt - 1) = T;
    for (int j = 1; j + 1 < nt; ++j) {
        const double target = total * j / (nt - 1);
        double lo = 0.0, hi = T;
        while (hi - lo > 1e-12 * T) {
            const double mid = 0.5 * (lo + hi);
            (F(mid) < target ? lo : hi) = mid;
        }
        grid(j) = 0.5 * (lo + hi);
    }
    return grid;
}

Trajectory solve_on_grid(const LtiSystem& sys, const QuadraticCost& cost,
                         const Eigen::VectorXd& y0, const Eigen::VectorXd& grid) {
    const Eigen::Index d = sys.dim();
    const int nt = static_cast<int>(grid.size()) - 1;
    if (nt < 1) throw OutOfRange("grid needs at least two nodes");
    for (int k = 0; k < nt; ++k)
        if (grid(k + 1) <= grid(k)) throw OutOfRange("grid must increase strictly");

    const Eigen::MatrixXd Q = sys.C.transpose() * sys.C;
    const Eigen::VectorXd q = sys.C.transpose() * cost.y_d;
    const Eigen::VectorXd u_ref =
        cost.u_d ? *cost.u_d : Eigen::VectorXd::Zero(sys.inputs());
    const Eigen::MatrixXd S = (sys.B * sys.B.transpose()) / cost.alpha;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);

    const Eigen::Index n = 2 * (nt + 1) * d;
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    auto yi = [&](int k) { return static_cast<Eigen::Index>(k) * d; };
    auto pi = [&](int k) { return static_cast<Eigen::Index>(nt + 1 + k) * d; };
    auto add = [&](Eigen::Index r0, Eigen::Index c0, const Eigen::MatrixXd& M, double s) {
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j)
                if (M(i, j) != 0.0) trip.emplace_back(r0 + i, c0 + j, s * M(i, j));
    };

    Eigen::Index row = 0;
    add(row, yi(0), I, 1.0);
    rhs.segment(row, d) = y0;
    row += d;
    for (int k = 0; k < nt; ++k) {
        const double h = grid(k + 1) - grid(k);
        add(row, yi(k + 1), I - 0.5 * h * sys.A, 1.0);
        add(row, yi(k), -I - 0.5 * h * sys.A, 1.0);
        add(row, pi(k), S, -0.5 * h);
        add(row, pi(k + 1), S, -0.5 * h);
        rhs.segment(row, d) = h * sys.B * u_ref;
        row += d;
        add(row, pi(k + 1), I + 0.5 * h * sys.A.transpose(), 1.0);
        add(row, pi(k), -I + 0.5 * h * sys.A.transpose(), 1.0);
        add(row, yi(k), Q, -0.5 * h);
        add(row, yi(k + 1), Q, -0.5 * h);
        rhs.segment(row, d) = -h * q;
        row += d;
    }
    // terminal (no payoff in the MPC horizon problems): p_nt = 0
    add(row, pi(nt), I, 1.0);
    row += d;

    Eigen::SparseMatrix<double> K(n, n);
    K.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(K);
    if (lu.info() != Eigen::Success) throw SingularKkt("grid KKT factorization failed");
    Eigen::VectorXd z = lu.solve(rhs);

    Trajectory traj;
    traj.t = grid;
    traj.y.resize(nt + 1, d);
    traj.p.resize(nt + 1, d);
    traj.u.resize(nt + 1, sys.inputs());
    for (int k = 0; k <= nt; ++k) {
        traj.y.row(k) = z.segment(yi(k), d).transpose();
        traj.p.row(k) = z.segment(pi(k), d).transpose();
        traj.u.row(k) =
            (u_ref + sys.B.transpose() * z.segment(pi(k), d) / cost.alpha).transpose();
    }
    double J = 0.0;
    for (int k = 0; k < nt; ++k) {
        const double h = grid(k + 1) - grid(k);
        auto rc = [&](int j) {
            return 0.5 * (sys.C * traj.y.row(j).transpose() - cost.y_d).squaredNorm() +
                   0.5 * cost.alpha *
                       (traj.u.row(j).transpose() - u_ref).squaredNorm();
        };
        J += 0.5 * h * (rc(k) + rc(k + 1));
    }
    traj.objective = J;
    return traj;
}

namespace {

// linear interpolation of a sampled control path
Eigen::VectorXd interp_control(const Eigen::VectorXd& grid, const Eigen::MatrixXd& u,
                               double t) {
    const int n = static_cast<int>(grid.size());
    if (t <= grid(0)) return u.row(0).transpose();
    if (t >= grid(n - 1)) return u.row(n - 1).transpose();
    int k = 0;
    while (k + 2 < n && t >= grid(k + 1)) ++k;
    const double w = (t - grid(k)) / (grid(k + 1) - grid(k));
    return ((1.0 - w) * u.row(k) + w * u.row(k + 1)).transpose();
}

}  // namespace

MpcResult run_mpc(const LtiSystem& sys, const QuadraticCost& cost,
                  const Eigen::VectorXd& y0, const MpcConfig& config) {
    if (!(config.tau > 0.0 && config.tau < config.T) || config.K < 1 || config.nt < 2)
        throw OutOfRange("invalid MPC configuration");
    const Eigen::Index d = sys.dim();
    const Eigen::VectorXd u_ref =
        cost.u_d ? *cost.u_d : Eigen::VectorXd::Zero(sys.inputs());

    const Eigen::VectorXd pred_grid =
        config.grid == GridKind::adapted
            ? adapted_grid(config.lambda, config.T, config.nt, config.two_sided)
            : Eigen::VectorXd::LinSpaced(config.nt, 0.0, config.T);

    // fine reference grid per step: 10x the prediction-grid density over tau
    const int fine_per_step = std::max(
        2, static_cast<int>(std::ceil(config.fine_factor * config.nt * config.tau / config.T)));
    const double hf = config.tau / fine_per_step;

    Eigen::MatrixXd E = Eigen::MatrixXd::Identity(d, d) - 0.5 * hf * sys.A;
    Eigen::MatrixXd F = Eigen::MatrixXd::Identity(d, d) + 0.5 * hf * sys.A;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(E);

    MpcResult res;
    const int n_fine = config.K * fine_per_step;
    res.t.resize(n_fine + 1);
    res.y.resize(n_fine + 1, d);
    res.u.resize(n_fine + 1, sys.inputs());
    res.per_step_cost.resize(config.K);

    Eigen::VectorXd y = y0;
    res.t(0) = 0.0;
    res.y.row(0) = y.transpose();
    int idx = 0;
    auto rc = [&](const Eigen::VectorXd& yv, const Eigen::VectorXd& uv) {
        return 0.5 * (sys.C * yv - cost.y_d).squaredNorm() +
               0.5 * cost.alpha * (uv - u_ref).squaredNorm();
    };
    for (int k = 0; k < config.K; ++k) {
        Trajectory pred = solve_on_grid(sys, cost, y, pred_grid);
        double step_cost = 0.0;
        for (int j = 0; j < fine_per_step; ++j) {
            const double t_loc0 = j * hf;
            const double t_loc1 = (j + 1) * hf;
            Eigen::VectorXd u0 = interp_control(pred_grid, pred.u, t_loc0);
            Eigen::VectorXd u1 = interp_control(pred_grid, pred.u, t_loc1);
            if (j == 0) res.u.row(idx) = u0.transpose();
            const double c0 = rc(y, u0);
            y = lu.solve(F * y + hf * sys.B * (0.5 * (u0 + u1)));
            const double c1 = rc(y, u1);
            step_cost += 0.5 * hf * (c0 + c1);
            ++idx;
            res.t(idx) = k * config.tau + t_loc1;
            res.y.row(idx) = y.transpose();
            res.u.row(idx) = u1.transpose();
        }
        res.per_step_cost(k) = step_cost;
        res.closed_loop_cost += step_cost;
    }
    return res;
}

}  // namespace turnpike
