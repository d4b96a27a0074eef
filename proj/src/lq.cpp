#include "turnpike/lq.hpp"

#include <Eigen/Sparse>
#include <cmath>
#include <vector>

#include "turnpike/errors.hpp"

namespace turnpike {

TerminalCondition TerminalCondition::linear(Eigen::VectorXd p) {
    TerminalCondition tc;
    tc.kind = TerminalKind::linear;
    tc.pT = std::move(p);
    return tc;
}

TerminalCondition TerminalCondition::quadratic(Eigen::MatrixXd M, Eigen::VectorXd center) {
    TerminalCondition tc;
    tc.kind = TerminalKind::quadratic;
    tc.M = std::move(M);
    tc.center = std::move(center);
    return tc;
}

namespace {

struct CostTerms {
    Eigen::MatrixXd Q;        // C^T C
    Eigen::VectorXd q;        // C^T y_d
    Eigen::VectorXd u_ref;    // u_d or zero
    double alpha;
    // terminal data: p(T) = rT - PT y(T)
    Eigen::MatrixXd PT;
    Eigen::VectorXd rT;
};

CostTerms cost_terms(const LtiSystem& sys, const QuadraticCost& cost) {
    if (cost.alpha <= 0.0) throw OutOfRange("alpha must be positive");
    if (cost.y_d.size() != sys.outputs())
        throw DimensionMismatch("y_d must live in the observation space");
    CostTerms ct;
    ct.Q = sys.C.transpose() * sys.C;
    ct.q = sys.C.transpose() * cost.y_d;
    ct.u_ref = cost.u_d ? *cost.u_d : Eigen::VectorXd::Zero(sys.inputs());
    if (ct.u_ref.size() != sys.inputs()) throw DimensionMismatch("u_d has wrong length");
    ct.alpha = cost.alpha;
    const Eigen::Index d = sys.dim();
    switch (cost.terminal.kind) {
        case TerminalKind::none:
            ct.PT = Eigen::MatrixXd::Zero(d, d);
            ct.rT = Eigen::VectorXd::Zero(d);
            break;
        case TerminalKind::linear:
            if (cost.terminal.pT.size() != d) throw DimensionMismatch("pT has wrong length");
            ct.PT = Eigen::MatrixXd::Zero(d, d);
            ct.rT = cost.terminal.pT;
            break;
        case TerminalKind::quadratic:
            if (cost.terminal.M.rows() != d || cost.terminal.center.size() != d)
                throw DimensionMismatch("quadratic terminal data has wrong shape");
            ct.PT = cost.terminal.M;
            ct.rT = cost.terminal.M * cost.terminal.center;
            break;
    }
    return ct;
}

double payoff_value(const QuadraticCost& cost, const Eigen::VectorXd& yT) {
    switch (cost.terminal.kind) {
        case TerminalKind::none:
            return 0.0;
        case TerminalKind::linear:
            return -cost.terminal.pT.dot(yT);
        case TerminalKind::quadratic: {
            Eigen::VectorXd e = yT - cost.terminal.center;
            return 0.5 * e.dot(cost.terminal.M * e);
        }
    }
    return 0.0;
}

double running_cost(const LtiSystem& sys, const QuadraticCost& cost,
                    const Eigen::VectorXd& y, const Eigen::VectorXd& u) {
    const Eigen::VectorXd u_ref =
        cost.u_d ? *cost.u_d : Eigen::VectorXd::Zero(sys.inputs());
    return 0.5 * (sys.C * y - cost.y_d).squaredNorm() +
           0.5 * cost.alpha * (u - u_ref).squaredNorm();
}

struct CayleyMap {
    Eigen::MatrixXd M11, M12, M21, M22;  // blocks of (I - h/2 Ham)^{-1}(I + h/2 Ham)
    Eigen::VectorXd g1, g2;              // affine part
};

CayleyMap cayley_map(const LtiSystem& sys, const CostTerms& ct, double h) {
    const Eigen::Index d = sys.dim();
    Eigen::MatrixXd Ham(2 * d, 2 * d);
    Ham.topLeftCorner(d, d) = sys.A;
    Ham.topRightCorner(d, d) = (sys.B * sys.B.transpose()) / ct.alpha;
    Ham.bottomLeftCorner(d, d) = ct.Q;
    Ham.bottomRightCorner(d, d) = -sys.A.transpose();

    Eigen::VectorXd b(2 * d);
    b.head(d) = sys.B * ct.u_ref;
    b.tail(d) = -ct.q;

    Eigen::MatrixXd Eminus = Eigen::MatrixXd::Identity(2 * d, 2 * d) - 0.5 * h * Ham;
    Eigen::MatrixXd Eplus = Eigen::MatrixXd::Identity(2 * d, 2 * d) + 0.5 * h * Ham;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eminus);
    Eigen::MatrixXd M = lu.solve(Eplus);
    Eigen::VectorXd g = lu.solve(h * b);
    if (!M.allFinite() || !g.allFinite())
        throw StepTooCoarse("Cayley step is singular; raise nt");

    CayleyMap cm;
    cm.M11 = M.topLeftCorner(d, d);
    cm.M12 = M.topRightCorner(d, d);
    cm.M21 = M.bottomLeftCorner(d, d);
    cm.M22 = M.bottomRightCorner(d, d);
    cm.g1 = g.head(d);
    cm.g2 = g.tail(d);
    return cm;
}

// Backward Moebius recursion for p_k = -P_k y_k + r_k under z_{k+1} = M z_k + g.
void riccati_step(const CayleyMap& cm, const Eigen::MatrixXd& P_next,
                  const Eigen::VectorXd& r_next, Eigen::MatrixXd& P,
                  Eigen::VectorXd& r) {
    Eigen::MatrixXd G = cm.M22 + P_next * cm.M12;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(G);
    P = lu.solve(cm.M21 + P_next * cm.M11);
    r = lu.solve(r_next - P_next * cm.g1 - cm.g2);
    if (!P.allFinite() || !r.allFinite())
        throw StepTooCoarse("Riccati sweep produced non-finite values; raise nt");
}

std::vector<double> trapezoid_weights(int nt, double h) {
    std::vector<double> w(nt + 1, h);
    w.front() = 0.5 * h;
    w.back() = 0.5 * h;
    return w;
}

}  // namespace

SteadyOptimum solve_steady(const LtiSystem& sys, const QuadraticCost& cost) {
    const Eigen::Index d = sys.dim();
    CostTerms ct = cost_terms(sys, cost);

    Eigen::MatrixXd K(2 * d, 2 * d);
    K.topLeftCorner(d, d) = ct.Q;
    K.topRightCorner(d, d) = -sys.A.transpose();
    K.bottomLeftCorner(d, d) = sys.A;
    K.bottomRightCorner(d, d) = (sys.B * sys.B.transpose()) / ct.alpha;

    Eigen::VectorXd rhs(2 * d);
    rhs.head(d) = ct.q;
    rhs.tail(d) = -sys.B * ct.u_ref;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (!lu.isInvertible()) throw SingularKkt("steady KKT matrix is singular");
    Eigen::VectorXd sol = lu.solve(rhs);

    SteadyOptimum out;
    out.y_bar = sol.head(d);
    out.p_bar = sol.tail(d);
    out.u_bar = ct.u_ref + sys.B.transpose() * out.p_bar / ct.alpha;
    out.value = running_cost(sys, cost, out.y_bar, out.u_bar);
    return out;
}

Trajectory solve_finite_horizon(const OcpProblem& ocp) {
    const LtiSystem& sys = ocp.sys;
    const Eigen::Index d = sys.dim();
    const Eigen::Index m = sys.inputs();
    if (ocp.nt < 2) throw OutOfRange("nt must be at least 2");
    if (ocp.T <= 0.0) throw OutOfRange("T must be positive");
    if (ocp.y0.size() != d) throw DimensionMismatch("y0 has wrong length");

    CostTerms ct = cost_terms(sys, ocp.cost);
    const int nt = ocp.nt;
    const double h = ocp.T / nt;
    CayleyMap cm = cayley_map(sys, ct, h);

    // Backward sweep. P_k is d x d per node; checkpoint when the full store
    // would be too large and recompute per chunk in the forward pass.
    const std::size_t full_doubles =
        static_cast<std::size_t>(nt + 1) * static_cast<std::size_t>(d) * d;
    const bool store_all = full_doubles <= 30'000'000;
    const int chunk = store_all ? nt : std::max(1, static_cast<int>(std::sqrt(double(nt))));

    std::vector<Eigen::VectorXd> r_all(nt + 1);
    std::vector<Eigen::MatrixXd> P_all;
    if (store_all) P_all.assign(nt + 1, Eigen::MatrixXd());
    std::vector<Eigen::MatrixXd> checkpoints(nt / chunk + 1);  // P at nodes j*chunk

    Eigen::MatrixXd P = ct.PT;
    Eigen::VectorXd r = ct.rT;
    r_all[nt] = r;
    if (store_all) P_all[nt] = P;
    if (nt % chunk == 0) checkpoints[nt / chunk] = P;
    for (int k = nt - 1; k >= 0; --k) {
        Eigen::MatrixXd Pk;
        Eigen::VectorXd rk;
        riccati_step(cm, P, r, Pk, rk);
        P = Pk;
        r = rk;
        r_all[k] = r;
        if (store_all) P_all[k] = P;
        if (k % chunk == 0) checkpoints[k / chunk] = P;
    }

    Trajectory traj;
    traj.t = Eigen::VectorXd::LinSpaced(nt + 1, 0.0, ocp.T);
    traj.y.resize(nt + 1, d);
    traj.u.resize(nt + 1, m);
    traj.p.resize(nt + 1, d);

    Eigen::VectorXd y = ocp.y0;
    std::vector<Eigen::MatrixXd> cache;
    int cache_base = -1;
    for (int k = 0; k <= nt; ++k) {
        if (!store_all) {
            const int cb = (k / chunk) * chunk;
            if (cb != cache_base) {
                // rebuild P over [cb, hi] from the checkpoint at the right end
                const int hi = std::min(cb + chunk, nt);
                cache.assign(hi - cb + 1, Eigen::MatrixXd());
                cache[hi - cb] = (hi == nt) ? ct.PT : checkpoints[hi / chunk];
                for (int j = hi - 1; j >= cb; --j) {
                    Eigen::MatrixXd Pj;
                    Eigen::VectorXd rj;
                    riccati_step(cm, cache[j + 1 - cb], r_all[j + 1], Pj, rj);
                    cache[j - cb] = Pj;
                }
                cache_base = cb;
            }
        }
        const Eigen::MatrixXd& Pk = store_all ? P_all[k] : cache[k - cache_base];
        traj.p.row(k) = (-Pk * y + r_all[k]).transpose();
        traj.y.row(k) = y.transpose();
        Eigen::VectorXd pk = traj.p.row(k).transpose();
        traj.u.row(k) = (ct.u_ref + sys.B.transpose() * pk / ct.alpha).transpose();
        if (k < nt) {
            y = cm.M11 * y + cm.M12 * pk + cm.g1;
            if (!y.allFinite()) throw StepTooCoarse("state blew up; raise nt");
        }
    }

    const auto w = trapezoid_weights(nt, h);
    double J = payoff_value(ocp.cost, traj.y.row(nt).transpose());
    for (int k = 0; k <= nt; ++k) {
        J += w[k] * running_cost(sys, ocp.cost, traj.y.row(k).transpose(),
                                 traj.u.row(k).transpose());
    }
    traj.objective = J;
    return traj;
}

Trajectory solve_finite_horizon_kkt(const OcpProblem& ocp) {
    const LtiSystem& sys = ocp.sys;
    const Eigen::Index d = sys.dim();
    const int nt = ocp.nt;
    if (static_cast<std::size_t>(nt + 1) * d > 200'000)
        throw OutOfRange("KKT cross-check mode is limited to moderate grids");
    CostTerms ct = cost_terms(sys, ocp.cost);
    const double h = ocp.T / nt;

    // Unknowns: z = (y_0..y_nt, p_0..p_nt). Midpoint rows couple neighbors.
    const Eigen::Index n = 2 * (nt + 1) * d;
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    auto yi = [&](int k, Eigen::Index i) { return static_cast<Eigen::Index>(k) * d + i; };
    auto pi = [&](int k, Eigen::Index i) {
        return static_cast<Eigen::Index>(nt + 1) * d + static_cast<Eigen::Index>(k) * d + i;
    };
    auto add_block = [&](Eigen::Index row0, Eigen::Index col0, const Eigen::MatrixXd& Mt,
                         double s) {
        for (Eigen::Index i = 0; i < Mt.rows(); ++i)
            for (Eigen::Index j = 0; j < Mt.cols(); ++j)
                if (Mt(i, j) != 0.0) trip.emplace_back(row0 + i, col0 + j, s * Mt(i, j));
    };

    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
    const Eigen::MatrixXd S = (sys.B * sys.B.transpose()) / ct.alpha;
    Eigen::Index row = 0;
    // y_0 = y0
    add_block(row, yi(0, 0), I, 1.0);
    rhs.segment(row, d) = ocp.y0;
    row += d;
    for (int k = 0; k < nt; ++k) {
        // state midpoint: y_{k+1} - y_k - h/2 A (y_k + y_{k+1}) - h/2 S (p_k + p_{k+1}) = h B u_ref
        add_block(row, yi(k + 1, 0), I - 0.5 * h * sys.A, 1.0);
        add_block(row, yi(k, 0), -I - 0.5 * h * sys.A, 1.0);
        add_block(row, pi(k, 0), S, -0.5 * h);
        add_block(row, pi(k + 1, 0), S, -0.5 * h);
        rhs.segment(row, d) = h * sys.B * ct.u_ref;
        row += d;
        // adjoint midpoint: p_{k+1} - p_k + h/2 A^T (p_k + p_{k+1}) - h/2 Q (y_k + y_{k+1}) = -h q
        add_block(row, pi(k + 1, 0), I + 0.5 * h * sys.A.transpose(), 1.0);
        add_block(row, pi(k, 0), -I + 0.5 * h * sys.A.transpose(), 1.0);
        add_block(row, yi(k, 0), ct.Q, -0.5 * h);
        add_block(row, yi(k + 1, 0), ct.Q, -0.5 * h);
        rhs.segment(row, d) = -h * ct.q;
        row += d;
    }
    // p_nt + PT y_nt = rT
    add_block(row, pi(nt, 0), I, 1.0);
    add_block(row, yi(nt, 0), ct.PT, 1.0);
    rhs.segment(row, d) = ct.rT;
    row += d;

    Eigen::SparseMatrix<double> K(n, n);
    K.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(K);
    if (lu.info() != Eigen::Success) throw SingularKkt("space-time KKT factorization failed");
    Eigen::VectorXd z = lu.solve(rhs);

    Trajectory traj;
    traj.t = Eigen::VectorXd::LinSpaced(nt + 1, 0.0, ocp.T);
    traj.y.resize(nt + 1, d);
    traj.p.resize(nt + 1, d);
    traj.u.resize(nt + 1, sys.inputs());
    for (int k = 0; k <= nt; ++k) {
        traj.y.row(k) = z.segment(yi(k, 0), d).transpose();
        traj.p.row(k) = z.segment(pi(k, 0), d).transpose();
        traj.u.row(k) =
            (ct.u_ref + sys.B.transpose() * z.segment(pi(k, 0), d) / ct.alpha).transpose();
    }
    const auto w = trapezoid_weights(nt, h);
    double J = payoff_value(ocp.cost, traj.y.row(nt).transpose());
    for (int k = 0; k <= nt; ++k)
        J += w[k] * running_cost(sys, ocp.cost, traj.y.row(k).transpose(),
                                 traj.u.row(k).transpose());
    traj.objective = J;
    return traj;
}

Trajectory simulate(const OcpProblem& ocp, const Eigen::MatrixXd& u_nodes) {
    const LtiSystem& sys = ocp.sys;
    const Eigen::Index d = sys.dim();
    const int nt = ocp.nt;
    if (u_nodes.rows() != nt + 1 || u_nodes.cols() != sys.inputs())
        throw DimensionMismatch("control path must be (nt+1) x m");
    const double h = ocp.T / nt;

    Eigen::MatrixXd E = Eigen::MatrixXd::Identity(d, d) - 0.5 * h * sys.A;
    Eigen::MatrixXd F = Eigen::MatrixXd::Identity(d, d) + 0.5 * h * sys.A;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(E);

    Trajectory traj;
    traj.t = Eigen::VectorXd::LinSpaced(nt + 1, 0.0, ocp.T);
    traj.y.resize(nt + 1, d);
    traj.u = u_nodes;
    traj.p.resize(0, d);
    Eigen::VectorXd y = ocp.y0;
    traj.y.row(0) = y.transpose();
    for (int k = 0; k < nt; ++k) {
        Eigen::VectorXd um = 0.5 * (u_nodes.row(k) + u_nodes.row(k + 1)).transpose();
        y = lu.solve(F * y + h * sys.B * um);
        if (!y.allFinite()) throw NonFiniteState("simulated state blew up");
        traj.y.row(k + 1) = y.transpose();
    }
    const auto w = trapezoid_weights(nt, h);
    double J = payoff_value(ocp.cost, traj.y.row(nt).transpose());
    for (int k = 0; k <= nt; ++k)
        J += w[k] * running_cost(sys, ocp.cost, traj.y.row(k).transpose(),
                                 traj.u.row(k).transpose());
    traj.objective = J;
    return traj;
}

double simulate_objective(const OcpProblem& ocp, const Eigen::MatrixXd& u_nodes) {
    return simulate(ocp, u_nodes).objective;
}

ETResult compute_E_T(const LtiSystem& sys, const QuadraticCost& cost_zero_target,
                     double T, const Eigen::VectorXd& y0, int nt) {
    if (cost_zero_target.y_d.norm() != 0.0)
        throw OutOfRange("compute_E_T requires y_d = 0");
    if (cost_zero_target.terminal.kind != TerminalKind::none)
        throw OutOfRange("compute_E_T requires no terminal payoff");
    OcpProblem ocp{sys, cost_zero_target, y0, T, nt};
    Trajectory traj = solve_finite_horizon(ocp);
    ETResult res;
    res.p0 = -traj.p.row(0).transpose();
    res.quad_form = res.p0.dot(y0);
    return res;
}

Eigen::MatrixXd reconstruct_E_T(const LtiSystem& sys, double alpha, double T, int nt) {
    const Eigen::Index d = sys.dim();
    if (d > 50) throw OutOfRange("E(T) reconstruction is guarded to d <= 50");
    QuadraticCost cost;
    cost.y_d = Eigen::VectorXd::Zero(sys.outputs());
    cost.alpha = alpha;
    Eigen::MatrixXd E(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Unit(d, j);
        E.col(j) = compute_E_T(sys, cost, T, e, nt).p0;
    }
    return E;
}

AffineFeedbackReport verify_affine_feedback(const OcpProblem& ocp, const Trajectory& traj,
                                            const SteadyOptimum& steady,
                                            double lambda_hint) {
    const LtiSystem& sys = ocp.sys;
    const Eigen::Index d = sys.dim();
    const int nt = ocp.nt;
    const double h = ocp.T / nt;

    // E(T - t_k) equals the backward Riccati matrix P_k of the zero-target,
    // no-payoff sweep on the same grid.
    QuadraticCost zero = ocp.cost;
    zero.y_d = Eigen::VectorXd::Zero(sys.outputs());
    zero.u_d.reset();
    zero.terminal = TerminalCondition::none_();
    CostTerms ct = cost_terms(sys, zero);
    CayleyMap cm = cayley_map(sys, ct, h);

    AffineFeedbackReport rep;
    rep.t = traj.t;
    rep.h_norm.resize(nt + 1);

    std::vector<Eigen::MatrixXd> P(nt + 1);
    P[nt] = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(d);
    for (int k = nt - 1; k >= 0; --k) {
        Eigen::VectorXd rk;
        riccati_step(cm, P[k + 1], r, P[k], rk);
        r = rk;
    }

    // corrector: p - pbar = -E(T-t)(y - ybar) + h with E(T-t) = P_k (PSD);
    // this is the orientation that uncouples the system into the stable
    // closed loop (the feedback-law line of the source states it with the
    // opposite sign, which is inconsistent with its own corrector dynamics)
    for (int k = 0; k <= nt; ++k) {
        Eigen::VectorXd dy = traj.y.row(k).transpose() - steady.y_bar;
        Eigen::VectorXd dp = traj.p.row(k).transpose() - steady.p_bar;
        Eigen::VectorXd hk = dp + P[k] * dy;
        rep.h_norm(k) = hk.norm();
        if (k == nt) rep.h_terminal_error = (hk + steady.p_bar).norm();
    }
    rep.max_h = rep.h_norm.maxCoeff();

    // fit log ||h|| ~ log c - rate * (T - t) over the part above the floor
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (int k = 0; k <= nt; ++k) {
        const double v = rep.h_norm(k);
        if (v < 1e-14) continue;
        const double x = ocp.T - traj.t(k);
        sx += x;
        sy += std::log(v);
        sxx += x * x;
        sxy += x * std::log(v);
        ++cnt;
    }
    if (cnt >= 3 && sxx * cnt - sx * sx > 1e-12) {
        const double slope = (sxy * cnt - sx * sy) / (sxx * cnt - sx * sx);
        rep.rate_fit = -slope;
        rep.c_fit = std::exp((sy - slope * sx) / cnt);
        rep.fit_valid = true;
    }
    (void)lambda_hint;
    return rep;
}

}  // namespace turnpike
