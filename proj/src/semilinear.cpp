#include "turnpike/semilinear.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace turnpike {

Nonlinearity Nonlinearity::cubic() {
    Nonlinearity n;
    n.kind = NonlinearityKind::cubic;
    n.f = [](double y) { return y * y * y; };
    n.fp = [](double y) { return 3.0 * y * y; };
    n.fpp = [](double y) { return 6.0 * y; };
    n.lipschitz = std::numeric_limits<double>::infinity();
    return n;
}

Nonlinearity Nonlinearity::tanh_sat() {
    Nonlinearity n;
    n.kind = NonlinearityKind::tanh_sat;
    n.f = [](double y) { return std::tanh(y); };
    n.fp = [](double y) { const double t = std::tanh(y); return 1.0 - t * t; };
    n.fpp = [](double y) {
        const double t = std::tanh(y);
        return -2.0 * t * (1.0 - t * t);
    };
    n.lipschitz = 1.0;
    return n;
}

Nonlinearity Nonlinearity::custom(std::function<double(double)> f,
                                  std::function<double(double)> fp,
                                  std::function<double(double)> fpp, double L) {
    Nonlinearity n;
    n.kind = NonlinearityKind::custom;
    n.f = std::move(f);
    n.fp = std::move(fp);
    n.fpp = std::move(fpp);
    n.lipschitz = L;
    return n;
}

Nonlinearity Nonlinearity::zero() {
    return custom([](double) { return 0.0; }, [](double) { return 0.0; },
                  [](double) { return 0.0; }, 0.0);
}

Eigen::VectorXd SemilinearProblem::inject(const Eigen::VectorXd& u) const {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(nx);
    if (control_mode == ControlMode::boundary) {
        b(0) += u(0) / (h * h);
        b(nx - 1) += u(0) / (h * h);
    } else {
        for (std::size_t j = 0; j < omega.size(); ++j) b(omega[j]) += u(j);
    }
    return b;
}

Eigen::VectorXd SemilinearProblem::restrict_control(const Eigen::VectorXd& v) const {
    if (control_mode == ControlMode::boundary) {
        Eigen::VectorXd r(1);
        r(0) = (v(0) + v(nx - 1)) / (h * h);
        return r;
    }
    Eigen::VectorXd r(static_cast<Eigen::Index>(omega.size()));
    for (std::size_t j = 0; j < omega.size(); ++j) r(j) = v(omega[j]);
    return r;
}

SemilinearProblem make_semilinear(int nx, Nonlinearity f, Interval omega,
                                  Interval omega_obs, ControlMode mode) {
    if (nx < 2) throw OutOfRange("semilinear plant requires nx >= 2");
    SemilinearProblem p;
    p.nx = nx;
    p.h = 1.0 / (nx + 1);
    p.L = Eigen::MatrixXd::Zero(nx, nx);
    const double w = 1.0 / (p.h * p.h);
    for (int i = 0; i < nx; ++i) {
        p.L(i, i) = 2.0 * w;
        if (i > 0) p.L(i, i - 1) = -w;
        if (i + 1 < nx) p.L(i, i + 1) = -w;
    }
    p.f = std::move(f);
    p.omega = window_nodes(nx, p.h, omega);
    p.omega_obs = window_nodes(nx, p.h, omega_obs);
    if (mode == ControlMode::distributed && p.omega.empty())
        throw WindowTooSmall("control window selects no nodes");
    if (p.omega_obs.empty()) throw WindowTooSmall("observation window selects no nodes");
    p.control_mode = mode;
    return p;
}

namespace {

Eigen::VectorXd apply_f(const Nonlinearity& f, const Eigen::VectorXd& y) {
    return y.unaryExpr([&](double v) { return f.f(v); });
}

Eigen::VectorXd apply_fp(const Nonlinearity& f, const Eigen::VectorXd& y) {
    return y.unaryExpr([&](double v) { return f.fp(v); });
}

double steady_residual(const SemilinearProblem& p, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& bu) {
    return (p.L * y + apply_f(p.f, y) - bu).norm();
}

}  // namespace

Eigen::VectorXd solve_steady_state(const SemilinearProblem& prob, const Eigen::VectorXd& u,
                                   SteadySolveOptions opts) {
    if (!u.allFinite()) throw NonFiniteState("control must be finite");
    const Eigen::VectorXd bu = prob.inject(u);
    const double tol = opts.tol * (1.0 + bu.norm());
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(prob.L);

    Eigen::VectorXd y = Eigen::VectorXd::Zero(prob.nx);
    double theta = opts.theta;
    double res = steady_residual(prob, y, bu);
    int it = 0;
    for (; it < opts.max_iters && res > tol; ++it) {
        Eigen::VectorXd y_next = (1.0 - theta) * y + theta * lu.solve(bu - apply_f(prob.f, y));
        const double res_next = steady_residual(prob, y_next, bu);
        if (res_next < res) {
            y = y_next;
            res = res_next;
        } else {
            theta *= 0.5;
            if (theta < 1e-12) break;
        }
    }
    if (res <= tol) return y;

    if (opts.newton_fallback) {
        // The relaxed fixed point stalls when f'(y) is large relative to the
        // smallest eigenvalue of L; finish with a damped Newton iteration.
        for (int k = 0; k < 200 && res > tol; ++k) {
            Eigen::MatrixXd J = prob.L;
            Eigen::VectorXd fpv = apply_fp(prob.f, y);
            J.diagonal() += fpv;
            Eigen::VectorXd r = prob.L * y + apply_f(prob.f, y) - bu;
            Eigen::VectorXd dy = J.partialPivLu().solve(-r);
            double t = 1.0;
            while (t > 1e-14) {
                Eigen::VectorXd yn = y + t * dy;
                if (steady_residual(prob, yn, bu) < res) break;
                t *= 0.5;
            }
            if (t <= 1e-14) break;
            y += t * dy;
            res = steady_residual(prob, y, bu);
        }
    }
    if (res > tol) throw NoConvergence("steady fixed point did not converge", res);
    return y;
}

namespace {

double control_quad(const SemilinearProblem& prob, const Eigen::VectorXd& u) {
    if (prob.control_mode == ControlMode::boundary) return 2.0 * u(0) * u(0);
    return prob.h * u.squaredNorm();
}

Eigen::VectorXd control_quad_grad(const SemilinearProblem& prob, const Eigen::VectorXd& u) {
    if (prob.control_mode == ControlMode::boundary) {
        Eigen::VectorXd g(1);
        g(0) = 4.0 * u(0);
        return g;
    }
    return 2.0 * prob.h * u;
}

double state_misfit(const SemilinearProblem& prob, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& y_d) {
    double acc = 0.0;
    for (int i : prob.omega_obs) {
        const double e = y(i) - y_d(i);
        acc += e * e;
    }
    return prob.h * acc;
}

Eigen::VectorXd state_misfit_grad(const SemilinearProblem& prob, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& y_d) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(prob.nx);
    for (int i : prob.omega_obs) g(i) = 2.0 * prob.h * (y(i) - y_d(i));
    return g;
}

}  // namespace

double constant_control_objective(const SemilinearProblem& prob, const Eigen::VectorXd& y_d,
                                  double u) {
    Eigen::VectorXd uv = Eigen::VectorXd::Constant(prob.control_dim(), u);
    Eigen::VectorXd y = solve_steady_state(prob, uv);
    return 0.5 * state_misfit(prob, y, y_d) + 0.5 * control_quad(prob, uv);
}

ScanResult scan_constant_controls(const SemilinearProblem& prob, const Eigen::VectorXd& y_d,
                                  double u_lo, double u_hi, int n_samples) {
    if (!(u_lo < u_hi) || n_samples < 3) throw OutOfRange("invalid scan range");
    ScanResult res;
    res.u_grid = Eigen::VectorXd::LinSpaced(n_samples, u_lo, u_hi);
    res.J_values.resize(n_samples);
    std::vector<bool> ok(n_samples, true);
    for (int i = 0; i < n_samples; ++i) {
        try {
            res.J_values(i) = constant_control_objective(prob, y_d, res.u_grid(i));
        } catch (const NoConvergence&) {
            res.J_values(i) = std::numeric_limits<double>::quiet_NaN();
            ok[i] = false;
            ++res.failed_samples;
        }
    }

    auto golden = [&](double a, double b) {
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = b - gr * (b - a), dpt = a + gr * (b - a);
        double fc = constant_control_objective(prob, y_d, c);
        double fd = constant_control_objective(prob, y_d, dpt);
        while (b - a > 1e-6 * (1.0 + std::abs(a) + std::abs(b))) {
            if (fc < fd) {
                b = dpt;
                dpt = c;
                fd = fc;
                c = b - gr * (b - a);
                fc = constant_control_objective(prob, y_d, c);
            } else {
                a = c;
                c = dpt;
                fc = fd;
                dpt = a + gr * (b - a);
                fd = constant_control_objective(prob, y_d, dpt);
            }
        }
        const double um = 0.5 * (a + b);
        return std::pair<double, double>(um, constant_control_objective(prob, y_d, um));
    };

    for (int i = 1; i + 1 < n_samples; ++i) {
        if (!ok[i] || !ok[i - 1] || !ok[i + 1]) continue;
        if (res.J_values(i) < res.J_values(i - 1) && res.J_values(i) < res.J_values(i + 1)) {
            auto [um, Jm] = golden(res.u_grid(i - 1), res.u_grid(i + 1));
            res.minimizers.push_back({um, Jm, false});
        }
    }
    if (!res.minimizers.empty()) {
        double best = res.minimizers.front().J;
        for (const auto& m : res.minimizers) best = std::min(best, m.J);
        for (auto& m : res.minimizers)
            m.global = (m.J - best) <= 1e-3 * std::abs(best);
    }
    return res;
}

namespace {

// One implicit-midpoint step of dy/dt = -L y - f(y) + b, solved by Newton.
Eigen::VectorXd midpoint_step(const SemilinearProblem& prob, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& b, double h) {
    Eigen::VectorXd ynext = y;
    for (int it = 0; it < 50; ++it) {
        Eigen::VectorXd m = 0.5 * (y + ynext);
        Eigen::VectorXd g =
            ynext - y - h * (-(prob.L * m) - apply_f(prob.f, m) + b);
        if (g.norm() <= 1e-12 * (1.0 + ynext.norm())) break;
        Eigen::MatrixXd Jp = Eigen::MatrixXd::Identity(prob.nx, prob.nx) + 0.5 * h * prob.L;
        Jp.diagonal() += 0.5 * h * apply_fp(prob.f, m);
        ynext -= Jp.partialPivLu().solve(g);
        if (!ynext.allFinite()) throw NonFiniteState("semilinear step blew up");
    }
    return ynext;
}

struct ForwardPass {
    Eigen::MatrixXd y;  // (nt+1) x nx
    double objective = 0.0;
};

ForwardPass forward_pass(const SemilinearProblem& prob, const Eigen::VectorXd& y0,
                         const Eigen::VectorXd& y_d, double T,
                         const Eigen::MatrixXd& u_path) {
    const int nt = static_cast<int>(u_path.rows());
    const double h = T / nt;
    ForwardPass fp;
    fp.y.resize(nt + 1, prob.nx);
    fp.y.row(0) = y0.transpose();
    Eigen::VectorXd y = y0;
    double J = 0.5 * 0.5 * h * state_misfit(prob, y, y_d);
    for (int k = 0; k < nt; ++k) {
        y = midpoint_step(prob, y, prob.inject(u_path.row(k).transpose()), h);
        fp.y.row(k + 1) = y.transpose();
        const double w = (k + 1 == nt) ? 0.5 * h : h;
        J += 0.5 * w * state_misfit(prob, y, y_d);
        J += 0.5 * h * control_quad(prob, u_path.row(k).transpose());
    }
    fp.objective = J;
    return fp;
}

}  // namespace

double evaluate_objective(const SemilinearProblem& prob, const Eigen::VectorXd& y0,
                          const Eigen::VectorXd& y_d, double T,
                          const Eigen::MatrixXd& u_path) {
    return forward_pass(prob, y0, y_d, T, u_path).objective;
}

Eigen::MatrixXd objective_gradient(const SemilinearProblem& prob, const Eigen::VectorXd& y0,
                                   const Eigen::VectorXd& y_d, double T,
                                   const Eigen::MatrixXd& u_path) {
    const int nt = static_cast<int>(u_path.rows());
    const double h = T / nt;
    ForwardPass fp = forward_pass(prob, y0, y_d, T, u_path);

    Eigen::MatrixXd grad(nt, u_path.cols());
    // exact reverse sweep through the implicit midpoint steps; the objective
    // carries 0.5 * w_k in front of each misfit term
    Eigen::VectorXd lambda =
        0.5 * 0.5 * h * state_misfit_grad(prob, fp.y.row(nt).transpose(), y_d);
    for (int k = nt - 1; k >= 0; --k) {
        Eigen::VectorXd m = 0.5 * (fp.y.row(k) + fp.y.row(k + 1)).transpose();
        Eigen::MatrixXd Jp = Eigen::MatrixXd::Identity(prob.nx, prob.nx) + 0.5 * h * prob.L;
        Eigen::MatrixXd Jm = Eigen::MatrixXd::Identity(prob.nx, prob.nx) - 0.5 * h * prob.L;
        Eigen::VectorXd fpv = apply_fp(prob.f, m);
        Jp.diagonal() += 0.5 * h * fpv;
        Jm.diagonal() -= 0.5 * h * fpv;
        Eigen::VectorXd w = Jp.transpose().partialPivLu().solve(lambda);
        grad.row(k) =
            (0.5 * h * control_quad_grad(prob, u_path.row(k).transpose()) +
             h * prob.restrict_control(w))
                .transpose();
        const double wk = (k == 0) ? 0.5 * h : h;
        lambda = Jm.transpose() * w +
                 0.5 * wk * state_misfit_grad(prob, fp.y.row(k).transpose(), y_d);
    }
    return grad;
}

SemilinearTrajectory solve_ocp(const SemilinearProblem& prob, const Eigen::VectorXd& y0,
                               const Eigen::VectorXd& y_d, double T, int nt,
                               SemilinearOcpOptions opts) {
    if (nt < 2 || T <= 0.0) throw OutOfRange("invalid grid");
    const int m = prob.control_dim();
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 0.1);

    SemilinearTrajectory best;
    best.objective = std::numeric_limits<double>::infinity();
    for (int start = 0; start < std::max(1, opts.multistart); ++start) {
        Eigen::MatrixXd u = Eigen::MatrixXd::Zero(nt, m);
        if (start > 0)
            u = Eigen::MatrixXd::NullaryExpr(nt, m, [&](Eigen::Index, Eigen::Index) {
                return gauss(rng);
            });
        double J = evaluate_objective(prob, y0, y_d, T, u);
        double step = opts.initial_step;
        int it = 0;
        double gnorm = 0.0;
        for (; it < opts.max_iters; ++it) {
            Eigen::MatrixXd g = objective_gradient(prob, y0, y_d, T, u);
            gnorm = g.norm();
            if (gnorm <= opts.grad_tol) break;
            bool accepted = false;
            double s = step;
            while (s > 1e-16) {
                Eigen::MatrixXd u_try = u - s * g;
                const double J_try = evaluate_objective(prob, y0, y_d, T, u_try);
                if (J_try <= J - opts.armijo_c * s * gnorm * gnorm) {
                    u = u_try;
                    J = J_try;
                    accepted = true;
                    step = std::min(s * 2.0, 1e6);
                    break;
                }
                s *= 0.5;
            }
            if (!accepted) {
                if (gnorm <= 1e4 * opts.grad_tol) break;
                throw LineSearchStalled("gradient step underflow at |g| = " +
                                        std::to_string(gnorm));
            }
        }
        ForwardPass fp = forward_pass(prob, y0, y_d, T, u);
        best.multistart_objectives.push_back(fp.objective);
        if (fp.objective < best.objective) {
            best.t = Eigen::VectorXd::LinSpaced(nt + 1, 0.0, T);
            best.y = fp.y;
            best.u = u;
            best.objective = fp.objective;
            best.grad_norm = gnorm;
            best.iterations = it;
        }
    }
    return best;
}

double hessian_action(const SemilinearProblem& prob, const Eigen::VectorXd& y_d,
                      const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    if (u.size() != v.size()) throw DimensionMismatch("u and v must have the same shape");
    Eigen::VectorXd y = solve_steady_state(prob, u);
    Eigen::MatrixXd J = prob.L;
    J.diagonal() += apply_fp(prob.f, y);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);

    Eigen::VectorXd eta = lu.solve(prob.inject(v));
    // steady adjoint (standard orientation): (L + f'(y)) phi = (y - y_d) on omega_obs
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(prob.nx);
    for (int i : prob.omega_obs) rhs(i) = y(i) - y_d(i);
    Eigen::VectorXd phi = lu.solve(rhs);

    double eta_sq = 0.0, cross = 0.0;
    for (int i = 0; i < prob.nx; ++i) {
        if (std::find(prob.omega_obs.begin(), prob.omega_obs.end(), i) !=
            prob.omega_obs.end())
            eta_sq += eta(i) * eta(i);
        cross += prob.f.fpp(y(i)) * phi(i) * eta(i) * eta(i);
    }
    return prob.h * eta_sq + control_quad(prob, v) - prob.h * cross;
}

Eigen::MatrixXd simulate_semilinear(const SemilinearProblem& prob, const Eigen::VectorXd& y0,
                                    double T, const Eigen::MatrixXd& u_nodes) {
    const int nt = static_cast<int>(u_nodes.rows()) - 1;
    const double h = T / nt;
    Eigen::MatrixXd Y(nt + 1, prob.nx);
    Y.row(0) = y0.transpose();
    Eigen::VectorXd y = y0;
    for (int k = 0; k < nt; ++k) {
        Eigen::VectorXd um = 0.5 * (u_nodes.row(k) + u_nodes.row(k + 1)).transpose();
        y = midpoint_step(prob, y, prob.inject(um), h);
        Y.row(k + 1) = y.transpose();
    }
    return Y;
}

namespace {

struct GramianControl {
    Eigen::MatrixXd u;      // nodal samples on the leg grid
    double energy = 0.0;
};

// Minimal-energy control steering x0 to x1 for dx/dt = A x + B u on [0, T0],
// sampled on the given nodes (relative to the leg start).
GramianControl gramian_control(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                               const Eigen::VectorXd& x0, const Eigen::VectorXd& x1,
                               double T0, const Eigen::VectorXd& nodes) {
    const Eigen::Index d = A.rows();
    const int panels = 512;
    const double ds = T0 / panels;
    Eigen::MatrixXd Eh = (A * ds).exp();
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd M = B;  // e^{A s} B at s = j ds
    for (int j = 0; j <= panels; ++j) {
        const double w = (j == 0 || j == panels) ? 0.5 : 1.0;  // trapezoid
        W += w * ds * M * M.transpose();
        if (j < panels) M = Eh * M;
    }
    Eigen::VectorXd rho = x1 - (A * T0).exp() * x0;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(W);
    Eigen::VectorXd eta = ldlt.solve(rho);
    if (!eta.allFinite() || (W * eta - rho).norm() > 1e-6 * (1.0 + rho.norm()))
        throw ControllabilityFailed("controllability Gramian is numerically singular");

    GramianControl gc;
    gc.energy = rho.dot(eta);
    gc.u.resize(nodes.size(), B.cols());
    for (Eigen::Index k = 0; k < nodes.size(); ++k) {
        Eigen::MatrixXd Phi = (A * (T0 - nodes(k))).exp();
        gc.u.row(k) = (B.transpose() * Phi.transpose() * eta).transpose();
    }
    return gc;
}

}  // namespace

QuasiTurnpikeControl quasi_turnpike_control(const LtiSystem& sys, const Eigen::VectorXd& y0,
                                            const Eigen::VectorXd& y_bar, double T,
                                            double T0, int nt,
                                            const Eigen::VectorXd* y_exit) {
    if (T < 2.0 * T0) throw OutOfRange("quasi-turnpike needs T >= 2 T0");
    const Eigen::Index m = sys.inputs();
    // steady hold control: minimal-norm solution of B u = -A ybar
    Eigen::VectorXd u_hold =
        sys.B.completeOrthogonalDecomposition().solve(-sys.A * y_bar);

    QuasiTurnpikeControl qc;
    qc.u = Eigen::MatrixXd::Zero(nt + 1, m);
    Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(nt + 1, 0.0, T);
    std::vector<Eigen::Index> entry_nodes, exit_nodes;
    for (Eigen::Index k = 0; k <= nt; ++k) {
        if (t(k) <= T0) entry_nodes.push_back(k);
        else if (y_exit && t(k) >= T - T0) exit_nodes.push_back(k);
        qc.u.row(k) = u_hold.transpose();
    }

    Eigen::VectorXd entry_times(entry_nodes.size());
    for (std::size_t i = 0; i < entry_nodes.size(); ++i) entry_times(i) = t(entry_nodes[i]);
    GramianControl entry = gramian_control(sys.A, sys.B, y0, y_bar, T0, entry_times);
    for (std::size_t i = 0; i < entry_nodes.size(); ++i)
        qc.u.row(entry_nodes[i]) = entry.u.row(i);
    qc.entry_energy = entry.energy;

    if (y_exit) {
        Eigen::VectorXd exit_times(exit_nodes.size());
        for (std::size_t i = 0; i < exit_nodes.size(); ++i)
            exit_times(i) = t(exit_nodes[i]) - (T - T0);
        GramianControl exitc = gramian_control(sys.A, sys.B, y_bar, *y_exit, T0, exit_times);
        for (std::size_t i = 0; i < exit_nodes.size(); ++i)
            qc.u.row(exit_nodes[i]) = exitc.u.row(i);
    }
    return qc;
}

QuasiTurnpikeControl quasi_turnpike_control(const SemilinearProblem& prob,
                                            const Eigen::VectorXd& y0,
                                            const Eigen::VectorXd& y_bar, double T,
                                            double T0, int nt) {
    if (T < 2.0 * T0) throw OutOfRange("quasi-turnpike needs T >= 2 T0");
    const int m = prob.control_dim();

    // steady control for y_bar (zero for uncontrolled steady states)
    Eigen::VectorXd res_bar = prob.L * y_bar + apply_f(prob.f, y_bar);
    Eigen::MatrixXd Bmat = Eigen::MatrixXd::Zero(prob.nx, m);
    for (int j = 0; j < m; ++j)
        Bmat.col(j) = prob.inject(Eigen::VectorXd::Unit(m, j));
    Eigen::VectorXd u_hold = Bmat.completeOrthogonalDecomposition().solve(res_bar);

    Eigen::MatrixXd A_lin = -prob.L;
    A_lin.diagonal() -= apply_fp(prob.f, y_bar);

    const double h = T / nt;
    const int n_entry = std::max(2, static_cast<int>(std::floor(T0 / h)));
    Eigen::VectorXd entry_times = Eigen::VectorXd::LinSpaced(n_entry + 1, 0.0, T0);

    QuasiTurnpikeControl qc;
    qc.u = Eigen::MatrixXd::Zero(nt + 1, m);
    for (int k = 0; k <= nt; ++k) qc.u.row(k) = u_hold.transpose();

    Eigen::VectorXd target = y_bar;
    double miss_norm = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 50; ++iter) {
        GramianControl entry =
            gramian_control(A_lin, Bmat, y0 - y_bar, target - y_bar, T0, entry_times);
        Eigen::MatrixXd u_leg(n_entry + 1, m);
        for (int k = 0; k <= n_entry; ++k)
            u_leg.row(k) = entry.u.row(k) + u_hold.transpose();
        Eigen::MatrixXd Y = simulate_semilinear(prob, y0, T0, u_leg);
        Eigen::VectorXd miss = Y.row(n_entry).transpose() - y_bar;
        miss_norm = miss.norm();
        qc.correction_iterations = iter + 1;
        if (miss_norm <= 1e-6) {
            // write the converged entry leg onto the [0,T] grid
            for (int k = 0; k <= nt; ++k) {
                const double tk = k * h;
                if (tk <= T0 + 1e-12) {
                    const int j = std::min<int>(n_entry,
                        static_cast<int>(std::round(tk / T0 * n_entry)));
                    qc.u.row(k) = u_leg.row(j);
                }
            }
            qc.entry_energy = entry.energy;
            return qc;
        }
        target -= miss;
    }
    throw ControllabilityFailed("terminal miss stalled at " + std::to_string(miss_norm));
}

}  // namespace turnpike
