#include "turnpike/shooting.hpp"

#include <cmath>

#include "turnpike/errors.hpp"

namespace turnpike {

namespace {

using Field = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

Eigen::VectorXd rk4_step(const Field& F, const Eigen::VectorXd& z, double h) {
    Eigen::VectorXd k1 = F(z);
    Eigen::VectorXd k2 = F(z + 0.5 * h * k1);
    Eigen::VectorXd k3 = F(z + 0.5 * h * k2);
    Eigen::VectorXd k4 = F(z + h * k3);
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Eigen::VectorXd midpoint_step(const Field& F,
                              const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& J,
                              const Eigen::VectorXd& z, double h) {
    Eigen::VectorXd znext = z + h * F(z);  // predictor
    const Eigen::Index n = z.size();
    for (int it = 0; it < 50; ++it) {
        Eigen::VectorXd m = 0.5 * (z + znext);
        Eigen::VectorXd g = znext - z - h * F(m);
        if (g.norm() <= 1e-13 * (1.0 + znext.norm())) break;
        Eigen::MatrixXd Jm;
        if (J) {
            Jm = Eigen::MatrixXd::Identity(n, n) - 0.5 * h * J(m);
        } else {
            Jm = Eigen::MatrixXd::Identity(n, n);  // fixed point fallback
        }
        znext -= Jm.partialPivLu().solve(g);
        if (!znext.allFinite()) throw NonFiniteState("implicit step blew up");
    }
    return znext;
}

// Integrates dz/dt = s * F(z) over [0, L] with nt steps (s = -1 reverses time).
Eigen::MatrixXd integrate(const ShootingSpec& spec, const Field& F,
                          const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& J,
                          const Eigen::VectorXd& z0, double L, int nt, double s) {
    Eigen::MatrixXd path(nt + 1, z0.size());
    path.row(0) = z0.transpose();
    Eigen::VectorXd z = z0;
    const double h = (nt > 0) ? L / nt : 0.0;
    Field Fs = [&](const Eigen::VectorXd& w) -> Eigen::VectorXd { return s * F(w); };
    auto Js = [&](const Eigen::VectorXd& w) -> Eigen::MatrixXd { return s * J(w); };
    for (int k = 0; k < nt; ++k) {
        if (spec.integrator == Integrator::rk4)
            z = rk4_step(Fs, z, h);
        else
            z = midpoint_step(Fs, J ? std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>(Js)
                                     : nullptr,
                              z, h);
        if (!z.allFinite()) throw NonFiniteState("shooting integration blew up");
        path.row(k + 1) = z.transpose();
    }
    return path;
}

}  // namespace

ShootingSpec make_lq_shooting(const LtiSystem& sys, const QuadraticCost& cost,
                              const Eigen::VectorXd& y0, double T, int nt,
                              Integrator integrator) {
    const Eigen::Index d = sys.dim();
    Eigen::MatrixXd Ham(2 * d, 2 * d);
    Ham.topLeftCorner(d, d) = sys.A;
    Ham.topRightCorner(d, d) = (sys.B * sys.B.transpose()) / cost.alpha;
    Ham.bottomLeftCorner(d, d) = sys.C.transpose() * sys.C;
    Ham.bottomRightCorner(d, d) = -sys.A.transpose();
    Eigen::VectorXd b(2 * d);
    b.head(d) = cost.u_d ? (sys.B * *cost.u_d).eval() : Eigen::VectorXd::Zero(d);
    b.tail(d) = -sys.C.transpose() * cost.y_d;

    ShootingSpec spec;
    spec.d = static_cast<int>(d);
    spec.field = [Ham, b](const Eigen::VectorXd& z) -> Eigen::VectorXd {
        return Ham * z + b;
    };
    spec.field_jacobian = [Ham](const Eigen::VectorXd&) -> Eigen::MatrixXd { return Ham; };
    spec.field_centered = [Ham](const Eigen::VectorXd& w) -> Eigen::VectorXd {
        return Ham * w;
    };
    spec.y0 = y0;
    spec.pT = (cost.terminal.kind == TerminalKind::linear)
                  ? cost.terminal.pT
                  : Eigen::VectorXd::Zero(d);
    spec.T = T;
    spec.integrator = integrator;
    spec.nt = nt;
    return spec;
}

ShootingSpec make_semilinear_shooting(const SemilinearProblem& prob,
                                      const Eigen::VectorXd& y0, const Eigen::VectorXd& y_d,
                                      double T, int nt, Integrator integrator) {
    const int d = prob.nx;
    Eigen::MatrixXd Bmat = Eigen::MatrixXd::Zero(d, prob.control_dim());
    for (int j = 0; j < prob.control_dim(); ++j)
        Bmat.col(j) = prob.inject(Eigen::VectorXd::Unit(prob.control_dim(), j));
    Eigen::MatrixXd S = Bmat * Bmat.transpose();
    Eigen::VectorXd obs_mask = Eigen::VectorXd::Zero(d);
    for (int i : prob.omega_obs) obs_mask(i) = 1.0;

    // optimality field in the u = p|_omega convention:
    //   dy/dt = -L y - f(y) + S p,   dp/dt = L p + f'(y) p + (y - y_d) 1_obs
    auto L = prob.L;
    auto f = prob.f;
    ShootingSpec spec;
    spec.d = d;
    spec.field = [L, f, S, obs_mask, y_d, d](const Eigen::VectorXd& z) -> Eigen::VectorXd {
        Eigen::VectorXd y = z.head(d), p = z.tail(d);
        Eigen::VectorXd out(2 * d);
        out.head(d) = -(L * y) - y.unaryExpr([&](double v) { return f.f(v); }) + S * p;
        out.tail(d) = L * p + y.unaryExpr([&](double v) { return f.fp(v); }).cwiseProduct(p) +
                      obs_mask.cwiseProduct(y - y_d);
        return out;
    };
    spec.field_jacobian = [L, f, S, obs_mask, d](const Eigen::VectorXd& z) -> Eigen::MatrixXd {
        Eigen::VectorXd y = z.head(d), p = z.tail(d);
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * d, 2 * d);
        J.topLeftCorner(d, d) = -L;
        J.topLeftCorner(d, d).diagonal() -= y.unaryExpr([&](double v) { return f.fp(v); });
        J.topRightCorner(d, d) = S;
        J.bottomLeftCorner(d, d).diagonal() =
            obs_mask + y.unaryExpr([&](double v) { return f.fpp(v); }).cwiseProduct(p);
        J.bottomRightCorner(d, d) = L;
        J.bottomRightCorner(d, d).diagonal() += y.unaryExpr([&](double v) { return f.fp(v); });
        return J;
    };
    spec.y0 = y0;
    spec.pT = Eigen::VectorXd::Zero(d);
    spec.T = T;
    spec.integrator = integrator;
    spec.nt = nt;
    return spec;
}

Eigen::VectorXd residual(const ShootingSpec& spec, const Eigen::VectorXd& z0) {
    if (!z0.allFinite()) throw NonFiniteState("initial shooting datum must be finite");
    const int d = spec.d;
    Eigen::VectorXd zT;
    if (spec.T == 0.0) {
        zT = z0;
    } else {
        Eigen::MatrixXd path =
            integrate(spec, spec.field, spec.field_jacobian, z0, spec.T, spec.nt, 1.0);
        zT = path.row(spec.nt).transpose();
    }
    Eigen::VectorXd R(2 * d);
    R.head(d) = z0.head(d) - spec.y0;
    R.tail(d) = zT.tail(d) - spec.pT;
    return R;
}

namespace {

struct NewtonOutcome {
    Eigen::VectorXd x;
    int iterations = 0;
    bool converged = false;
    double final_residual = 0.0;
    double jacobian_condition = 0.0;
};

// Damped Newton with forward-difference Jacobian on a generic residual map.
NewtonOutcome damped_newton(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& R,
                            Eigen::VectorXd x, double tol, int max_iters) {
    NewtonOutcome out;
    Eigen::VectorXd r = R(x);
    double rn = r.norm();
    for (int it = 0; it < max_iters; ++it) {
        if (rn <= tol) break;
        const Eigen::Index n = x.size();
        Eigen::MatrixXd J(r.size(), n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double step = 1e-6 * (1.0 + std::abs(x(j)));
            Eigen::VectorXd xp = x;
            xp(j) += step;
            J.col(j) = (R(xp) - r) / step;
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
        out.jacobian_condition =
            svd.singularValues()(0) / svd.singularValues()(svd.singularValues().size() - 1);
        Eigen::VectorXd dx = svd.solve(-r);
        double t = 1.0;
        bool accepted = false;
        while (t >= 1e-8) {
            Eigen::VectorXd xt = x + t * dx;
            Eigen::VectorXd rt;
            try {
                rt = R(xt);
            } catch (const NonFiniteState&) {
                t *= 0.5;
                continue;
            }
            if (rt.norm() < rn) {
                x = xt;
                r = rt;
                rn = rt.norm();
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        out.iterations = it + 1;
        if (!accepted) break;
    }
    out.x = x;
    out.final_residual = rn;
    out.converged = rn <= tol;
    return out;
}

}  // namespace

ShootResult shoot_standard(const ShootingSpec& spec, const Eigen::VectorXd& p0_guess) {
    const int d = spec.d;
    auto reduced = [&](const Eigen::VectorXd& q) -> Eigen::VectorXd {
        Eigen::VectorXd z0(2 * d);
        z0.head(d) = spec.y0;
        z0.tail(d) = q;
        return residual(spec, z0).tail(d);
    };
    NewtonOutcome nw = damped_newton(reduced, p0_guess, 1e-8, 50);

    ShootResult res;
    res.unknown = nw.x;
    res.iterations = nw.iterations;
    res.converged = nw.converged;
    res.final_residual = nw.final_residual;
    res.jacobian_condition = nw.jacobian_condition;
    Eigen::VectorXd z0(2 * d);
    z0.head(d) = spec.y0;
    z0.tail(d) = nw.x;
    res.t = Eigen::VectorXd::LinSpaced(spec.nt + 1, 0.0, spec.T);
    res.z = integrate(spec, spec.field, spec.field_jacobian, z0, spec.T, spec.nt, 1.0);
    return res;
}

ShootResult shoot_turnpike(const ShootingSpec& spec, const Eigen::VectorXd& y_bar,
                           const Eigen::VectorXd& p_bar) {
    const int d = spec.d;
    Eigen::VectorXd z_bar(2 * d);
    z_bar.head(d) = y_bar;
    z_bar.tail(d) = p_bar;
    const bool centered = static_cast<bool>(spec.field_centered);
    Field F = centered ? spec.field_centered : Field([&](const Eigen::VectorXd& w) {
        return spec.field(z_bar + w);
    });
    auto Jc = spec.field_jacobian
                  ? std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>(
                        [&, z_bar](const Eigen::VectorXd& w) {
                            return spec.field_jacobian(z_bar + w);
                        })
                  : nullptr;

    const int nh = spec.nt / 2;
    // residual over the deviation delta = z(T/2) - (ybar, pbar)
    auto full_residual = [&](const Eigen::VectorXd& delta) -> Eigen::VectorXd {
        Eigen::MatrixXd back = integrate(spec, F, Jc, delta, 0.5 * spec.T, nh, -1.0);
        Eigen::MatrixXd fwd = integrate(spec, F, Jc, delta, 0.5 * spec.T, spec.nt - nh, 1.0);
        Eigen::VectorXd R(2 * d);
        R.head(d) = (back.row(nh).transpose().head(d) + y_bar) - spec.y0;
        R.tail(d) = (fwd.row(spec.nt - nh).transpose().tail(d) + p_bar) - spec.pT;
        return R;
    };
    NewtonOutcome nw =
        damped_newton(full_residual, Eigen::VectorXd::Zero(2 * d), 1e-8, 50);

    ShootResult res;
    res.unknown = z_bar + nw.x;
    res.iterations = nw.iterations;
    res.converged = nw.converged;
    res.final_residual = nw.final_residual;
    res.jacobian_condition = nw.jacobian_condition;

    Eigen::MatrixXd back = integrate(spec, F, Jc, nw.x, 0.5 * spec.T, nh, -1.0);
    Eigen::MatrixXd fwd = integrate(spec, F, Jc, nw.x, 0.5 * spec.T, spec.nt - nh, 1.0);
    res.t = Eigen::VectorXd::LinSpaced(spec.nt + 1, 0.0, spec.T);
    res.z.resize(spec.nt + 1, 2 * d);
    for (int k = 0; k <= nh; ++k)
        res.z.row(k) = back.row(nh - k) + z_bar.transpose();
    for (int k = nh; k <= spec.nt; ++k)
        res.z.row(k) = fwd.row(k - nh) + z_bar.transpose();
    return res;
}

}  // namespace turnpike
