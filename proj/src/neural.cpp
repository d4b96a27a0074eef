#include "turnpike/neural.hpp"

#include <cmath>
#include <random>

#include "turnpike/errors.hpp"

namespace turnpike {

namespace {

double act(Activation a, double x) {
    return a == Activation::tanh_act ? std::tanh(x) : std::max(x, 0.0);
}

double act_d(Activation a, double x) {
    if (a == Activation::tanh_act) {
        const double t = std::tanh(x);
        return 1.0 - t * t;
    }
    return x > 0.0 ? 1.0 : 0.0;
}

Eigen::MatrixXd apply_act(Activation a, const Eigen::MatrixXd& X) {
    return X.unaryExpr([a](double v) { return act(a, v); });
}

Eigen::MatrixXd apply_act_d(Activation a, const Eigen::MatrixXd& X) {
    return X.unaryExpr([a](double v) { return act_d(a, v); });
}

}  // namespace

Eigen::MatrixXd LearningTask::initial_states() const {
    if (!augment) return X;
    Eigen::MatrixXd X0(X.rows(), X.cols() + 1);
    X0.leftCols(X.cols()) = X;
    X0.rightCols(1).setZero();
    return X0;
}

Params Params::zero(int nt, int d) {
    Params p;
    p.w.assign(nt, Eigen::MatrixXd::Zero(d, d));
    p.b.assign(nt, Eigen::VectorXd::Zero(d));
    return p;
}

Params Params::random(int nt, int d, double scale, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, scale);
    Params p;
    p.w.reserve(nt);
    p.b.reserve(nt);
    for (int k = 0; k < nt; ++k) {
        p.w.push_back(Eigen::MatrixXd::NullaryExpr(
            d, d, [&](Eigen::Index, Eigen::Index) { return g(rng); }));
        p.b.push_back(Eigen::VectorXd::NullaryExpr(d, [&](Eigen::Index) { return g(rng); }));
    }
    return p;
}

LearningTask make_two_cluster_task(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.35);
    LearningTask task;
    task.X.resize(n, 2);
    task.Y.resize(n, 1);
    task.labels.resize(n);
    for (int i = 0; i < n; ++i) {
        const int cls = i % 2;
        const double cx = cls == 0 ? -1.5 : 1.5;
        task.X(i, 0) = cx + g(rng);
        task.X(i, 1) = g(rng);
        task.Y(i, 0) = cls == 0 ? -1.0 : 1.0;
        task.labels[i] = cls;
    }
    const int d = task.state_dim();
    // fixed output map with seeded orthogonal-ish rows
    std::mt19937_64 rng2(seed + 1);
    std::normal_distribution<double> g2(0.0, 1.0);
    Eigen::MatrixXd R = Eigen::MatrixXd::NullaryExpr(
        d, 1, [&](Eigen::Index, Eigen::Index) { return g2(rng2); });
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(R);
    Eigen::MatrixXd Qm = qr.householderQ() * Eigen::MatrixXd::Identity(d, 1);
    task.P_w = Qm.transpose();
    task.P_b = Eigen::VectorXd::Zero(1);
    return task;
}

LearningTask make_annulus_task(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> rad(0.0, 1.0);
    LearningTask task;
    task.X.resize(n, 2);
    task.Y.resize(n, 1);
    task.labels.resize(n);
    for (int i = 0; i < n; ++i) {
        const int cls = i % 2;
        const double r = cls == 0 ? 0.5 * rad(rng) : 1.0 + 0.5 * rad(rng);
        const double a = ang(rng);
        task.X(i, 0) = r * std::cos(a);
        task.X(i, 1) = r * std::sin(a);
        task.Y(i, 0) = cls == 0 ? -1.0 : 1.0;
        task.labels[i] = cls;
    }
    const int d = task.state_dim();
    std::mt19937_64 rng2(seed + 1);
    std::normal_distribution<double> g2(0.0, 1.0);
    Eigen::MatrixXd R = Eigen::MatrixXd::NullaryExpr(
        d, 1, [&](Eigen::Index, Eigen::Index) { return g2(rng2); });
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(R);
    task.P_w = (qr.householderQ() * Eigen::MatrixXd::Identity(d, 1)).transpose();
    task.P_b = Eigen::VectorXd::Zero(1);
    return task;
}

std::vector<Eigen::MatrixXd> forward(const LearningTask& task, const Params& params) {
    const int d = task.state_dim();
    if (static_cast<int>(params.w.size()) != task.nt || params.w[0].rows() != d)
        throw DimensionMismatch("parameter stack does not match the task");
    const double dt = task.T / task.nt;
    std::vector<Eigen::MatrixXd> states(task.nt + 1);
    states[0] = task.initial_states();
    for (int k = 0; k < task.nt; ++k) {
        const Eigen::MatrixXd& Xk = states[k];
        Eigen::MatrixXd drift;
        if (task.dynamics == DynamicsForm::inside) {
            Eigen::MatrixXd pre = Xk * params.w[k].transpose();
            pre.rowwise() += params.b[k].transpose();
            drift = apply_act(task.sigma, pre);
        } else {
            drift = apply_act(task.sigma, Xk) * params.w[k].transpose();
            drift.rowwise() += params.b[k].transpose();
        }
        states[k + 1] = Xk + dt * drift;
        if (!states[k + 1].allFinite()) throw NonFiniteState("forward pass blew up");
    }
    return states;
}

double empirical_risk(const LearningTask& task, const Eigen::MatrixXd& states_at_k) {
    const int n = task.samples();
    Eigen::MatrixXd logits = states_at_k * task.P_w.transpose();
    logits.rowwise() += task.P_b.transpose();
    double acc = 0.0;
    if (task.loss == LossKind::squared) {
        acc = (logits - task.Y).squaredNorm() / n;
    } else {
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd row = logits.row(i).transpose();
            const double mx = row.maxCoeff();
            const double lse = mx + std::log((row.array() - mx).exp().sum());
            acc += (lse - row(task.labels[i])) / n;
        }
    }
    return acc;
}

namespace {

// d(risk)/d(states): n x d matrix
Eigen::MatrixXd risk_grad(const LearningTask& task, const Eigen::MatrixXd& states) {
    const int n = task.samples();
    Eigen::MatrixXd logits = states * task.P_w.transpose();
    logits.rowwise() += task.P_b.transpose();
    Eigen::MatrixXd glogits(logits.rows(), logits.cols());
    if (task.loss == LossKind::squared) {
        glogits = 2.0 * (logits - task.Y) / n;
    } else {
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd row = logits.row(i).transpose();
            const double mx = row.maxCoeff();
            Eigen::VectorXd p = (row.array() - mx).exp();
            p /= p.sum();
            p(task.labels[i]) -= 1.0;
            glogits.row(i) = p.transpose() / n;
        }
    }
    return glogits * task.P_w;
}

std::vector<double> risk_weights(const LearningTask& task, TrainObjective obj) {
    // trapezoid weights for the integrated risk; final objective weights only
    // the last layer
    std::vector<double> w(task.nt + 1, 0.0);
    if (obj == TrainObjective::final_cost) {
        w[task.nt] = 1.0;
    } else {
        const double dt = task.T / task.nt;
        for (int k = 0; k <= task.nt; ++k)
            w[k] = (k == 0 || k == task.nt) ? 0.5 * dt : dt;
    }
    return w;
}

double reg_term(const LearningTask& task, const Params& params) {
    const double dt = task.T / task.nt;
    double acc = 0.0;
    if (task.reg == RegNorm::l2) {
        for (int k = 0; k < task.nt; ++k) acc += dt * params.sq_norm_layer(k);
    } else {
        // discrete H1: ||u||_L2^2 + ||u'||_L2^2 with forward differences
        for (int k = 0; k < task.nt; ++k) acc += dt * params.sq_norm_layer(k);
        for (int k = 0; k + 1 < task.nt; ++k) {
            acc += ((params.w[k + 1] - params.w[k]).squaredNorm() +
                    (params.b[k + 1] - params.b[k]).squaredNorm()) /
                   dt;
        }
    }
    return task.alpha * acc;
}

}  // namespace

double objective(const LearningTask& task, const Params& params, TrainObjective obj) {
    auto states = forward(task, params);
    const auto w = risk_weights(task, obj);
    double J = reg_term(task, params);
    for (int k = 0; k <= task.nt; ++k)
        if (w[k] != 0.0) J += w[k] * empirical_risk(task, states[k]);
    return J;
}

Params grad(const LearningTask& task, const Params& params, TrainObjective obj) {
    const int d = task.state_dim();
    const double dt = task.T / task.nt;
    auto states = forward(task, params);
    const auto wts = risk_weights(task, obj);

    Params g = Params::zero(task.nt, d);
    // regularization gradient
    for (int k = 0; k < task.nt; ++k) {
        g.w[k] = 2.0 * task.alpha * dt * params.w[k];
        g.b[k] = 2.0 * task.alpha * dt * params.b[k];
    }
    if (task.reg == RegNorm::h1) {
        for (int k = 0; k + 1 < task.nt; ++k) {
            Eigen::MatrixXd dw = (params.w[k + 1] - params.w[k]) * (2.0 * task.alpha / dt);
            Eigen::VectorXd db = (params.b[k + 1] - params.b[k]) * (2.0 * task.alpha / dt);
            g.w[k] -= dw;
            g.w[k + 1] += dw;
            g.b[k] -= db;
            g.b[k + 1] += db;
        }
    }

    // reverse sweep: lambda is d(risk terms)/d(states[k])
    Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(task.samples(), d);
    if (wts[task.nt] != 0.0) lambda = wts[task.nt] * risk_grad(task, states[task.nt]);
    for (int k = task.nt - 1; k >= 0; --k) {
        const Eigen::MatrixXd& Xk = states[k];
        if (task.dynamics == DynamicsForm::inside) {
            Eigen::MatrixXd pre = Xk * params.w[k].transpose();
            pre.rowwise() += params.b[k].transpose();
            Eigen::MatrixXd sd = apply_act_d(task.sigma, pre);
            Eigen::MatrixXd mu = dt * lambda.cwiseProduct(sd);  // n x d
            g.w[k] += mu.transpose() * Xk;
            g.b[k] += mu.colwise().sum().transpose();
            lambda += mu * params.w[k];
        } else {
            Eigen::MatrixXd sx = apply_act(task.sigma, Xk);
            g.w[k] += dt * lambda.transpose() * sx;
            g.b[k] += dt * lambda.colwise().sum().transpose();
            lambda += dt * (lambda * params.w[k]).cwiseProduct(apply_act_d(task.sigma, Xk));
        }
        if (wts[k] != 0.0) lambda += wts[k] * risk_grad(task, states[k]);
    }
    return g;
}

namespace {

double params_dot(const Params& a, const Params& b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.w.size(); ++k)
        acc += a.w[k].cwiseProduct(b.w[k]).sum() + a.b[k].dot(b.b[k]);
    return acc;
}

}  // namespace

TrainResult train(const LearningTask& task, TrainObjective obj, TrainOptions opts) {
    const int d = task.state_dim();
    Params p = opts.init_scale > 0.0
                   ? Params::random(task.nt, d, opts.init_scale, opts.seed)
                   : Params::zero(task.nt, d);
    TrainResult res;
    double J = objective(task, p, obj);
    res.history.push_back(J);
    double step = opts.initial_step;
    for (int it = 0; it < opts.max_iters; ++it) {
        Params g = grad(task, p, obj);
        const double gnorm2 = params_dot(g, g);
        res.grad_norm = std::sqrt(gnorm2);
        if (res.grad_norm <= opts.grad_tol) break;
        bool accepted = false;
        double s = step;
        while (s > 1e-18) {
            Params pt = p;
            for (int k = 0; k < task.nt; ++k) {
                pt.w[k] -= s * g.w[k];
                pt.b[k] -= s * g.b[k];
            }
            double Jt;
            try {
                Jt = objective(task, pt, obj);
            } catch (const NonFiniteState&) {
                s *= 0.5;
                continue;
            }
            if (Jt <= J - opts.armijo_c * s * gnorm2) {
                p = pt;
                J = Jt;
                accepted = true;
                step = std::min(2.0 * s, 1e4);
                break;
            }
            s *= 0.5;
        }
        res.iterations = it + 1;
        if (!accepted) {
            if (res.grad_norm <= 1e3 * opts.grad_tol) break;
            throw LineSearchStalled("training step underflow at |g| = " +
                                    std::to_string(res.grad_norm));
        }
        res.history.push_back(J);
    }
    res.params = p;
    return res;
}

DecayReport decay_report(const LearningTask& task, const Params& params, double threshold) {
    auto states = forward(task, params);
    DecayReport rep;
    rep.threshold = threshold;
    rep.E_curve.resize(task.nt + 1);
    rep.u_norm_curve.resize(task.nt);
    for (int k = 0; k <= task.nt; ++k) rep.E_curve(k) = empirical_risk(task, states[k]);
    for (int k = 0; k < task.nt; ++k) rep.u_norm_curve(k) = params.sq_norm_layer(k);

    Eigen::VectorXd combined(task.nt);
    Eigen::VectorXd tgrid(task.nt);
    const double dt = task.T / task.nt;
    for (int k = 0; k < task.nt; ++k) {
        combined(k) = rep.E_curve(k) + rep.u_norm_curve(k);
        tgrid(k) = k * dt;
        if (rep.stopping_layer < 0 && combined(k) <= threshold) rep.stopping_layer = k;
    }
    try {
        rep.fitted = fit_decay(combined, tgrid, FitSide::entry, 0.0, task.T);
    } catch (const WindowEmpty&) {
        rep.fitted = DecayFit{};
        rep.fitted.flat = true;
    }
    return rep;
}

Params rescale_control(const LearningTask& task, const Params& params_T, double T) {
    const bool homogeneous =
        task.dynamics == DynamicsForm::outside ||
        (task.dynamics == DynamicsForm::inside && task.sigma == Activation::relu);
    if (!homogeneous)
        throw NotHomogeneous("tanh inside-form dynamics are not 1-homogeneous in u");
    Params p1 = params_T;
    for (std::size_t k = 0; k < p1.w.size(); ++k) {
        p1.w[k] *= T;
        p1.b[k] *= T;
    }
    return p1;
}

double classification_accuracy(const LearningTask& task, const Params& params) {
    auto states = forward(task, params);
    Eigen::MatrixXd logits = states[task.nt] * task.P_w.transpose();
    logits.rowwise() += task.P_b.transpose();
    int correct = 0;
    for (int i = 0; i < task.samples(); ++i) {
        if (task.loss == LossKind::squared) {
            const bool pos = logits(i, 0) > 0.0;
            if ((task.Y(i, 0) > 0.0) == pos) ++correct;
        } else {
            Eigen::Index arg;
            logits.row(i).maxCoeff(&arg);
            if (static_cast<int>(arg) == task.labels[i]) ++correct;
        }
    }
    return static_cast<double>(correct) / task.samples();
}

}  // namespace turnpike
