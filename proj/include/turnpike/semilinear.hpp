#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "turnpike/model.hpp"

namespace turnpike {

enum class NonlinearityKind { cubic, tanh_sat, custom };

/// Pointwise nonlinearity with f(0) = 0. Built-ins: cubic (f' >= 0) and
/// tanh (globally Lipschitz).
struct Nonlinearity {
    NonlinearityKind kind = NonlinearityKind::cubic;
    std::function<double(double)> f, fp, fpp;
    double lipschitz = 0.0;  // finite for tanh_sat/custom

    static Nonlinearity cubic();
    static Nonlinearity tanh_sat();
    static Nonlinearity custom(std::function<double(double)> f,
                               std::function<double(double)> fp,
                               std::function<double(double)> fpp, double L);
    static Nonlinearity zero();
};

enum class ControlMode { distributed, boundary };

/// Semilinear heat plant -Lap_h y + f(y) = B u on nx interior nodes of (0,1).
/// boundary mode: scalar control u sets both Dirichlet values, entering the
/// scheme through ghost-node elimination as (u/h^2)(e_1 + e_nx).
struct SemilinearProblem {
    int nx = 0;
    double h = 0.0;
    Eigen::MatrixXd L;  // -Lap_h, positive definite
    Nonlinearity f;
    std::vector<int> omega, omega_obs;  // node masks (distributed mode)
    ControlMode control_mode = ControlMode::distributed;

    int control_dim() const {
        return control_mode == ControlMode::boundary ? 1 : static_cast<int>(omega.size());
    }
    /// control injection: Bu as a length-nx vector
    Eigen::VectorXd inject(const Eigen::VectorXd& u) const;
    /// adjoint of inject
    Eigen::VectorXd restrict_control(const Eigen::VectorXd& v) const;
};

SemilinearProblem make_semilinear(int nx, Nonlinearity f, Interval omega,
                                  Interval omega_obs,
                                  ControlMode mode = ControlMode::distributed);

struct SteadySolveOptions {
    double theta = 0.5;       // relaxation, halved on residual increase
    double tol = 1e-10;       // on the residual, relative to 1 + ||Bu||
    int max_iters = 100000;
    bool newton_fallback = true;  // engage damped Newton if the fixed point stalls
};

/// Solves -Lap_h y + f(y) = B u by the relaxed fixed point
/// y <- (1-theta) y + theta L^{-1}(B u - f(y)).
Eigen::VectorXd solve_steady_state(const SemilinearProblem& prob, const Eigen::VectorXd& u,
                                   SteadySolveOptions opts = {});

struct ScanMinimizer {
    double u = 0.0;
    double J = 0.0;
    bool global = false;  // within 1e-3 relative of the best minimum
};

struct ScanResult {
    Eigen::VectorXd u_grid, J_values;
    std::vector<ScanMinimizer> minimizers;
    int failed_samples = 0;
};

/// Constant-control objective J(u) = 0.5 ||y(u) - y_d||_{L2}^2 + control term
/// (boundary: u^2 = 0.5 * meas(S^0) * u^2; distributed: 0.5 * meas(omega) * u^2).
double constant_control_objective(const SemilinearProblem& prob, const Eigen::VectorXd& y_d,
                                  double u);

/// Samples J on a uniform grid, refines local minima by golden section and
/// flags global minimizers (ties within 1e-3 relative).
ScanResult scan_constant_controls(const SemilinearProblem& prob, const Eigen::VectorXd& y_d,
                                  double u_lo, double u_hi, int n_samples);

struct SemilinearOcpOptions {
    int max_iters = 2000;
    double grad_tol = 1e-7;
    double armijo_c = 1e-4;
    double initial_step = 1.0;
    int multistart = 1;
    std::uint64_t seed = 0;
};

struct SemilinearTrajectory {
    Eigen::VectorXd t;           // nt+1 nodes
    Eigen::MatrixXd y;           // (nt+1) x nx
    Eigen::MatrixXd u;           // nt x m (interval controls)
    double objective = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    std::vector<double> multistart_objectives;
};

/// Minimizes 0.5 int ||y-y_d||^2_{omega_obs} + 0.5 int ||u||^2_omega by
/// gradient descent with Armijo line search; the gradient comes from the
/// exact discrete adjoint of the implicit-midpoint forward scheme.
SemilinearTrajectory solve_ocp(const SemilinearProblem& prob, const Eigen::VectorXd& y0,
                               const Eigen::VectorXd& y_d, double T, int nt,
                               SemilinearOcpOptions opts = {});

/// Objective of an arbitrary interval-control path under the same
/// discretization as solve_ocp.
double evaluate_objective(const SemilinearProblem& prob, const Eigen::VectorXd& y0,
                          const Eigen::VectorXd& y_d, double T,
                          const Eigen::MatrixXd& u_path);

/// Gradient of the same discrete objective (exact adjoint), for testing.
Eigen::MatrixXd objective_gradient(const SemilinearProblem& prob, const Eigen::VectorXd& y0,
                                   const Eigen::VectorXd& y_d, double T,
                                   const Eigen::MatrixXd& u_path);

/// Steady-functional Hessian action J''(u) v v =
///   ||eta_v||^2_{L2} + ||v||^2 - <f''(y) phi, eta_v^2>_{L2}
/// with eta_v the linearized state and phi the steady adjoint.
double hessian_action(const SemilinearProblem& prob, const Eigen::VectorXd& y_d,
                      const Eigen::VectorXd& u, const Eigen::VectorXd& v);

struct QuasiTurnpikeControl {
    Eigen::MatrixXd u;     // (nt+1) x m nodal control path on [0, T]
    double entry_energy = 0.0;
    int correction_iterations = 0;
};

/// Linear plants: minimal-energy Gramian entry leg on [0, T0], steady hold,
/// optional exit leg to y_exit on [T-T0, T].
QuasiTurnpikeControl quasi_turnpike_control(const LtiSystem& sys, const Eigen::VectorXd& y0,
                                            const Eigen::VectorXd& y_bar, double T,
                                            double T0, int nt,
                                            const Eigen::VectorXd* y_exit = nullptr);

/// Semilinear plants: the linear-plant control applied to the nonlinear
/// dynamics with a fixed-point correction of the entry target until the
/// terminal miss at T0 is <= 1e-6.
QuasiTurnpikeControl quasi_turnpike_control(const SemilinearProblem& prob,
                                            const Eigen::VectorXd& y0,
                                            const Eigen::VectorXd& y_bar, double T,
                                            double T0, int nt);

/// Integrates the semilinear plant under a nodal control path (implicit
/// midpoint, interval controls = node averages); returns states at nodes.
Eigen::MatrixXd simulate_semilinear(const SemilinearProblem& prob, const Eigen::VectorXd& y0,
                                    double T, const Eigen::MatrixXd& u_nodes);

}  // namespace turnpike
