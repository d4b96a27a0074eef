#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>

#include "turnpike/lq.hpp"
#include "turnpike/semilinear.hpp"

namespace turnpike {

enum class Integrator { implicit_midpoint, rk4 };

/// Two-point boundary-value problem for the optimality field F over
/// z = (y, p) in R^{2d}, with boundary map G(z(0), z(T)) pinning y(0) = y0
/// and p(T) = pT.
struct ShootingSpec {
    int d = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> field;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> field_jacobian;  // optional
    /// Deviation field Ftilde(w) = F(z_steady + w), evaluated without forming
    /// z_steady + w, so tiny deviations are not lost to roundoff. Set by the
    /// make_* helpers when a steady triple is known.
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> field_centered;
    Eigen::VectorXd y0;
    Eigen::VectorXd pT;
    double T = 1.0;
    Integrator integrator = Integrator::rk4;
    int nt = 100;
    std::optional<Eigen::VectorXd> z_steady;  // (ybar, pbar)
};

ShootingSpec make_lq_shooting(const LtiSystem& sys, const QuadraticCost& cost,
                              const Eigen::VectorXd& y0, double T, int nt,
                              Integrator integrator = Integrator::rk4);

ShootingSpec make_semilinear_shooting(const SemilinearProblem& prob,
                                      const Eigen::VectorXd& y0, const Eigen::VectorXd& y_d,
                                      double T, int nt,
                                      Integrator integrator = Integrator::rk4);

/// Integrates the field forward from z0 and evaluates the boundary map;
/// throws NonFiniteState on blow-up.
Eigen::VectorXd residual(const ShootingSpec& spec, const Eigen::VectorXd& z0);

struct ShootResult {
    Eigen::VectorXd unknown;      // converged p(0) (standard) or z(T/2) (turnpike)
    int iterations = 0;
    bool converged = false;
    double final_residual = 0.0;
    double jacobian_condition = 0.0;
    Eigen::VectorXd t;            // reconstruction grid
    Eigen::MatrixXd z;            // (nt+1) x 2d reconstructed trajectory
};

/// Damped Newton on the d unknown adjoint components p(0), forward
/// finite-difference Jacobian, convergence at ||R|| <= 1e-8, cap 50.
ShootResult shoot_standard(const ShootingSpec& spec, const Eigen::VectorXd& p0_guess);

/// Algorithm variant with unknown z(T/2), initialized at the steady pair:
/// each evaluation integrates backward to 0 and forward to T. Integrates in
/// deviation variables around (ybar, pbar) when the spec provides them.
ShootResult shoot_turnpike(const ShootingSpec& spec, const Eigen::VectorXd& y_bar,
                           const Eigen::VectorXd& p_bar);

}  // namespace turnpike
