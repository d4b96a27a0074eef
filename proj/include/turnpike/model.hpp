#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "turnpike/errors.hpp"

namespace turnpike {

enum class PlantKind { abstract_plant, heat1d, wave1d, transport1d };

/// Open subinterval of (0,1) used as a control or observation window.
struct Interval {
    double lo = 0.0;
    double hi = 1.0;
    bool contains(double x) const { return lo < x && x < hi; }
};

struct Mesh {
    int nx = 0;
    double h = 0.0;
};

/// Finite-dimensional plant dy/dt = A y + B u with observation C y.
///
/// Heat and wave plants use plain characteristic-function selectors for B
/// and C (entries 0/1, no mass weighting). The transport plant folds the
/// spatial quadrature weight sqrt(h) into C so that ||Cy - y_d||^2 is the
/// composite L2(0,1) misfit; targets for it must be given in that weighted
/// observation space.
struct LtiSystem {
    Eigen::MatrixXd A;  // d x d
    Eigen::MatrixXd B;  // d x m
    Eigen::MatrixXd C;  // s x d
    PlantKind kind = PlantKind::abstract_plant;
    std::optional<Mesh> mesh;
    std::vector<int> control_nodes;  // indices selected by omega
    std::vector<int> obs_nodes;      // indices selected by omega_obs

    Eigen::Index dim() const { return A.rows(); }
    Eigen::Index inputs() const { return B.cols(); }
    Eigen::Index outputs() const { return C.rows(); }
};

LtiSystem make_abstract(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C);

/// Dirichlet heat plant on nx interior nodes of (0,1), h = 1/(nx+1).
/// A = tridiag(1,-2,1)/h^2; B selects nodes in omega, C nodes in omega_obs.
LtiSystem build_heat_1d(int nx, Interval omega, Interval omega_obs);

/// Observation choices for the wave plant. The default penalizes the full
/// (position, velocity) state; l2_position tracks only the position block;
/// gradient uses the first-difference matrix D with D^T D = -Laplacian.
enum class WaveObservation { full_state, l2_position, gradient, none };

/// Wave plant as a first-order system of dimension 2*nx:
/// A = [[0, I], [Lap_h, 0]], control injected into the velocity block on omega.
LtiSystem build_wave_1d(int nx, Interval omega, Interval omega_obs,
                        WaveObservation obs = WaveObservation::full_state);

/// Upwind transport plant on nx nodes x_i = i*h, h = 1/nx, with boundary
/// control entering at node 1 through B = e_1 / h and C = sqrt(h) * Id.
LtiSystem build_transport_1d(int nx);

/// Numerical rank of [B, AB, ..., A^{d-1}B]. Singular values below
/// tol * sigma_max count as zero.
int kalman_rank(const LtiSystem& sys, double tol = 1e-10);

/// Hautus tests over eigenvalues with nonnegative real part.
bool hautus_stabilizable(const LtiSystem& sys, double tol = 1e-10);
bool hautus_detectable(const LtiSystem& sys, double tol = 1e-10);

/// Nodes of the uniform grid x_i = i*h (i = 1..nx) falling inside w.
std::vector<int> window_nodes(int nx, double h, Interval w);

}  // namespace turnpike
