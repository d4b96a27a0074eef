#include "turnpike/model.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace turnpike {

std::vector<int> window_nodes(int nx, double h, Interval w) {
    std::vector<int> nodes;
    for (int i = 1; i <= nx; ++i) {
        if (w.contains(i * h)) nodes.push_back(i - 1);
    }
    return nodes;
}

namespace {

Eigen::MatrixXd selector_columns(int dim, const std::vector<int>& nodes) {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(dim, static_cast<int>(nodes.size()));
    for (int j = 0; j < static_cast<int>(nodes.size()); ++j) S(nodes[j], j) = 1.0;
    return S;
}

Eigen::MatrixXd dirichlet_laplacian(int nx, double h) {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(nx, nx);
    const double w = 1.0 / (h * h);
    for (int i = 0; i < nx; ++i) {
        L(i, i) = -2.0 * w;
        if (i > 0) L(i, i - 1) = w;
        if (i + 1 < nx) L(i, i + 1) = w;
    }
    return L;
}

}  // namespace

LtiSystem make_abstract(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C) {
    if (A.rows() != A.cols()) throw DimensionMismatch("A must be square");
    if (B.rows() != A.rows()) throw DimensionMismatch("B must have d rows");
    if (C.cols() != A.rows()) throw DimensionMismatch("C must have d columns");
    if (!A.allFinite() || !B.allFinite() || !C.allFinite())
        throw NonFiniteState("plant matrices must be finite");
    LtiSystem sys;
    sys.A = std::move(A);
    sys.B = std::move(B);
    sys.C = std::move(C);
    sys.kind = PlantKind::abstract_plant;
    return sys;
}

LtiSystem build_heat_1d(int nx, Interval omega, Interval omega_obs) {
    if (nx < 2) throw OutOfRange("heat1d requires nx >= 2");
    const double h = 1.0 / (nx + 1);
    LtiSystem sys;
    sys.kind = PlantKind::heat1d;
    sys.mesh = Mesh{nx, h};
    sys.A = dirichlet_laplacian(nx, h);
    sys.control_nodes = window_nodes(nx, h, omega);
    sys.obs_nodes = window_nodes(nx, h, omega_obs);
    if (sys.control_nodes.empty()) throw WindowTooSmall("control window selects no nodes");
    if (sys.obs_nodes.empty()) throw WindowTooSmall("observation window selects no nodes");
    sys.B = selector_columns(nx, sys.control_nodes);
    sys.C = selector_columns(nx, sys.obs_nodes).transpose();
    return sys;
}

LtiSystem build_wave_1d(int nx, Interval omega, Interval omega_obs, WaveObservation obs) {
    if (nx < 2) throw OutOfRange("wave1d requires nx >= 2");
    const double h = 1.0 / (nx + 1);
    const int d = 2 * nx;
    LtiSystem sys;
    sys.kind = PlantKind::wave1d;
    sys.mesh = Mesh{nx, h};
    sys.A = Eigen::MatrixXd::Zero(d, d);
    sys.A.topRightCorner(nx, nx) = Eigen::MatrixXd::Identity(nx, nx);
    sys.A.bottomLeftCorner(nx, nx) = dirichlet_laplacian(nx, h);

    sys.control_nodes = window_nodes(nx, h, omega);
    if (sys.control_nodes.empty()) throw WindowTooSmall("control window selects no nodes");
    Eigen::MatrixXd S = selector_columns(nx, sys.control_nodes);
    sys.B = Eigen::MatrixXd::Zero(d, S.cols());
    sys.B.bottomRows(nx) = S;  // forcing acts on the velocity block

    sys.obs_nodes = window_nodes(nx, h, omega_obs);
    switch (obs) {
        case WaveObservation::full_state: {
            if (sys.obs_nodes.empty()) throw WindowTooSmall("observation window selects no nodes");
            Eigen::MatrixXd So = selector_columns(nx, sys.obs_nodes).transpose();
            sys.C = Eigen::MatrixXd::Zero(2 * So.rows(), d);
            sys.C.topLeftCorner(So.rows(), nx) = So;
            sys.C.bottomRightCorner(So.rows(), nx) = So;
            break;
        }
        case WaveObservation::l2_position: {
            if (sys.obs_nodes.empty()) throw WindowTooSmall("observation window selects no nodes");
            Eigen::MatrixXd So = selector_columns(nx, sys.obs_nodes).transpose();
            sys.C = Eigen::MatrixXd::Zero(So.rows(), d);
            sys.C.leftCols(nx) = So;
            break;
        }
        case WaveObservation::gradient: {
            // D^T D equals the (negated) Dirichlet Laplacian, so ||C y||^2 is
            // the discrete H^1_0 seminorm of the position block.
            Eigen::MatrixXd D = Eigen::MatrixXd::Zero(nx + 1, nx);
            for (int i = 0; i <= nx; ++i) {
                if (i < nx) D(i, i) = 1.0 / h;
                if (i > 0) D(i, i - 1) = -1.0 / h;
            }
            sys.C = Eigen::MatrixXd::Zero(nx + 1, d);
            sys.C.leftCols(nx) = D;
            break;
        }
        case WaveObservation::none: {
            sys.C = Eigen::MatrixXd::Zero(1, d);
            break;
        }
    }
    return sys;
}

LtiSystem build_transport_1d(int nx) {
    if (nx < 2) throw OutOfRange("transport1d requires nx >= 2");
    const double h = 1.0 / nx;
    LtiSystem sys;
    sys.kind = PlantKind::transport1d;
    sys.mesh = Mesh{nx, h};
    sys.A = Eigen::MatrixXd::Zero(nx, nx);
    for (int i = 0; i < nx; ++i) {
        sys.A(i, i) = -1.0 / h;
        if (i > 0) sys.A(i, i - 1) = 1.0 / h;
    }
    sys.B = Eigen::MatrixXd::Zero(nx, 1);
    sys.B(0, 0) = 1.0 / h;
    sys.C = std::sqrt(h) * Eigen::MatrixXd::Identity(nx, nx);
    return sys;
}

int kalman_rank(const LtiSystem& sys, double tol) {
    const Eigen::Index d = sys.dim();
    const Eigen::Index m = sys.inputs();
    Eigen::MatrixXd K(d, d * m);
    Eigen::MatrixXd block = sys.B;
    for (Eigen::Index k = 0; k < d; ++k) {
        K.middleCols(k * m, m) = block;
        if (k + 1 < d) block = sys.A * block;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(K);
    const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    int rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
        if (svd.singularValues()(i) > tol * smax) ++rank;
    }
    return rank;
}

namespace {

bool hautus_test(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double tol) {
    const Eigen::Index d = A.rows();
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    for (Eigen::Index i = 0; i < d; ++i) {
        const std::complex<double> lam = es.eigenvalues()(i);
        if (lam.real() < -1e-9) continue;
        Eigen::MatrixXcd M(d, d + B.cols());
        M.leftCols(d) = A.cast<std::complex<double>>() -
                        lam * Eigen::MatrixXcd::Identity(d, d);
        M.rightCols(B.cols()) = B.cast<std::complex<double>>();
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
        const double smax = svd.singularValues()(0);
        int rank = 0;
        for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k) {
            if (svd.singularValues()(k) > tol * smax) ++rank;
        }
        if (rank < d) return false;
    }
    return true;
}

}  // namespace

bool hautus_stabilizable(const LtiSystem& sys, double tol) {
    return hautus_test(sys.A, sys.B, tol);
}

bool hautus_detectable(const LtiSystem& sys, double tol) {
    return hautus_test(sys.A.transpose(), sys.C.transpose(), tol);
}

}  // namespace turnpike
