#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "turnpike/model.hpp"

using namespace turnpike;

TEST_CASE("heat1d nx=3 full windows is the 3-point stencil with identity B, C") {
    LtiSystem sys = build_heat_1d(3, {0.0, 1.0}, {0.0, 1.0});
    const double h = 0.25;
    Eigen::MatrixXd A(3, 3);
    A << -2, 1, 0, 1, -2, 1, 0, 1, -2;
    A /= h * h;
    CHECK((sys.A - A).norm() == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(sys.B.isIdentity(0.0));
    CHECK(sys.C.isIdentity(0.0));
}

TEST_CASE("heat1d control window mask counting") {
    LtiSystem sys = build_heat_1d(50, {0.25, 0.75}, {0.0, 1.0});
    const double h = 1.0 / 51.0;
    int count = 0;
    for (int i = 1; i <= 50; ++i)
        if (0.25 < i * h && i * h < 0.75) ++count;
    CHECK(static_cast<int>(sys.B.cols()) == count);
    // each column is a characteristic-function column
    for (int j = 0; j < sys.B.cols(); ++j) {
        CHECK(sys.B.col(j).sum() == 1.0);
        CHECK(sys.B.col(j).maxCoeff() == 1.0);
    }
}

TEST_CASE("heat1d nx=200 lowest eigenvalue approximates pi^2 within 0.1%") {
    LtiSystem sys = build_heat_1d(200, {0.0, 1.0}, {0.0, 1.0});
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-sys.A);
    const double lam_min = es.eigenvalues().minCoeff();
    // oracle: exact FD eigenvalue (4/h^2) sin^2(pi h / 2) for the lowest mode
    const double h = sys.mesh->h;
    const double fd_exact = 4.0 / (h * h) * std::pow(std::sin(M_PI * h / 2.0), 2);
    CHECK(lam_min == doctest::Approx(fd_exact).epsilon(1e-10));
    CHECK(std::abs(lam_min - M_PI * M_PI) / (M_PI * M_PI) < 1e-3);
}

TEST_CASE("heat1d is symmetric negative definite") {
    LtiSystem sys = build_heat_1d(17, {0.2, 0.9}, {0.1, 0.6});
    CHECK((sys.A - sys.A.transpose()).norm() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.A);
    CHECK(es.eigenvalues().maxCoeff() < -1e-10);
}

TEST_CASE("wave1d nx=2 eigenvalues are +-i sqrt(lambda_j)") {
    LtiSystem sys = build_wave_1d(2, {0.0, 1.0}, {0.0, 1.0});
    // oracle: direct eigensolve of the 2x2 FD Laplacian
    const double h = 1.0 / 3.0;
    Eigen::Matrix2d L;
    L << 2, -1, -1, 2;
    L /= h * h;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> lap(L);
    Eigen::EigenSolver<Eigen::MatrixXd> es(sys.A);
    std::vector<double> expected, got;
    for (int j = 0; j < 2; ++j) {
        expected.push_back(std::sqrt(lap.eigenvalues()(j)));
        expected.push_back(-std::sqrt(lap.eigenvalues()(j)));
    }
    for (int j = 0; j < 4; ++j) {
        CHECK(std::abs(es.eigenvalues()(j).real()) < 1e-9);
        got.push_back(es.eigenvalues()(j).imag());
    }
    std::sort(expected.begin(), expected.end());
    std::sort(got.begin(), got.end());
    for (int j = 0; j < 4; ++j) CHECK(got[j] == doctest::Approx(expected[j]).epsilon(1e-9));
}

TEST_CASE("wave1d empty control window rejected") {
    CHECK_THROWS_AS(build_wave_1d(10, {0.401, 0.402}, {0.0, 1.0}), WindowTooSmall);
}

TEST_CASE("wave1d spectrum is purely imaginary (skew block structure)") {
    LtiSystem sys = build_wave_1d(20, {0.0, 1.0}, {0.0, 1.0});
    Eigen::EigenSolver<Eigen::MatrixXd> es(sys.A, false);
    CHECK(es.eigenvalues().real().cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("transport1d structure and scheme consistency") {
    LtiSystem sys = build_transport_1d(4);
    const double h = 0.25;
    for (int i = 0; i < 4; ++i) {
        CHECK(sys.A(i, i) == doctest::Approx(-1.0 / h));
        if (i > 0) CHECK(sys.A(i, i - 1) == doctest::Approx(1.0 / h));
    }
    // constant state with matching boundary input is steady: A*1 + B*1 = 0
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(4);
    CHECK((sys.A * ones + sys.B * Eigen::VectorXd::Ones(1)).norm() < 1e-12);
    // interior rows sum to zero
    for (int i = 1; i < 4; ++i) CHECK(std::abs(sys.A.row(i).sum()) < 1e-12);
}

TEST_CASE("transport1d free solution moves a bump with speed one") {
    const int nx = 200;
    LtiSystem sys = build_transport_1d(nx);
    const double h = sys.mesh->h;
    // initial bump centered at 0.25, integrate du/dt = A u to t = 0.5
    Eigen::VectorXd y(nx);
    for (int i = 0; i < nx; ++i) {
        const double x = (i + 1) * h;
        y(i) = std::exp(-std::pow((x - 0.25) / 0.05, 2));
    }
    const double T = 0.5;
    const int nt = 4000;
    const double dt = T / nt;
    Eigen::MatrixXd E = Eigen::MatrixXd::Identity(nx, nx) - 0.5 * dt * sys.A;
    Eigen::MatrixXd F = Eigen::MatrixXd::Identity(nx, nx) + 0.5 * dt * sys.A;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(E);
    for (int k = 0; k < nt; ++k) y = lu.solve(F * y);
    Eigen::Index arg;
    y.maxCoeff(&arg);
    const double peak = (arg + 1) * h;
    // method-of-characteristics reference: the peak sits at 0.25 + 0.5
    CHECK(std::abs(peak - 0.75) <= 2.0 * h);
}

TEST_CASE("kalman rank basics") {
    LtiSystem s1 = make_abstract(Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Ones(1, 1),
                                 Eigen::MatrixXd::Ones(1, 1));
    CHECK(kalman_rank(s1) == 1);

    Eigen::MatrixXd A(2, 2), B(2, 1);
    A << 0, 1, 0, 0;
    B << 0, 1;
    // oracle: [B, AB] = [[0,1],[1,0]], full rank
    LtiSystem s2 = make_abstract(A, B, Eigen::MatrixXd::Identity(2, 2));
    CHECK(kalman_rank(s2) == 2);

    LtiSystem s3 = make_abstract(A, Eigen::MatrixXd::Zero(2, 1),
                                 Eigen::MatrixXd::Identity(2, 2));
    CHECK(kalman_rank(s3) == 0);
}

TEST_CASE("kalman rank is invariant under similarity transforms") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 5; ++trial) {
        const int d = 4;
        Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(
            d, d, [&](Eigen::Index, Eigen::Index) { return g(rng); });
        Eigen::MatrixXd B = Eigen::MatrixXd::NullaryExpr(
            d, 2, [&](Eigen::Index, Eigen::Index) { return g(rng); });
        Eigen::MatrixXd T = Eigen::MatrixXd::Identity(d, d) +
                            0.3 * Eigen::MatrixXd::NullaryExpr(
                                      d, d, [&](Eigen::Index, Eigen::Index) { return g(rng); });
        LtiSystem s = make_abstract(A, B, Eigen::MatrixXd::Identity(d, d));
        LtiSystem st = make_abstract(T.inverse() * A * T, T.inverse() * B,
                                     Eigen::MatrixXd::Identity(d, d));
        CHECK(kalman_rank(s) == kalman_rank(st));
    }
}

TEST_CASE("hautus tests") {
    Eigen::MatrixXd A = Eigen::MatrixXd::Ones(1, 1);  // unstable
    LtiSystem good = make_abstract(A, Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1));
    CHECK(hautus_stabilizable(good));
    LtiSystem bad = make_abstract(A, Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Ones(1, 1));
    CHECK_FALSE(hautus_stabilizable(bad));

    // stable A makes the test vacuous
    LtiSystem heat = build_heat_1d(12, {0.4, 0.6}, {0.1, 0.2});
    CHECK(hautus_stabilizable(heat));
    CHECK(hautus_detectable(heat));

    // FD waves are controllable from any interior window in 1D
    LtiSystem wave = build_wave_1d(8, {0.3, 0.6}, {0.0, 1.0});
    CHECK(hautus_stabilizable(wave));
}
