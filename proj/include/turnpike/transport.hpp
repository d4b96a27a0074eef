#pragma once

#include <vector>

#include "turnpike/errors.hpp"

namespace turnpike {

/// Piecewise polynomial on [0,1] with exact integration; the building block
/// for the transport closed forms, which must be beyond numerical doubt.
class PiecewisePoly {
  public:
    /// breaks: x_0 = 0 < x_1 < ... < x_K = 1; coeffs[k] are the polynomial
    /// coefficients (ascending powers of (x - x_k)) on [x_k, x_{k+1}].
    PiecewisePoly(std::vector<double> breaks, std::vector<std::vector<double>> coeffs);

    static PiecewisePoly constant(double c);
    /// a + b*x on [0,1]
    static PiecewisePoly linear(double a, double b);
    /// values[k] on [breaks[k], breaks[k+1])
    static PiecewisePoly step(std::vector<double> breaks, std::vector<double> values);

    double eval(double x) const;
    /// exact integral over [a,b] (clipped to [0,1])
    double integral(double a, double b) const;
    /// antiderivative F with F(0) = 0, again piecewise polynomial
    PiecewisePoly antiderivative() const;

  private:
    std::vector<double> breaks_;
    std::vector<std::vector<double>> coeffs_;
};

struct TransportTarget {
    PiecewisePoly y_d;
};

/// u_T(t) = 0.5 * int_0^{min(1, T-t)} y_d  (constant along characteristics).
double optimal_control(const TransportTarget& target, double T, double t);

/// Mass of the optimal state, int_0^1 y_T(t,x) dx, via the three-branch
/// closed form (valid for T > 2): transport of the initial datum for t <= 1,
/// the steady plateau for 1 < t < T-1, and the exit integral for t >= T-1.
double state_mass(const PiecewisePoly& y0, const TransportTarget& target, double T,
                  double t);

/// Steady optimum value ubar = ybar = 0.5 * int_0^1 y_d.
double steady_optimum(const TransportTarget& target);

}  // namespace turnpike
