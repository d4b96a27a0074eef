#pragma once

// Test-only closed forms, independent of the library solution paths.

#include <cmath>

namespace oracles {

// Scalar plant A=0, B=1, C=1, alpha=1, y_d, no payoff: the backward Riccati
// matrix is P(t) = tanh(T-t) and the feedforward gives the closed-form optimum
//   y(t) = ybar + (y0-ybar) cosh(T-t)/cosh(T)  with ybar = y_d/... (A=0: ybar=y_d, pbar=0)
// Derivation: dy/dt = p, dp/dt = y - y_d, p(T)=0; deviation e = y - y_d solves
// e'' = e with e'(T)=0, so e(t) = e(0) cosh(T-t)/cosh(T), p = e' .
struct Scalar {
    double y_d;
    double T;
    double y0;
    double y(double t) const {
        return y_d + (y0 - y_d) * std::cosh(T - t) / std::cosh(T);
    }
    double p(double t) const {
        return -(y0 - y_d) * std::sinh(T - t) / std::cosh(T);
    }
    double u(double t) const { return p(t); }
    // running cost 0.5 (y-yd)^2 + 0.5 u^2 integrated exactly:
    // 0.5 e0^2 [cosh^2 + sinh^2]/cosh^2(T) integrated = 0.5 e0^2 * ...
    double objective() const {
        const double e0 = y0 - y_d;
        // int_0^T cosh^2(s) + sinh^2(s) ds = int cosh(2s) ds = sinh(2T)/2
        return 0.5 * e0 * e0 * 0.5 * std::sinh(2.0 * T) / std::pow(std::cosh(T), 2);
    }
    // E(T) for the zero-target problem: p(0) = -tanh(T) y0
    static double E_of_T(double T) { return std::tanh(T); }
};

}  // namespace oracles
