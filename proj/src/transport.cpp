#include "turnpike/transport.hpp"

#include <algorithm>
#include <cmath>

namespace turnpike {

PiecewisePoly::PiecewisePoly(std::vector<double> breaks,
                             std::vector<std::vector<double>> coeffs)
    : breaks_(std::move(breaks)), coeffs_(std::move(coeffs)) {
    if (breaks_.size() < 2 || coeffs_.size() + 1 != breaks_.size())
        throw DimensionMismatch("piecewise polynomial needs K+1 breaks for K pieces");
    for (std::size_t k = 0; k + 1 < breaks_.size(); ++k)
        if (breaks_[k + 1] <= breaks_[k]) throw OutOfRange("breaks must increase");
}

PiecewisePoly PiecewisePoly::constant(double c) { return {{0.0, 1.0}, {{c}}}; }

PiecewisePoly PiecewisePoly::linear(double a, double b) { return {{0.0, 1.0}, {{a, b}}}; }

PiecewisePoly PiecewisePoly::step(std::vector<double> breaks, std::vector<double> values) {
    std::vector<std::vector<double>> coeffs;
    coeffs.reserve(values.size());
    for (double v : values) coeffs.push_back({v});
    return {std::move(breaks), std::move(coeffs)};
}

double PiecewisePoly::eval(double x) const {
    x = std::clamp(x, breaks_.front(), breaks_.back());
    std::size_t k = 0;
    while (k + 2 < breaks_.size() && x >= breaks_[k + 1]) ++k;
    const double s = x - breaks_[k];
    double acc = 0.0;
    for (std::size_t j = coeffs_[k].size(); j-- > 0;) acc = acc * s + coeffs_[k][j];
    return acc;
}

double PiecewisePoly::integral(double a, double b) const {
    a = std::clamp(a, breaks_.front(), breaks_.back());
    b = std::clamp(b, breaks_.front(), breaks_.back());
    if (b <= a) return 0.0;
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < breaks_.size(); ++k) {
        const double lo = std::max(a, breaks_[k]);
        const double hi = std::min(b, breaks_[k + 1]);
        if (hi <= lo) continue;
        // antiderivative of the local polynomial at offset s
        auto prim = [&](double x) {
            const double s = x - breaks_[k];
            double v = 0.0;
            for (std::size_t j = coeffs_[k].size(); j-- > 0;)
                v = v * s + coeffs_[k][j] / static_cast<double>(j + 1);
            return v * s;
        };
        acc += prim(hi) - prim(lo);
    }
    return acc;
}

PiecewisePoly PiecewisePoly::antiderivative() const {
    std::vector<std::vector<double>> coeffs(coeffs_.size());
    double offset = 0.0;
    for (std::size_t k = 0; k < coeffs_.size(); ++k) {
        std::vector<double> c(coeffs_[k].size() + 1);
        c[0] = offset;
        for (std::size_t j = 0; j < coeffs_[k].size(); ++j)
            c[j + 1] = coeffs_[k][j] / static_cast<double>(j + 1);
        coeffs[k] = c;
        const double s = breaks_[k + 1] - breaks_[k];
        double v = 0.0;
        for (std::size_t j = c.size(); j-- > 0;) v = v * s + c[j];
        offset = v;
    }
    return {breaks_, std::move(coeffs)};
}

double optimal_control(const TransportTarget& target, double T, double t) {
    if (T <= 0.0 || t < 0.0 || t > T) throw OutOfRange("need 0 <= t <= T, T > 0");
    return 0.5 * target.y_d.integral(0.0, std::min(1.0, T - t));
}

double state_mass(const PiecewisePoly& y0, const TransportTarget& target, double T,
                  double t) {
    if (T <= 2.0) throw HorizonTooShort("the three-branch formula needs T > 2");
    if (t < 0.0 || t > T) throw OutOfRange("need 0 <= t <= T");
    const double Yd1 = target.y_d.integral(0.0, 1.0);
    if (t <= 1.0) {
        // all controls active before t = 1 sit on the plateau value
        return t * 0.5 * Yd1 + y0.integral(0.0, 1.0 - t);
    }
    if (t < T - 1.0) {
        return 0.5 * Yd1;
    }
    // exit branch: 0.5 * int_{t-1}^{t} Yd(min(1, T - tau)) dtau with s = T - tau
    const PiecewisePoly Yd = target.y_d.antiderivative();
    const double s_lo = T - t;  // <= 1 here
    double acc = 0.0;
    if (s_lo < 1.0) {
        const PiecewisePoly YdInt = Yd.antiderivative();
        acc += (YdInt.eval(1.0) - YdInt.eval(s_lo));
    }
    const double plateau_len = std::min(T - t + 1.0, T) - std::max(1.0, s_lo);
    if (plateau_len > 0.0) acc += plateau_len * Yd1;
    return 0.5 * acc;
}

double steady_optimum(const TransportTarget& target) {
    return 0.5 * target.y_d.integral(0.0, 1.0);
}

}  // namespace turnpike
