#pragma once

// Reference computations used by the tests. None of them call into the
// library: each recomputes its quantity from the defining formula.

#include <cmath>
#include <numbers>

namespace oracle {

struct Parabola {
    long double A;
    long double B2;
};

inline Parabola parabola(double alpha, int l) {
    const long double L = l + 0.5L;
    return {alpha / (2.0L * L) - L, alpha - L * L};
}

/// Classical fixed-step RK4 on df/dt = (f - A)^2 + B^2 in long double.
inline double rk4_flow(double alpha, int l, double f0, double t, int steps) {
    const Parabola p = parabola(alpha, l);
    auto rhs = [&](long double f) { return (f - p.A) * (f - p.A) + p.B2; };
    long double f = f0;
    const long double h = static_cast<long double>(t) / steps;
    for (int i = 0; i < steps; ++i) {
        const long double k1 = rhs(f);
        const long double k2 = rhs(f + 0.5L * h * k1);
        const long double k3 = rhs(f + 0.5L * h * k2);
        const long double k4 = rhs(f + h * k3);
        f += h / 6.0L * (k1 + 2.0L * k2 + 2.0L * k3 + k4);
    }
    return static_cast<double>(f);
}

/// f - A_c = (f0 - A_c) / (1 - (f0 - A_c) t) at B^2 = 0.
inline double critical_flow(double a_c, double f0, double t) {
    return a_c + (f0 - a_c) / (1.0 - (f0 - a_c) * t);
}

/// ln(Lambda/Lambda0) of the critical pole, where the denominator above vanishes.
inline double critical_pole(double a_c, double f0) { return 1.0 / (f0 - a_c); }

/// Pole of u' = u^2 - b^2 (u = f - A). With w = (u - b)/(u + b) the solution
/// is w0 exp(2 b t), so u diverges where w reaches 1. Returns NAN when f0
/// lies between the fixed points and never diverges.
inline double hyperbolic_pole(double A, double b, double f0) {
    const double u0 = f0 - A;
    if (std::abs(u0) <= b) return NAN;
    const double w0 = (u0 - b) / (u0 + b);
    return -std::log(w0) / (2.0 * b);
}

/// A + B tan(phi + B t), phi = atan((f0 - A)/B).
inline double tan_flow(double A, double B, double f0, double t) {
    return A + B * std::tan(std::atan((f0 - A) / B) + B * t);
}

/// V_l(p, q) written with step functions.
inline double step_kernel(double p, double q, double alpha, int l) {
    const double pre = -alpha / (2 * l + 1);
    if (p > q) return pre * std::pow(q, l) / std::pow(p, l + 1);
    if (q > p) return pre * std::pow(p, l) / std::pow(q, l + 1);
    return pre / p;
}

/// Counterterm induced by one infinitesimal shell of width d at Delta.
inline double thin_shell_gamma(double alpha, int l, double d, double delta) {
    return -alpha * alpha * d / ((2.0 * l + 1) * (2.0 * l + 1) * std::pow(delta, 2 * l + 2));
}

inline double limit_cycle_quotient(double alpha, int l) {
    const double L = l + 0.5;
    return std::exp(-2.0 * std::numbers::pi / std::sqrt(alpha - L * L));
}

}  // namespace oracle
