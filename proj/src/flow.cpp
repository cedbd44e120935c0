#include "rgflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rgflow/dopri.hpp"

namespace rgflow {

namespace {

void require_positive_cutoff(double lambda, const char* name) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument(std::string(name) + " must be a positive finite momentum");
}

// Shrinks [a, b] around the sign change of `denominator`, which must be
// positive at a and non-positive at b. a and b may be in either order.
template <class Fn>
std::pair<double, double> bisect_sign_change(Fn&& denominator, double a, double b, double width) {
    for (int iter = 0; iter < 200 && std::abs(b - a) > width; ++iter) {
        const double mid = 0.5 * (a + b);
        if (denominator(mid) > 0.0)
            a = mid;
        else
            b = mid;
    }
    return {std::min(a, b), std::max(a, b)};
}

PoleSignal make_pole(double log_lambda0, std::pair<double, double> bracket, double t) {
    return {log_lambda0 + bracket.first, log_lambda0 + bracket.second, t > 0.0 ? 1 : -1};
}

constexpr double kAnalyticBracket = 1e-9;

// A + b tan(atan(u0/b) + b t) by the addition theorem, which keeps full
// precision when u0/b is large.
double cyclic_value(double A, double b, double u0, double t) {
    const double tau0 = u0 / b;
    const double tb = std::tan(b * t);
    return A + b * (tau0 + tb) / (1.0 - tau0 * tb);
}

}  // namespace

PartialWave::PartialWave(int l) : l_(l) {
    if (l < 0) throw std::invalid_argument("angular momentum l must be non-negative");
}

FlowParams make_flow_params(double alpha, int l) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw std::invalid_argument("alpha must be positive (attractive potential)");
    const PartialWave wave(l);
    const double L = wave.langer();
    return {alpha, wave, alpha / (2.0 * L) - L, alpha - L * L};
}

double beta(double f, const FlowParams& params) noexcept {
    const double u = f - params.vertex;
    return u * u + params.beta_min;
}

Regime classify(const FlowParams& params) {
    const double b2 = params.beta_min;
    if (b2 > 0.0) {
        const double b = std::sqrt(b2);
        return LimitCycle{b, std::exp(-2.0 * std::numbers::pi / b), std::numbers::pi / b};
    }
    if (b2 == 0.0) return Critical{-0.5 * params.wave.langer()};
    const double b = std::sqrt(-b2);
    return TwoFixedPoints{params.vertex - b, params.vertex + b};
}

Regime classify(const FlowParams& params, double tolerance) {
    if (tolerance < 0.0) throw std::invalid_argument("tolerance must be non-negative");
    if (std::abs(params.beta_min) <= tolerance) return Critical{params.vertex};
    return classify(params);
}

double FlowResult::value() const {
    if (has_pole()) throw std::logic_error("flow diverged before reaching the requested cutoff");
    return std::get<double>(data_);
}

const PoleSignal& FlowResult::pole() const {
    if (!has_pole()) throw std::logic_error("flow has no pole");
    return std::get<PoleSignal>(data_);
}

FlowResult flow_analytic(const FlowParams& params, double f0, double lambda0, double lambda) {
    require_positive_cutoff(lambda0, "lambda0");
    require_positive_cutoff(lambda, "lambda");
    if (!std::isfinite(f0)) throw std::invalid_argument("f0 must be finite");

    const double t = std::log(lambda / lambda0);
    const double log0 = std::log(lambda0);
    const double A = params.vertex;
    const double u0 = f0 - A;
    if (t == 0.0) return f0;

    const double b2 = params.beta_min;
    if (b2 > 0.0) {
        const double b = std::sqrt(b2);
        const double phase0 = std::atan(u0 / b);
        const double phase = phase0 + b * t;
        const double half_pi = 0.5 * std::numbers::pi;
        if (phase >= half_pi || phase <= -half_pi) {
            const double t_pole = (std::copysign(half_pi, t) - phase0) / b;
            // cos(phase) is the denominator of tan; exactly one root on this interval.
            const double t_end = t_pole + std::copysign(0.25 * std::numbers::pi / b, t);
            auto denom = [&](double s) { return std::cos(phase0 + b * s); };
            return make_pole(log0, bisect_sign_change(denom, 0.0, t_end, kAnalyticBracket), t);
        }
        return cyclic_value(A, b, u0, t);
    }

    if (b2 == 0.0) {
        auto denom = [&](double s) { return 1.0 - u0 * s; };
        if (denom(t) <= 0.0) return make_pole(log0, bisect_sign_change(denom, 0.0, t, kAnalyticBracket), t);
        return A + u0 / denom(t);
    }

    // B^2 < 0. With w = (u - b)/(u + b) the flow is w' = 2 b w, giving a
    // Moebius map in exp(2 b t). Numerator and denominator are rescaled by
    // exp(-b|t|) so neither overflows.
    const double b = std::sqrt(-b2);
    if (u0 == -b) return f0;
    const double p = u0 + b;
    const double m = u0 - b;
    auto terms = [&](double s) {
        if (s >= 0.0) {
            const double e = std::exp(-2.0 * b * s);
            return std::pair{p * e + m, p * e - m};
        }
        const double e = std::exp(2.0 * b * s);
        return std::pair{p + m * e, p - m * e};
    };
    auto denom = [&](double s) { return terms(s).second; };
    const auto [num, den] = terms(t);
    if (den <= 0.0) return make_pole(log0, bisect_sign_change(denom, 0.0, t, kAnalyticBracket), t);
    return A + b * num / den;
}

FlowResult flow_numeric(const FlowParams& params, double f0, double lambda0, double lambda,
                        const IntegratorOptions& options) {
    require_positive_cutoff(lambda0, "lambda0");
    require_positive_cutoff(lambda, "lambda");
    if (!std::isfinite(f0)) throw std::invalid_argument("f0 must be finite");
    if (!(options.rel_tol > 0.0) || !(options.abs_tol > 0.0) || !(options.bracket_width > 0.0) ||
        !(options.reciprocal_switch > 1.0))
        throw std::invalid_argument("invalid integrator options");

    const double T = std::log(lambda / lambda0);
    const double log0 = std::log(lambda0);
    if (T == 0.0) return f0;

    const double A = params.vertex;
    const double b2 = params.beta_min;
    const double dir = T > 0.0 ? 1.0 : -1.0;

    // Direct variable u = f - A obeys u' = u^2 + B^2. Near a pole the
    // reciprocal v = -1/u obeys v' = 1 + B^2 v^2 and crosses zero at the pole.
    auto direct = [b2](double u) { return u * u + b2; };
    auto reciprocal = [b2](double v) { return 1.0 + b2 * v * v; };
    const double recip_abs_tol = options.abs_tol / (options.reciprocal_switch * options.reciprocal_switch);

    bool in_reciprocal = std::abs(f0 - A) > options.reciprocal_switch;
    double y = in_reciprocal ? -1.0 / (f0 - A) : f0 - A;
    double t = 0.0;
    double h = dir * std::min(std::abs(T), 1e-2);

    for (long step = 0; step < options.max_steps; ++step) {
        const double remaining = T - t;
        if (std::abs(remaining) <= 1e-15 * std::max(1.0, std::abs(T))) break;
        if (std::abs(h) > std::abs(remaining)) h = remaining;

        const DopriStep trial = in_reciprocal ? dopri_step(reciprocal, y, h) : dopri_step(direct, y, h);
        const double scale = std::max(std::abs(y), std::abs(trial.y));
        const double tol = (in_reciprocal ? recip_abs_tol : options.abs_tol) + options.rel_tol * scale;
        const bool finite = std::isfinite(trial.y) && std::isfinite(trial.error);

        if (finite && trial.error <= tol) {
            if (in_reciprocal && (trial.y == 0.0 || std::signbit(trial.y) != std::signbit(y))) {
                // The pole lies inside this accepted step; shrink it by re-stepping from t.
                const double y_start = y;
                auto denom = [&](double s) {
                    const double ys = s == 0.0 ? y_start : dopri_step(reciprocal, y_start, s).y;
                    return ys * (y_start < 0.0 ? -1.0 : 1.0);
                };
                auto br = bisect_sign_change(denom, 0.0, h, options.bracket_width);
                br.first += t;
                br.second += t;
                return make_pole(log0, br, T);
            }
            t += h;
            y = trial.y;
            if (!in_reciprocal && std::abs(y) > options.reciprocal_switch) {
                in_reciprocal = true;
                y = -1.0 / y;
            } else if (in_reciprocal && std::abs(y) > 2.0 / options.reciprocal_switch) {
                in_reciprocal = false;
                y = -1.0 / y;
            }
        }

        const double ratio = (finite && trial.error > 0.0) ? tol / trial.error : (finite ? 1e5 : 0.0);
        const double factor = std::clamp(0.9 * std::pow(ratio, 0.2), 0.1, 5.0);
        h *= factor;
        if (std::abs(h) < 1e-15 * std::max(1.0, std::abs(t))) {
            // Step-size underflow: only a singularity of the flow can force this.
            const double lo = t;
            const double hi = t + dir * options.bracket_width;
            return PoleSignal{log0 + std::min(lo, hi), log0 + std::max(lo, hi), dir > 0.0 ? 1 : -1};
        }
    }
    if (std::abs(T - t) > 1e-12 * std::max(1.0, std::abs(T)))
        throw std::runtime_error("flow_numeric: step budget exhausted");

    return A + (in_reciprocal ? -1.0 / y : y);
}

double gamma_from_f(const FlowState& state, PartialWave wave) {
    require_positive_cutoff(state.cutoff, "cutoff");
    return state.f / std::pow(state.cutoff, 2.0 * wave.langer());
}

double f_from_gamma(double gamma, double cutoff, PartialWave wave) {
    require_positive_cutoff(cutoff, "cutoff");
    return gamma * std::pow(cutoff, 2.0 * wave.langer());
}

LocusPoint locus_at(double alpha, double l) {
    const double L = l + 0.5;
    return {l, alpha / (2.0 * L) - L, alpha - L * L};
}

std::vector<LocusPoint> fixed_point_locus(double alpha, int l_min, int l_max) {
    if (l_min < 0 || l_max < l_min) throw std::invalid_argument("invalid l range");
    std::vector<LocusPoint> out;
    out.reserve(static_cast<std::size_t>(l_max - l_min + 1));
    for (int l = l_min; l <= l_max; ++l) {
        const FlowParams params = make_flow_params(alpha, l);
        out.push_back({static_cast<double>(l), params.vertex, params.beta_min});
    }
    return out;
}

FlowTrajectory sample_flow(const FlowParams& params, double f0, const std::vector<double>& t,
                           bool through_poles) {
    FlowTrajectory out;
    out.samples.reserve(t.size());

    const bool cyclic = params.beta_min > 0.0;
    if (through_poles && cyclic) {
        const double b = std::sqrt(params.beta_min);
        const double phase0 = std::atan((f0 - params.vertex) / b);
        const double pi = std::numbers::pi;
        // Index of the tan branch containing phase; poles sit between branches.
        auto branch = [&](double s) { return std::floor((phase0 + b * s + 0.5 * pi) / pi); };
        double prev_t = 0.0;
        for (double s : t) {
            const double k_prev = branch(prev_t);
            const double k_now = branch(s);
            const double step = k_now > k_prev ? 1.0 : -1.0;
            for (double k = k_prev; k != k_now; k += step) {
                const double boundary = step > 0 ? k + 1.0 : k;
                const double t_pole = ((boundary - 0.5) * pi - phase0) / b;
                const double half = 0.25 * pi / b;
                auto denom = [&](double x) { return std::cos(phase0 + b * x) * (std::fmod(std::abs(k), 2.0) == 0 ? 1.0 : -1.0); };
                auto br = bisect_sign_change(denom, t_pole - step * half, t_pole + step * half, kAnalyticBracket);
                out.poles.push_back({br.first, br.second, step > 0 ? 1 : -1});
            }
            out.samples.push_back({s, s == 0.0 ? f0 : cyclic_value(params.vertex, b, f0 - params.vertex, s)});
            prev_t = s;
        }
        return out;
    }

    for (double s : t) {
        const FlowResult r = flow_analytic(params, f0, 1.0, std::exp(s));
        if (r.has_pole()) {
            out.poles.push_back(r.pole());
            break;
        }
        out.samples.push_back({s, r.value()});
    }
    return out;
}

}  // namespace rgflow
