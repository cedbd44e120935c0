#pragma once

// Running of the dimensionless counterterm coupling f(Lambda) for the
// attractive inverse-square potential in a single partial wave.
//
// Units: 2m = 1, so alpha = 2mg is dimensionless and energies are momenta
// squared. The flow is
//
//     Lambda df/dLambda = beta(f) = (f - A)^2 + B^2,
//     A = alpha/(2L) - L,   B^2 = alpha - L^2,   L = l + 1/2,
//
// and the dimensioned counterterm is gamma = f / Lambda^(2L).

#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

namespace rgflow {

/// Angular momentum sector. `langer()` is the half-integer l + 1/2.
class PartialWave {
public:
    explicit PartialWave(int l);

    int l() const noexcept { return l_; }
    double langer() const noexcept { return l_ + 0.5; }

    friend bool operator==(PartialWave, PartialWave) = default;

private:
    int l_;
};

/// Coupling alpha together with the beta-function parabola it induces in a
/// given partial wave. `vertex` is A, `beta_min` is B^2 (negative below the
/// critical coupling alpha = L^2).
struct FlowParams {
    double alpha;
    PartialWave wave;
    double vertex;
    double beta_min;
};

/// Throws std::invalid_argument unless alpha > 0 and l >= 0.
FlowParams make_flow_params(double alpha, int l);

struct FlowState {
    double cutoff;
    double f;
};

/// B^2 > 0: log-periodic coupling, bound states form a geometric tower.
struct LimitCycle {
    double b;           ///< sqrt(B^2)
    double quotient;    ///< exp(-2 pi / B), ratio of successive binding energies
    double log_period;  ///< pi / B, period of f in ln Lambda
};

/// B^2 = 0: the two fixed points have merged at A = -L/2.
struct Critical {
    double merged_fixed_point;
};

/// B^2 < 0. Lowering the cutoff, f_plus attracts and f_minus repels.
struct TwoFixedPoints {
    double f_minus;
    double f_plus;
};

using Regime = std::variant<LimitCycle, Critical, TwoFixedPoints>;

double beta(double f, const FlowParams& params) noexcept;

/// Exact comparison of B^2 against zero.
Regime classify(const FlowParams& params);

/// Treats |B^2| <= tolerance as critical. Meant for parameter sweeps.
Regime classify(const FlowParams& params, double tolerance);

/// Divergence of f at a finite cutoff. The pole lies in
/// [log_lo, log_hi] (natural log of the cutoff, absolute).
struct PoleSignal {
    double log_lo;
    double log_hi;
    int direction;  ///< +1 above lambda0 (f -> +inf), -1 below (f -> -inf)

    double width() const noexcept { return log_hi - log_lo; }
    double log_cutoff() const noexcept { return 0.5 * (log_lo + log_hi); }
};

/// Either the coupling at the requested cutoff or the first pole met on the way.
class FlowResult {
public:
    FlowResult(double value) : data_(value) {}  // NOLINT(google-explicit-constructor)
    FlowResult(PoleSignal pole) : data_(pole) {}  // NOLINT(google-explicit-constructor)

    bool has_pole() const noexcept { return std::holds_alternative<PoleSignal>(data_); }
    explicit operator bool() const noexcept { return !has_pole(); }

    /// Throws std::logic_error when the flow hit a pole.
    double value() const;
    const PoleSignal& pole() const;

private:
    std::variant<double, PoleSignal> data_;
};

/// Closed-form solution (tan, rational or Moebius/tanh branch by regime).
FlowResult flow_analytic(const FlowParams& params, double f0, double lambda0, double lambda);

struct IntegratorOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    /// Above this |f - A| the integrator continues in the reciprocal
    /// variable -1/(f - A), which passes smoothly through a pole.
    double reciprocal_switch = 1e3;
    /// Target width of the pole bracket in ln Lambda.
    double bracket_width = 1e-8;
    long max_steps = 2'000'000;
};

/// Adaptive Dormand-Prince 5(4) integration of the flow in t = ln Lambda.
FlowResult flow_numeric(const FlowParams& params, double f0, double lambda0, double lambda,
                        const IntegratorOptions& options = {});

double gamma_from_f(const FlowState& state, PartialWave wave);
double f_from_gamma(double gamma, double cutoff, PartialWave wave);

struct LocusPoint {
    double l;  ///< real-valued so the locus can be drawn as a curve
    double vertex;
    double beta_min;
};

/// Minima (A, B^2) of the beta functions for l = l_min..l_max at fixed alpha.
std::vector<LocusPoint> fixed_point_locus(double alpha, int l_min, int l_max);

/// Same locus with l treated as a continuous parameter.
LocusPoint locus_at(double alpha, double l);

/// One sample of a figure trajectory.
struct FlowSample {
    double t;  ///< ln(Lambda / Lambda0)
    double f;
};

struct FlowTrajectory {
    std::vector<FlowSample> samples;
    std::vector<PoleSignal> poles;  ///< brackets relative to ln Lambda0
};

/// Samples the closed-form flow at the given t = ln(Lambda/Lambda0). With
/// `through_poles` the limit-cycle branch is followed past each divergence
/// (f returns from the opposite infinity); otherwise sampling stops at the
/// first pole. t values must be monotone in one direction away from 0.
FlowTrajectory sample_flow(const FlowParams& params, double f0, const std::vector<double>& t,
                           bool through_poles);

}  // namespace rgflow
