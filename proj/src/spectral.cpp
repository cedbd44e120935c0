#include "rgflow/spectral.hpp"

#include <algorithm>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "rgflow/errors.hpp"

namespace rgflow::spectral {

namespace {

void require_positive(double x, const char* what) {
    if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument(std::string(what) + " must be positive");
}

// Counterterm p^l q^l f/Lambda^(2L) in symmetrized form is f * c_i c_j.
Eigen::VectorXd counterterm_vector(const MomentumGrid& grid, PartialWave wave) {
    const auto& q = grid.nodes();
    const auto& w = grid.weights();
    const double scale = std::pow(grid.cutoff(), -wave.langer());
    Eigen::VectorXd c(static_cast<Eigen::Index>(q.size()));
    for (std::size_t i = 0; i < q.size(); ++i)
        c[static_cast<Eigen::Index>(i)] = std::sqrt(w[i]) * std::pow(q[i], wave.l() + 1) * scale;
    return c;
}

Eigen::MatrixXd assemble(const MomentumGrid& grid, double alpha, PartialWave wave, Discretization scheme) {
    const auto& q = grid.nodes();
    const auto& w = grid.weights();
    const auto n = static_cast<Eigen::Index>(q.size());
    Eigen::MatrixXd m(n, n);

    for (Eigen::Index i = 0; i < n; ++i) {
        const auto si = static_cast<std::size_t>(i);
        for (Eigen::Index j = 0; j <= i; ++j) {
            const auto sj = static_cast<std::size_t>(j);
            const double v = std::sqrt(w[si] * w[sj]) * q[si] * q[sj] * potential_kernel(q[si], q[sj], alpha, wave);
            m(i, j) = v;
            m(j, i) = v;
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto si = static_cast<std::size_t>(i);
        double diag = q[si] * q[si];
        if (scheme == Discretization::SubtractedNystrom) {
            double sum = 0.0;
            for (std::size_t j = 0; j < q.size(); ++j) sum += w[j] * potential_kernel(q[si], q[j], alpha, wave);
            diag += q[si] * q[si] * (potential_row_integral(q[si], grid.cutoff(), alpha, wave) - sum);
        }
        m(i, i) += diag;
    }
    return m;
}

}  // namespace

double potential_kernel(double p, double q, double alpha, PartialWave wave) {
    if (!(p > 0.0) || !(q > 0.0)) throw std::invalid_argument("kernel momenta must be positive");
    const double lo = std::min(p, q);
    const double hi = std::max(p, q);
    const int l = wave.l();
    return -alpha / (2 * l + 1) * std::pow(lo / hi, l) / hi;
}

double counterterm_kernel(double p, double q, double f, double cutoff, PartialWave wave) {
    require_positive(cutoff, "cutoff");
    const int l = wave.l();
    return f / std::pow(cutoff, 2.0 * wave.langer()) * std::pow(p * q, l);
}

double potential_row_integral(double p, double cutoff, double alpha, PartialWave wave) {
    require_positive(p, "momentum");
    require_positive(cutoff, "cutoff");
    const int l = wave.l();
    // int_0^p q^l/p^(l+1) dq = 1/(l+1);  int_p^cutoff p^l/q^(l+1) dq
    const double upper = l == 0 ? std::log(cutoff / p) : (1.0 - std::pow(p / cutoff, l)) / l;
    return -alpha / (2 * l + 1) * (1.0 / (l + 1) + upper);
}

HamiltonianMatrix build_hamiltonian(const MomentumGrid& grid, const KernelSpec& spec, Discretization scheme) {
    if (std::abs(grid.cutoff() - spec.cutoff) > 1e-12 * spec.cutoff)
        throw std::invalid_argument("grid cutoff does not match the cutoff of the kernel spec");
    if (spec.alpha < 0.0) throw std::invalid_argument("alpha must be non-negative");
    Eigen::MatrixXd m = assemble(grid, spec.alpha, spec.wave, scheme);
    if (spec.f != 0.0) {
        const Eigen::VectorXd c = counterterm_vector(grid, spec.wave);
        m.noalias() += spec.f * c * c.transpose();
        m = 0.5 * (m + m.transpose()).eval();
    }
    return {grid, spec, scheme, std::move(m)};
}

std::vector<double> Spectrum::bound_states() const {
    std::vector<double> out;
    for (Eigen::Index i = 0; i < eigenvalues.size() && eigenvalues[i] < 0.0; ++i) out.push_back(eigenvalues[i]);
    return out;
}

Spectrum solve_spectrum(const Eigen::MatrixXd& matrix) {
    if (matrix.rows() != matrix.cols() || matrix.rows() == 0)
        throw std::invalid_argument("eigenproblem needs a non-empty square matrix");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix);
    if (solver.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "symmetric eigensolver failed: n=" << matrix.rows() << " norm=" << matrix.norm()
            << " asymmetry=" << (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
        throw NumericalError(msg.str());
    }
    return {solver.eigenvalues(), solver.eigenvectors()};
}

Spectrum solve_spectrum(const HamiltonianMatrix& hamiltonian) { return solve_spectrum(hamiltonian.matrix); }

Eigen::VectorXd eigenvalues_of(const Eigen::MatrixXd& matrix) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw NumericalError("symmetric eigensolver failed: n=" + std::to_string(matrix.rows()));
    return solver.eigenvalues();
}

Calibration calibrate_f(const MomentumGrid& grid, double alpha, PartialWave wave, double target,
                        const CalibrationOptions& options) {
    const double cutoff = grid.cutoff();
    if (!(target < 0.0)) throw std::invalid_argument("calibration target must be a bound state (negative)");
    if (-target > options.max_energy_fraction * cutoff * cutoff)
        throw std::invalid_argument("calibration target too deep for this cutoff: need |E0| <= " +
                                    std::to_string(options.max_energy_fraction) + " * cutoff^2");
    require_positive(options.f_max, "f_max");

    const Eigen::MatrixXd base = assemble(grid, alpha, wave, options.scheme);
    const Eigen::VectorXd c = counterterm_vector(grid, wave);
    auto eigen_at = [&](double f) {
        Eigen::MatrixXd m = base;
        m.noalias() += f * c * c.transpose();
        return eigenvalues_of(m);
    };

    const Eigen::VectorXd lower = eigen_at(-options.f_max);
    const Eigen::VectorXd upper = eigen_at(options.f_max);
    int index = -1;
    if (options.index) {
        index = *options.index;
        if (index < 0 || index >= lower.size()) throw std::invalid_argument("calibration index out of range");
        if (!(lower[index] <= target && target <= upper[index])) index = -2;
    } else {
        for (Eigen::Index k = 0; k < lower.size(); ++k) {
            if (lower[k] <= target && target <= upper[k]) {
                index = static_cast<int>(k);
                break;
            }
        }
    }
    if (index < 0) {
        std::ostringstream msg;
        msg << "no calibration bracket for E0=" << target << " within f in [" << -options.f_max << ", "
            << options.f_max << "]; scanned eigenvalue " << (options.index ? "#" + std::to_string(*options.index) : "range")
            << ": [" << lower.minCoeff() << ", " << upper.maxCoeff() << "]";
        throw NumericalError(msg.str());
    }

    auto residual = [&](double f) { return eigen_at(f)[index] - target; };
    const double scale = std::abs(target);
    auto done = [&](double a, double b) {
        return std::abs(b - a) <= 4 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), 1.0);
    };
    std::uintmax_t max_iter = 200;
    const double r_lo = lower[index] - target;
    const double r_hi = upper[index] - target;
    double f = 0.0;
    if (r_lo == 0.0) {
        f = -options.f_max;
    } else if (r_hi == 0.0) {
        f = options.f_max;
    } else {
        // Stop early once the eigenvalue itself is converged.
        double best_f = 0.0, best_r = std::numeric_limits<double>::infinity();
        auto tracked = [&](double x) {
            const double r = residual(x);
            if (std::abs(r) < best_r) {
                best_r = std::abs(r);
                best_f = x;
            }
            return r;
        };
        auto stop = [&](double a, double b) { return done(a, b) || best_r <= 1e-3 * options.rel_tol * scale; };
        const auto bracket = boost::math::tools::toms748_solve(tracked, -options.f_max, options.f_max, r_lo, r_hi,
                                                               stop, max_iter);
        f = best_r <= 1e-3 * options.rel_tol * scale ? best_f : 0.5 * (bracket.first + bracket.second);
    }
    const double achieved = eigen_at(f)[index];
    if (std::abs(achieved - target) > options.rel_tol * scale)
        throw NumericalError("calibration did not converge: |E - E0|/|E0| = " +
                             std::to_string(std::abs(achieved - target) / scale));
    return {f, index, achieved};
}

ValidityBand validity_band(const MomentumGrid& grid, const BandOptions& options) {
    const double cutoff = grid.cutoff();
    const double ir = options.infrared_factor * grid.infrared_resolution();
    return {options.cutoff_fraction * cutoff * cutoff, ir * ir};
}

Tower bound_state_tower(const MomentumGrid& grid, double alpha, PartialWave wave, double f0,
                        const BandOptions& band_options, Discretization scheme) {
    const FlowParams params = make_flow_params(alpha, wave.l());
    if (!(params.beta_min > 0.0))
        throw std::invalid_argument("no bound-state tower: alpha <= L^2 in this partial wave");

    const Eigen::VectorXd ev = eigenvalues_of(build_hamiltonian(grid, {alpha, wave, f0, grid.cutoff()}, scheme).matrix);
    Tower tower{{}, validity_band(grid, band_options), std::get<LimitCycle>(classify(params)).quotient};
    for (Eigen::Index i = 0; i < ev.size() && ev[i] < 0.0; ++i) {
        if (!tower.band.contains(ev[i])) continue;
        std::optional<double> ratio;
        if (!tower.states.empty()) ratio = ev[i] / tower.states.back().eigenvalue;
        tower.states.push_back({static_cast<int>(i), ev[i], ratio});
    }
    if (tower.states.size() < 3) {
        std::ostringstream msg;
        msg << "only " << tower.states.size() << " bound states in the validity band [" << tower.band.floor << ", "
            << tower.band.ceiling << "]; increase the node count or the grid's momentum range";
        throw NumericalError(msg.str());
    }
    return tower;
}

CutoffIndependenceReport cutoff_independence_check(double alpha, PartialWave wave, double f0, double lambda0,
                                                   double lambda1, const CutoffIndependenceOptions& options) {
    require_positive(lambda0, "lambda0");
    require_positive(lambda1, "lambda1");
    if (lambda1 > lambda0) throw std::invalid_argument("lambda1 must not exceed lambda0");
    if (!(options.window_fraction > 0.0 && options.window_fraction <= 1e-2))
        throw std::invalid_argument("window fraction must be in (0, 0.01]");

    const FlowParams params = make_flow_params(alpha, wave.l());
    // A limit-cycle coupling passes through +-infinity and comes back; the
    // Hamiltonian only stops making sense exactly at a pole. Other regimes
    // cannot be continued past one.
    const auto evolved = sample_flow(params, f0, {std::log(lambda1 / lambda0)}, params.beta_min > 0.0);
    if (evolved.samples.empty() || !std::isfinite(evolved.samples.front().f)) {
        const PoleSignal pole = evolved.poles.empty() ? PoleSignal{0.0, 0.0, -1} : evolved.poles.front();
        std::ostringstream msg;
        msg << "flow from lambda0 to lambda1 meets a pole at ln(lambda) in [" << std::log(lambda0) + pole.log_lo
            << ", " << std::log(lambda0) + pole.log_hi << "]";
        throw NumericalError(msg.str());
    }
    const double f1 = evolved.samples.front().f;

    const auto grid0 = MomentumGrid::graded(lambda0, options.n, options.panels, options.ir_fraction);
    const auto grid1 = MomentumGrid::graded(lambda1, options.n, options.panels, options.ir_fraction);
    const Eigen::VectorXd ev0 = eigenvalues_of(build_hamiltonian(grid0, {alpha, wave, f0, lambda0}, options.scheme).matrix);
    const Eigen::VectorXd ev1 = eigenvalues_of(build_hamiltonian(grid1, {alpha, wave, f1, lambda1}, options.scheme).matrix);

    const double window = options.window_fraction * lambda1 * lambda1;
    const BandOptions band_opts{1.0, options.infrared_factor};
    const double floor = std::max(validity_band(grid0, band_opts).floor, validity_band(grid1, band_opts).floor);

    auto bound = [](const Eigen::VectorXd& ev) {
        std::vector<double> out;
        for (Eigen::Index i = 0; i < ev.size() && ev[i] < 0.0; ++i) out.push_back(ev[i]);
        return out;
    };
    const std::vector<double> b0 = bound(ev0), b1 = bound(ev1);
    auto nearest = [](const std::vector<double>& list, double e) {
        double best = std::numeric_limits<double>::quiet_NaN();
        double dist = std::numeric_limits<double>::infinity();
        for (double x : list) {
            const double d = std::abs(std::log(x / e));
            if (d < dist) {
                dist = d;
                best = x;
            }
        }
        return best;
    };
    auto in_window = [&](double e) { return -e <= window && -e > floor; };

    CutoffIndependenceReport report{f1, window, {}, 0.0, true};
    auto add = [&](double ref, double evo) {
        const double dev = std::isnan(ref) || std::isnan(evo) ? std::numeric_limits<double>::infinity()
                                                             : std::abs(evo - ref) / std::abs(ref);
        report.levels.push_back({ref, evo, dev});
        report.max_deviation = std::max(report.max_deviation, dev);
    };
    for (double e : b0)
        if (in_window(e)) add(e, nearest(b1, e));
    for (double e : b1) {
        if (!in_window(e)) continue;
        const double partner = nearest(b0, e);
        // already recorded from the reference side
        if (!std::isnan(partner) && in_window(partner) && nearest(b1, partner) == e) continue;
        add(partner, e);
    }
    std::sort(report.levels.begin(), report.levels.end(),
              [](const MatchedLevel& a, const MatchedLevel& b) { return std::abs(a.evolved) > std::abs(b.evolved); });
    report.passed = report.max_deviation <= options.tolerance;
    return report;
}

}  // namespace rgflow::spectral
