#pragma once

// Cutoff effective Hamiltonian in one partial wave,
//
//     p^2 psi(p) + int_0^Lambda dq q^2 [V_l(p,q) + gamma p^l q^l] psi(q) = E psi(p),
//     V_l(p,q) = -alpha/(2l+1) min(p,q)^l / max(p,q)^(l+1),
//
// discretized on a MomentumGrid and symmetrized with phi_i = sqrt(w_i) q_i psi_i.

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "rgflow/flow.hpp"
#include "rgflow/quadrature.hpp"

namespace rgflow::spectral {

/// Units of 1/momentum. Throws std::invalid_argument for non-positive momenta.
double potential_kernel(double p, double q, double alpha, PartialWave wave);

/// Separable counterterm (f / cutoff^(2L)) p^l q^l.
double counterterm_kernel(double p, double q, double f, double cutoff, PartialWave wave);

/// Exact int_0^cutoff dq V_l(p, q).
double potential_row_integral(double p, double cutoff, double alpha, PartialWave wave);

struct KernelSpec {
    double alpha;
    PartialWave wave;
    double f;       ///< dimensionless counterterm coupling at `cutoff`
    double cutoff;  ///< must match the grid cutoff
};

enum class Discretization {
    /// M_ij = p_i^2 delta_ij + sqrt(w_i w_j) p_i q_j K(p_i, q_j).
    Nystrom,
    /// Nystrom plus the diagonal singularity subtraction
    ///   p_i^2 [int dq V(p_i,q) - sum_j w_j V(p_i,q_j)]
    /// which removes the leading error from the kink of V at p = q.
    /// Still symmetric; converges much faster on the tower states.
    SubtractedNystrom,
};

struct HamiltonianMatrix {
    MomentumGrid grid;
    KernelSpec spec;
    Discretization scheme;
    Eigen::MatrixXd matrix;
};

HamiltonianMatrix build_hamiltonian(const MomentumGrid& grid, const KernelSpec& spec,
                                    Discretization scheme = Discretization::SubtractedNystrom);

struct Spectrum {
    Eigen::VectorXd eigenvalues;   ///< ascending
    Eigen::MatrixXd eigenvectors;  ///< columns are symmetrized wave functions phi

    /// Negative eigenvalues, ascending (deepest first).
    std::vector<double> bound_states() const;
};

/// Dense symmetric eigendecomposition. Throws NumericalError on failure.
Spectrum solve_spectrum(const Eigen::MatrixXd& matrix);
Spectrum solve_spectrum(const HamiltonianMatrix& hamiltonian);

/// Eigenvalues only; cheaper when vectors are not needed.
Eigen::VectorXd eigenvalues_of(const Eigen::MatrixXd& matrix);

struct CalibrationOptions {
    /// Eigenvalue index to pin. Unset: the lowest index whose eigenvalue can
    /// reach the target for some f in [-f_max, f_max].
    std::optional<int> index;
    double f_max = 1e3;
    /// |target| must not exceed this fraction of cutoff^2.
    double max_energy_fraction = 1e-2;
    double rel_tol = 1e-8;
    Discretization scheme = Discretization::SubtractedNystrom;
};

struct Calibration {
    double f;
    int index;
    double eigenvalue;
};

/// Finds f such that eigenvalue `index` of the Hamiltonian on `grid` equals
/// `target` (< 0). Eigenvalues are non-decreasing in f, so the root is
/// bracketed on [-f_max, f_max] and refined with TOMS 748.
Calibration calibrate_f(const MomentumGrid& grid, double alpha, PartialWave wave, double target,
                        const CalibrationOptions& options = {});

/// Energy band in which discretized bound states are trusted:
/// floor < |E| <= ceiling.
struct ValidityBand {
    double ceiling;
    double floor;

    bool contains(double energy) const noexcept {
        const double e = energy < 0 ? -energy : energy;
        return e <= ceiling && e > floor;
    }
};

struct BandOptions {
    double cutoff_fraction = 1e-2;  ///< ceiling = fraction * cutoff^2
    double infrared_factor = 100.0; ///< floor = (factor * grid.infrared_resolution())^2
};

ValidityBand validity_band(const MomentumGrid& grid, const BandOptions& options = {});

struct TowerEntry {
    int index;
    double eigenvalue;
    std::optional<double> ratio;  ///< E_n / E_(n-1); absent for the first state
};

struct Tower {
    std::vector<TowerEntry> states;  ///< |E| descending
    ValidityBand band;
    double expected_quotient;  ///< exp(-2 pi / B)
};

/// Bound states inside the validity band and their successive ratios.
/// Requires B^2 > 0 (std::invalid_argument otherwise); NumericalError when
/// fewer than three states fall in the band.
Tower bound_state_tower(const MomentumGrid& grid, double alpha, PartialWave wave, double f0,
                        const BandOptions& band = {},
                        Discretization scheme = Discretization::SubtractedNystrom);

struct MatchedLevel {
    double reference;  ///< eigenvalue at (Lambda0, f0)
    double evolved;    ///< eigenvalue at (Lambda1, f(Lambda1))
    double deviation;  ///< |evolved - reference| / |reference|
};

struct CutoffIndependenceReport {
    double f_evolved;
    double window;  ///< |E| <= window is compared
    std::vector<MatchedLevel> levels;
    double max_deviation;
    bool passed;
};

struct CutoffIndependenceOptions {
    int n = 400;
    int panels = 20;
    double ir_fraction = 1e-9;
    double window_fraction = 1e-2;  ///< window = fraction * Lambda1^2
    double tolerance = 1e-2;
    double infrared_factor = 100.0;
    Discretization scheme = Discretization::SubtractedNystrom;
};

/// Runs f from (lambda0, f0) to lambda1 with the closed-form flow, solves
/// both Hamiltonians on graded grids scaled to their cutoffs, and pairs
/// every bound state in the window (from either side) with the nearest
/// bound state of the other spectrum. Limit-cycle couplings are continued
/// through their poles; in the other regimes a pole between the two cutoffs
/// throws NumericalError.
CutoffIndependenceReport cutoff_independence_check(double alpha, PartialWave wave, double f0, double lambda0,
                                                   double lambda1, const CutoffIndependenceOptions& options = {});

}  // namespace rgflow::spectral
