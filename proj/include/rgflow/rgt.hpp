#pragma once

// Exact elimination of high-momentum modes from the discretized Hamiltonian.
// Removing the nodes above a new cutoff Lambda' by block Gaussian elimination
// (Feshbach projection) at reference energy E gives
//
//     H_eff(E) = H_PP + H_PQ (E - H_QQ)^{-1} H_QP
//
// on the retained nodes. At E = 0 this is the discrete counterpart of the
// infinitesimal shell elimination; the induced correction has the separable
// form gamma p^l q^l and gamma follows the Riccati flow.

#include <Eigen/Dense>
#include <vector>

#include "rgflow/spectral.hpp"

namespace rgflow::rgt {

struct ShellPartition {
    std::vector<int> low;   ///< q_i <= lambda_prime
    std::vector<int> high;  ///< q_i >  lambda_prime (eliminated)
    double lambda_prime;
};

/// Splits ascending nodes at lambda_prime.
ShellPartition partition_at(const std::vector<double>& nodes, double lambda_prime);

/// Partition of an arbitrary index set (used for unstructured matrices).
ShellPartition partition_indices(int size, std::vector<int> high, double lambda_prime = 0.0);

struct EffectiveHamiltonian {
    Eigen::MatrixXd matrix;
    double reference_energy;
    std::vector<int> low;  ///< row/column k of `matrix` is node low[k] of the parent
};

/// Throws NumericalError when E_ref lies on (or within 1e-13 relative of)
/// an eigenvalue of the eliminated block.
EffectiveHamiltonian eliminate_shell(const Eigen::MatrixXd& h, const ShellPartition& partition,
                                     double reference_energy);

struct GammaFit {
    double gamma;                  ///< momentum^(-2L)
    double residual_separability;  ///< ||R - gamma G|| / ||R||
    bool below_noise;              ///< residual indistinguishable from rounding; gamma set to 0
};

/// Fits R = H_eff - base with the separable counterterm. Both matrices are in
/// symmetrized form on `grid` (the retained nodes), so the fit is least
/// squares of R(p,q) against p^l q^l with quadrature weights w_p w_q p^2 q^2.
GammaFit extract_gamma(const Eigen::MatrixXd& effective, const Eigen::MatrixXd& base, const MomentumGrid& grid,
                       PartialWave wave);

struct StaircaseStep {
    double cutoff;
    double gamma;
    double f;  ///< gamma * cutoff^(2L)
    double residual_separability;
};

struct Staircase {
    double initial_gamma;
    std::vector<StaircaseStep> steps;
};

/// Eliminates the nodes above each cutoff in turn (descending, all below the
/// Hamiltonian's own cutoff) at the given reference energy and fits the
/// counterterm after every step. The base for each fit is the f = 0
/// Hamiltonian restricted to the surviving nodes.
Staircase staircase_flow(const spectral::HamiltonianMatrix& hamiltonian, const std::vector<double>& cutoffs,
                         double reference_energy = 0.0);

/// Grid whose top interval (stop, cutoff) is cut into `shells` equal
/// panels of `nodes_per_shell` points, below a graded part on (0, stop).
/// Returns the grid and the descending shell edges below the cutoff.
struct StaircaseGrid {
    MomentumGrid grid;
    std::vector<double> cutoffs;
};
StaircaseGrid staircase_grid(double cutoff, double stop, int shells, int nodes_per_shell = 1, int low_nodes = 80,
                             int low_panels = 8, double ir_fraction = 1e-6);

}  // namespace rgflow::rgt
