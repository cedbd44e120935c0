#include "rgflow/rgt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rgflow/errors.hpp"

namespace rgflow::rgt {

namespace {

Eigen::MatrixXd take(const Eigen::MatrixXd& m, const std::vector<int>& rows, const std::vector<int>& cols) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(rows[i], cols[j]);
    return out;
}

}  // namespace

ShellPartition partition_at(const std::vector<double>& nodes, double lambda_prime) {
    ShellPartition part{{}, {}, lambda_prime};
    for (std::size_t i = 0; i < nodes.size(); ++i)
        (nodes[i] <= lambda_prime ? part.low : part.high).push_back(static_cast<int>(i));
    return part;
}

ShellPartition partition_indices(int size, std::vector<int> high, double lambda_prime) {
    std::sort(high.begin(), high.end());
    if (std::adjacent_find(high.begin(), high.end()) != high.end())
        throw std::invalid_argument("eliminated indices must be distinct");
    ShellPartition part{{}, std::move(high), lambda_prime};
    for (int i = 0; i < size; ++i)
        if (!std::binary_search(part.high.begin(), part.high.end(), i)) part.low.push_back(i);
    if (part.low.size() + part.high.size() != static_cast<std::size_t>(size))
        throw std::invalid_argument("eliminated index out of range");
    return part;
}

EffectiveHamiltonian eliminate_shell(const Eigen::MatrixXd& h, const ShellPartition& partition,
                                     double reference_energy) {
    if (h.rows() != h.cols()) throw std::invalid_argument("Hamiltonian must be square");
    if (partition.low.size() + partition.high.size() != static_cast<std::size_t>(h.rows()))
        throw std::invalid_argument("partition does not cover the matrix");

    Eigen::MatrixXd pp = take(h, partition.low, partition.low);
    if (partition.high.empty()) return {std::move(pp), reference_energy, partition.low};

    const Eigen::MatrixXd pq = take(h, partition.low, partition.high);
    const Eigen::MatrixXd qq = take(h, partition.high, partition.high);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> shell(qq);
    if (shell.info() != Eigen::Success) throw NumericalError("eigensolver failed on the eliminated block");
    const Eigen::VectorXd& mu = shell.eigenvalues();
    const double scale = std::max(1.0, qq.norm());
    Eigen::VectorXd inverse_gap(mu.size());
    for (Eigen::Index k = 0; k < mu.size(); ++k) {
        const double gap = reference_energy - mu[k];
        if (std::abs(gap) <= 1e-13 * scale) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "singular elimination: reference energy " << reference_energy
                << " coincides with shell eigenvalue " << mu[k] << " (index " << k << ")";
            throw NumericalError(msg.str());
        }
        inverse_gap[k] = 1.0 / gap;
    }
    const Eigen::MatrixXd coupling = pq * shell.eigenvectors();
    Eigen::MatrixXd eff = pp + coupling * inverse_gap.asDiagonal() * coupling.transpose();
    eff = 0.5 * (eff + eff.transpose()).eval();
    return {std::move(eff), reference_energy, partition.low};
}

GammaFit extract_gamma(const Eigen::MatrixXd& effective, const Eigen::MatrixXd& base, const MomentumGrid& grid,
                       PartialWave wave) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    if (effective.rows() != n || effective.cols() != n || base.rows() != n || base.cols() != n)
        throw std::invalid_argument("effective and base matrices must match the grid");

    Eigen::VectorXd c(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto si = static_cast<std::size_t>(i);
        c[i] = std::sqrt(grid.weights()[si]) * std::pow(grid.nodes()[si], wave.l() + 1);
    }
    const Eigen::MatrixXd residual = effective - base;
    const double r_norm = residual.norm();
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::max(effective.norm(), base.norm());
    if (r_norm <= noise) return {0.0, 0.0, true};

    const double cc = c.squaredNorm();
    const double gamma = c.dot(residual * c) / (cc * cc);
    const double misfit = (residual - gamma * c * c.transpose()).norm();
    return {gamma, misfit / r_norm, false};
}

Staircase staircase_flow(const spectral::HamiltonianMatrix& hamiltonian, const std::vector<double>& cutoffs,
                         double reference_energy) {
    const MomentumGrid& grid = hamiltonian.grid;
    const spectral::KernelSpec& spec = hamiltonian.spec;
    Staircase out{gamma_from_f({grid.cutoff(), spec.f}, spec.wave), {}};
    if (cutoffs.empty()) return out;

    double previous = grid.cutoff();
    for (double c : cutoffs) {
        if (!(c > 0.0) || !(c < previous)) throw std::invalid_argument("staircase cutoffs must descend below the grid cutoff");
        previous = c;
    }

    const Eigen::MatrixXd base_full =
        spectral::build_hamiltonian(grid, {spec.alpha, spec.wave, 0.0, grid.cutoff()}, hamiltonian.scheme).matrix;

    Eigen::MatrixXd current = hamiltonian.matrix;
    std::vector<int> active(grid.size());
    for (std::size_t i = 0; i < active.size(); ++i) active[i] = static_cast<int>(i);

    for (double cut : cutoffs) {
        std::vector<double> active_nodes;
        for (int i : active) active_nodes.push_back(grid.nodes()[static_cast<std::size_t>(i)]);
        const ShellPartition local = partition_at(active_nodes, cut);
        if (local.low.empty()) throw std::invalid_argument("staircase cutoff below every grid node");

        EffectiveHamiltonian eff = eliminate_shell(current, local, reference_energy);
        std::vector<int> kept;
        for (int k : local.low) kept.push_back(active[static_cast<std::size_t>(k)]);

        const MomentumGrid sub = grid.restrict_to(kept, cut);
        const GammaFit fit = extract_gamma(eff.matrix, take(base_full, kept, kept), sub, spec.wave);
        out.steps.push_back({cut, fit.gamma, f_from_gamma(fit.gamma, cut, spec.wave), fit.residual_separability});

        current = std::move(eff.matrix);
        active = std::move(kept);
    }
    return out;
}

StaircaseGrid staircase_grid(double cutoff, double stop, int shells, int nodes_per_shell, int low_nodes,
                             int low_panels, double ir_fraction) {
    if (!(stop > 0.0 && stop < cutoff)) throw std::invalid_argument("staircase stop must lie in (0, cutoff)");
    if (shells < 1 || nodes_per_shell < 1 || low_panels < 2 || low_nodes < low_panels)
        throw std::invalid_argument("invalid staircase grid sizes");

    std::vector<double> edges{0.0};
    std::vector<int> counts;
    const double q_ir = ir_fraction * stop;
    for (int k = 0; k < low_panels; ++k) {
        edges.push_back(q_ir * std::pow(1.0 / ir_fraction, double(k) / (low_panels - 1)));
        counts.push_back(low_nodes / low_panels + (k < low_nodes % low_panels ? 1 : 0));
    }
    edges.back() = stop;

    const double width = (cutoff - stop) / shells;
    std::vector<double> cutoffs;
    for (int k = 1; k <= shells; ++k) {
        edges.push_back(k == shells ? cutoff : stop + k * width);
        counts.push_back(nodes_per_shell);
    }
    for (int k = shells - 1; k >= 0; --k) cutoffs.push_back(k == 0 ? stop : stop + k * width);
    return {MomentumGrid::composite(edges, counts), std::move(cutoffs)};
}

}  // namespace rgflow::rgt
