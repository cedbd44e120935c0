#pragma once

#include <span>
#include <vector>

namespace rgflow {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1], nodes ascending.
QuadratureRule gauss_legendre(int n);

/// Quadrature nodes and weights for integrals over (0, cutoff).
///
/// Grids are built from panels, each carrying its own Gauss-Legendre rule.
/// `infrared_resolution()` is the momentum below which the grid stops
/// resolving structure: the first panel edge for composite grids, the
/// smallest node for a single panel.
class MomentumGrid {
public:
    /// Validates: nodes strictly increasing in (0, cutoff), weights > 0.
    MomentumGrid(double cutoff, std::vector<double> nodes, std::vector<double> weights,
                 double infrared_resolution);

    /// Single n-point panel on (0, cutoff).
    static MomentumGrid gauss_legendre(double cutoff, int n);

    /// Composite rule: panel k spans [edges[k], edges[k+1]] with
    /// nodes_per_panel[k] points. edges[0] must be 0 and edges.back() the cutoff.
    static MomentumGrid composite(std::span<const double> edges, std::span<const int> nodes_per_panel);

    /// Panel [0, ir_fraction*cutoff] followed by (panels - 1) geometrically
    /// growing panels up to the cutoff, n/panels nodes each. Resolves bound
    /// states spread over many decades of momentum.
    static MomentumGrid graded(double cutoff, int n, int panels = 20, double ir_fraction = 1e-9);

    double cutoff() const noexcept { return cutoff_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    const std::vector<double>& nodes() const noexcept { return nodes_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    double infrared_resolution() const noexcept { return infrared_; }

    /// The grid made of the listed nodes (ascending indices) with their
    /// original weights, cut off at `new_cutoff`.
    MomentumGrid restrict_to(std::span<const int> indices, double new_cutoff) const;

private:
    double cutoff_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
    double infrared_;
};

}  // namespace rgflow
