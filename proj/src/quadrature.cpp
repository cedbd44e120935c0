#include "rgflow/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace rgflow {

namespace {

// P_n(x) and P_{n-1}(x) by the three-term recurrence.
std::pair<double, double> legendre_pair(int n, double x) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    return {p1, p0};
}

}  // namespace

QuadratureRule gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("Gauss-Legendre rule needs at least one node");
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));

    // Newton from the Tricomi guess; roots come in +/- pairs.
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int iter = 0; iter < 100; ++iter) {
            const auto [pn, pnm1] = legendre_pair(n, x);
            const double dp = n * (x * pn - pnm1) / (x * x - 1.0);
            const double dx = pn / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const auto [pn, pnm1] = legendre_pair(n, x);
        const double dp = n * (x * pn - pnm1) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(n - 1 - i);
        rule.nodes[lo] = -x;
        rule.nodes[hi] = x;
        rule.weights[lo] = w;
        rule.weights[hi] = w;
    }
    if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    return rule;
}

MomentumGrid::MomentumGrid(double cutoff, std::vector<double> nodes, std::vector<double> weights,
                           double infrared_resolution)
    : cutoff_(cutoff), nodes_(std::move(nodes)), weights_(std::move(weights)), infrared_(infrared_resolution) {
    if (!(cutoff_ > 0.0) || !std::isfinite(cutoff_)) throw std::invalid_argument("grid cutoff must be positive");
    if (nodes_.empty() || nodes_.size() != weights_.size())
        throw std::invalid_argument("grid needs matching, non-empty node and weight lists");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!(nodes_[i] > 0.0) || !(nodes_[i] < cutoff_))
            throw std::invalid_argument("grid node " + std::to_string(i) + " outside (0, cutoff)");
        if (i > 0 && !(nodes_[i] > nodes_[i - 1]))
            throw std::invalid_argument("grid nodes must be strictly increasing");
        if (!(weights_[i] > 0.0)) throw std::invalid_argument("grid weights must be positive");
    }
    if (!(infrared_ > 0.0)) throw std::invalid_argument("infrared resolution must be positive");
}

MomentumGrid MomentumGrid::gauss_legendre(double cutoff, int n) {
    const double edges[] = {0.0, cutoff};
    const int counts[] = {n};
    MomentumGrid g = composite(edges, counts);
    g.infrared_ = g.nodes_.front();
    return g;
}

MomentumGrid MomentumGrid::composite(std::span<const double> edges, std::span<const int> nodes_per_panel) {
    if (edges.size() < 2 || nodes_per_panel.size() + 1 != edges.size())
        throw std::invalid_argument("composite grid needs one node count per panel");
    if (edges.front() != 0.0) throw std::invalid_argument("first panel must start at zero momentum");

    std::vector<double> nodes, weights;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        const double a = edges[k], b = edges[k + 1];
        if (!(b > a)) throw std::invalid_argument("panel edges must increase");
        const QuadratureRule rule = rgflow::gauss_legendre(nodes_per_panel[k]);
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            nodes.push_back(mid + half * rule.nodes[i]);
            weights.push_back(half * rule.weights[i]);
        }
    }
    return MomentumGrid(edges.back(), std::move(nodes), std::move(weights), edges[1]);
}

MomentumGrid MomentumGrid::graded(double cutoff, int n, int panels, double ir_fraction) {
    if (panels < 2 || n < panels) throw std::invalid_argument("graded grid needs at least two panels and one node each");
    if (!(ir_fraction > 0.0 && ir_fraction < 1.0)) throw std::invalid_argument("ir_fraction must be in (0, 1)");
    if (!(cutoff > 0.0)) throw std::invalid_argument("grid cutoff must be positive");

    std::vector<double> edges{0.0};
    const double q_ir = ir_fraction * cutoff;
    const int growing = panels - 1;
    for (int k = 0; k <= growing; ++k) edges.push_back(q_ir * std::pow(1.0 / ir_fraction, double(k) / growing));
    edges.back() = cutoff;

    // Remainder nodes go to the outermost panels.
    std::vector<int> counts(static_cast<std::size_t>(panels), n / panels);
    for (int r = 0; r < n % panels; ++r) ++counts[counts.size() - 1 - static_cast<std::size_t>(r)];
    return composite(edges, counts);
}

MomentumGrid MomentumGrid::restrict_to(std::span<const int> indices, double new_cutoff) const {
    std::vector<double> nodes, weights;
    nodes.reserve(indices.size());
    weights.reserve(indices.size());
    for (int i : indices) {
        if (i < 0 || static_cast<std::size_t>(i) >= nodes_.size()) throw std::out_of_range("grid index out of range");
        nodes.push_back(nodes_[static_cast<std::size_t>(i)]);
        weights.push_back(weights_[static_cast<std::size_t>(i)]);
    }
    return MomentumGrid(new_cutoff, std::move(nodes), std::move(weights), infrared_);
}

}  // namespace rgflow
