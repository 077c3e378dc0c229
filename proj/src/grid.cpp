#include "rsam/grid.hpp"

#include <cmath>

#include "rsam/errors.hpp"

namespace rsam {

Grid Grid::make(const VectorXd& radius, const std::vector<int>& nodes,
                double dt_request, double T) {
    Grid g;
    g.radius = radius;
    g.nodes = nodes;
    if (radius.size() != static_cast<int>(nodes.size()))
        throw DimensionMismatch("grid: radius/nodes dimension mismatch");
    if (nodes.empty() || nodes.size() > 2)
        throw DimensionMismatch(
            "grid: dense reference solver supports n in {1,2} only");
    for (int nd : nodes)
        if (nd < 3) throw DomainError("grid: need at least 3 nodes per dimension");
    for (int d = 0; d < radius.size(); ++d)
        if (radius(d) <= 0.0) throw DomainError("grid: radius must be positive");
    if (dt_request <= 0.0 || T <= 0.0)
        throw DomainError("grid: dt and T must be positive");
    g.nt = static_cast<int>(std::ceil(T / dt_request - 1e-12));
    g.nt = std::max(g.nt, 1);
    g.dt = T / g.nt;
    return g;
}

int Grid::node_count() const {
    int c = 1;
    for (int nd : nodes) c *= nd;
    return c;
}

int Grid::flatten(const std::array<int, 2>& idx) const {
    return dim() == 1 ? idx[0] : idx[0] + nodes[0] * idx[1];
}

std::array<int, 2> Grid::unflatten(int flat) const {
    if (dim() == 1) return {flat, 0};
    return {flat % nodes[0], flat / nodes[0]};
}

bool Grid::is_boundary(const std::array<int, 2>& idx) const {
    for (int d = 0; d < dim(); ++d)
        if (idx[d] == 0 || idx[d] == nodes[d] - 1) return true;
    return false;
}

VectorXd Grid::point(const std::array<int, 2>& idx) const {
    VectorXd x(dim());
    for (int d = 0; d < dim(); ++d) x(d) = coord(d, idx[d]);
    return x;
}

PolicyGrid PolicyGrid::constant(const Grid& grid, const VectorXd& h, int nt_slices) {
    PolicyGrid pg;
    pg.grid = grid;
    pg.m = static_cast<int>(h.size());
    pg.slices.assign(nt_slices, h * Eigen::RowVectorXd::Ones(grid.node_count()));
    return pg;
}

namespace {

struct InterpWeights {
    std::array<int, 2> base{0, 0};
    std::array<double, 2> frac{0.0, 0.0};
    bool inside = true;
};

InterpWeights locate(const Grid& g, const VectorXd& x) {
    InterpWeights w;
    for (int d = 0; d < g.dim(); ++d) {
        const double lo = -g.radius(d), hi = g.radius(d);
        if (x(d) < lo || x(d) > hi) {
            w.inside = false;
            return w;
        }
        double u = (x(d) - lo) / g.spacing(d);
        int i = static_cast<int>(std::floor(u));
        i = std::min(std::max(i, 0), g.nodes[d] - 2);
        w.base[d] = i;
        w.frac[d] = std::min(std::max(u - i, 0.0), 1.0);
    }
    return w;
}

int time_slice(const Grid& g, double t) {
    int j = static_cast<int>(std::floor(t / g.dt));
    return std::min(std::max(j, 0), g.nt);
}

}  // namespace

VectorXd interpolate_policy(const PolicyGrid& pg, double t, const VectorXd& x,
                            const VectorXd& outside) {
    const Grid& g = pg.grid;
    const InterpWeights w = locate(g, x);
    if (!w.inside) return outside;
    const MatrixXd& slice = pg.slices[time_slice(g, t)];
    if (g.dim() == 1) {
        const int i = w.base[0];
        return (1.0 - w.frac[0]) * slice.col(i) + w.frac[0] * slice.col(i + 1);
    }
    const int i = w.base[0], k = w.base[1];
    const double fx = w.frac[0], fy = w.frac[1];
    return (1 - fx) * (1 - fy) * slice.col(g.flatten({i, k})) +
           fx * (1 - fy) * slice.col(g.flatten({i + 1, k})) +
           (1 - fx) * fy * slice.col(g.flatten({i, k + 1})) +
           fx * fy * slice.col(g.flatten({i + 1, k + 1}));
}

double interpolate_value(const ValueGrid& vg, double t, const VectorXd& x) {
    const Grid& g = vg.grid;
    const InterpWeights w = locate(g, x);
    if (!w.inside)
        throw DomainError("interpolate_value: point outside the grid box");
    const VectorXd& slice = vg.slices[time_slice(g, t)];
    if (g.dim() == 1) {
        const int i = w.base[0];
        return (1.0 - w.frac[0]) * slice(i) + w.frac[0] * slice(i + 1);
    }
    const int i = w.base[0], k = w.base[1];
    const double fx = w.frac[0], fy = w.frac[1];
    return (1 - fx) * (1 - fy) * slice(g.flatten({i, k})) +
           fx * (1 - fy) * slice(g.flatten({i + 1, k})) +
           (1 - fx) * fy * slice(g.flatten({i, k + 1})) +
           fx * fy * slice(g.flatten({i + 1, k + 1}));
}

}  // namespace rsam
