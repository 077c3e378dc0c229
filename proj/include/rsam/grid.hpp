#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

namespace rsam {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Rectangular space-time lattice over [0,T] x prod_d [-R_d, R_d].
// The box stands in for the ball B_R of the bounded-domain construction.
// Spatial dimension is capped at 2 for the dense reference solver.
struct Grid {
    VectorXd radius;         // R per dimension (n)
    std::vector<int> nodes;  // nodes per dimension, each >= 3
    double dt = 0.0;         // actual step = T / nt
    int nt = 0;              // number of time steps; nt+1 slices

    // Builds a grid with dt = T/ceil(T/dt_request).
    static Grid make(const VectorXd& radius, const std::vector<int>& nodes,
                     double dt_request, double T);

    int dim() const { return static_cast<int>(nodes.size()); }
    double spacing(int d) const {
        return 2.0 * radius(d) / (nodes[d] - 1);
    }
    int node_count() const;
    double coord(int d, int idx) const { return -radius(d) + idx * spacing(d); }
    double time(int j) const { return j * dt; }

    // Flattened index <-> per-dimension indices (first dimension fastest).
    int flatten(const std::array<int, 2>& idx) const;
    std::array<int, 2> unflatten(int flat) const;

    bool is_boundary(const std::array<int, 2>& idx) const;
    VectorXd point(const std::array<int, 2>& idx) const;
};

// Phi_tilde (or Phi) sampled on the lattice; slices[j] holds time t_j.
struct ValueGrid {
    Grid grid;
    std::vector<VectorXd> slices;  // nt+1 entries, each node_count() long

    double at(int j, int flat) const { return slices[j](flat); }
    double& at(int j, int flat) { return slices[j](flat); }
};

// Allocation h per (time slice, node); slices[j] is m x node_count().
struct PolicyGrid {
    Grid grid;
    int m = 0;
    std::vector<MatrixXd> slices;

    VectorXd at(int j, int flat) const { return slices[j].col(flat); }

    static PolicyGrid constant(const Grid& grid, const VectorXd& h, int nt_slices);
};

// Multilinear interpolation of a policy grid at (t, x). Queries with x
// outside the box return `outside`; t is clamped to [0,T] and mapped to
// the step's left slice.
VectorXd interpolate_policy(const PolicyGrid& pg, double t, const VectorXd& x,
                            const VectorXd& outside);

// Same scheme for the value grid, interior queries only.
double interpolate_value(const ValueGrid& vg, double t, const VectorXd& x);

}  // namespace rsam
