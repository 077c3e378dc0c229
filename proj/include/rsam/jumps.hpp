#pragma once

#include <vector>

#include <Eigen/Dense>

namespace rsam {

using Eigen::VectorXd;

// One atom of the jump measure: mark gamma in R^m, Poisson intensity
// weight per unit time, and whether the mark sits in the compensated
// region Z0.
struct JumpAtom {
    VectorXd gamma;
    double weight = 0.0;
    bool in_z0 = true;
};

// Finite-atom jump measure (compound Poisson). Infinite-activity measures
// are supported only through truncated atom approximations; the in_z0 flag
// keeps the small-jump compensation bookkeeping intact.
struct JumpMeasure {
    std::vector<JumpAtom> atoms;

    bool empty() const { return atoms.empty(); }
    double total_intensity() const;
    // sum of weight * |gamma|^2 over compensated atoms
    double second_moment_z0() const;
};

// G(z,h) = 1 - (1 + h'gamma)^(-theta). Always < 1 on the admissible set.
// Throws DomainError if 1 + h'gamma <= 0.
double big_g(const VectorXd& h, const VectorXd& gamma, double theta);

// Integral term of the running cost g:
//   sum_k w_k { (1/theta)[(1+h'gamma_k)^(-theta) - 1] + h'gamma_k 1{Z0} }
double jump_integral_g(const VectorXd& h, const JumpMeasure& jumps, double theta);

// The admissible set J = { h : 1 + h'gamma_k > 0 for every atom mark },
// an open convex intersection of half-spaces containing h = 0. For an
// empty atom list J is all of R^m and the optimizer falls back to a
// configurable box |h_i| <= box_bound.
class AdmissibleSet {
public:
    AdmissibleSet() = default;
    AdmissibleSet(const JumpMeasure& jumps, int m,
                  double delta = 1e-6, double box_bound = 1e3);

    bool contains(const VectorXd& h) const;
    bool contains_strict(const VectorXd& h, double delta) const;
    bool contains_strict(const VectorXd& h) const { return contains_strict(h, delta_); }

    // min_k (1 + h'gamma_k); +infinity when there are no marks
    double slack(const VectorXd& h) const;

    const std::vector<VectorXd>& marks() const { return marks_; }
    double delta() const { return delta_; }
    double box_bound() const { return box_bound_; }
    int dim() const { return m_; }

    // Feasible interval for moving along coordinate axis i from the origin,
    // intersected with the box bound. Used for bounded scans.
    std::pair<double, double> coordinate_interval(int i) const;

private:
    std::vector<VectorXd> marks_;  // deduplicated atom marks
    int m_ = 0;
    double delta_ = 1e-6;
    double box_bound_ = 1e3;
};

}  // namespace rsam
