#include "rsam/jumps.hpp"

#include <cmath>
#include <limits>

#include "rsam/errors.hpp"

namespace rsam {

double JumpMeasure::total_intensity() const {
    double w = 0.0;
    for (const auto& a : atoms) w += a.weight;
    return w;
}

double JumpMeasure::second_moment_z0() const {
    double s = 0.0;
    for (const auto& a : atoms)
        if (a.in_z0) s += a.weight * a.gamma.squaredNorm();
    return s;
}

double big_g(const VectorXd& h, const VectorXd& gamma, double theta) {
    const double s = 1.0 + h.dot(gamma);
    if (s <= 0.0)
        throw DomainError("big_g: 1 + h'gamma <= 0 (h outside admissible set)");
    return 1.0 - std::pow(s, -theta);
}

double jump_integral_g(const VectorXd& h, const JumpMeasure& jumps, double theta) {
    double total = 0.0;
    for (const auto& a : jumps.atoms) {
        const double s = 1.0 + h.dot(a.gamma);
        if (s <= 0.0)
            throw DomainError("jump_integral_g: atom violates 1 + h'gamma > 0");
        double term = (std::pow(s, -theta) - 1.0) / theta;
        if (a.in_z0) term += h.dot(a.gamma);
        total += a.weight * term;
    }
    return total;
}

AdmissibleSet::AdmissibleSet(const JumpMeasure& jumps, int m,
                             double delta, double box_bound)
    : m_(m), delta_(delta), box_bound_(box_bound) {
    for (const auto& a : jumps.atoms) {
        bool dup = false;
        for (const auto& g : marks_)
            if ((g - a.gamma).lpNorm<Eigen::Infinity>() == 0.0) {
                dup = true;
                break;
            }
        if (!dup) marks_.push_back(a.gamma);
    }
}

double AdmissibleSet::slack(const VectorXd& h) const {
    double s = std::numeric_limits<double>::infinity();
    for (const auto& g : marks_) s = std::min(s, 1.0 + h.dot(g));
    return s;
}

bool AdmissibleSet::contains(const VectorXd& h) const { return slack(h) > 0.0; }

bool AdmissibleSet::contains_strict(const VectorXd& h, double delta) const {
    return slack(h) >= delta;
}

std::pair<double, double> AdmissibleSet::coordinate_interval(int i) const {
    double lo = -box_bound_, hi = box_bound_;
    for (const auto& g : marks_) {
        const double gi = g(i);
        if (gi > 0.0) lo = std::max(lo, -1.0 / gi);
        if (gi < 0.0) hi = std::min(hi, -1.0 / gi);
    }
    return {lo, hi};
}

}  // namespace rsam
