#include "rsam/dynamics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "rsam/errors.hpp"
#include "rsam/linalg.hpp"

namespace rsam {

double eval_g(const VectorXd& x, const VectorXd& h, const MarketModel& model) {
    const double quad = 0.5 * (model.theta + 1.0) *
                        h.dot(model.sigma_sigma_t() * h);
    const double lin = model.a0 + model.A0.dot(x) +
                       h.dot(model.a_hat() + model.A_hat() * x);
    return quad - lin + jump_integral_g(h, model.jumps, model.theta);
}

VectorXd eval_f(const VectorXd& x, const VectorXd& h, const MarketModel& model) {
    return model.b + model.B * x - model.theta * (model.lambda_sigma_t() * h);
}

namespace {

// Scaled inner objective psi(h) = g(x,h) - h' SigmaLambda' (p/r). Dividing
// the policy-improvement objective f'p + theta g r by theta*r > 0 leaves the
// minimizer unchanged and keeps the numbers O(1).
struct InnerObjective {
    MatrixXd SS;  // Sigma Sigma'
    VectorXd q;   // a_hat + A_hat x + Sigma Lambda' p / r
    const JumpMeasure& jumps;
    double theta;
    const AdmissibleSet& set;
    bool use_box;

    InnerObjective(const VectorXd& x, double r, const VectorXd& p,
                   const MarketModel& mdl, const AdmissibleSet& adm)
        : SS(mdl.sigma_sigma_t()), jumps(mdl.jumps), theta(mdl.theta),
          set(adm), use_box(adm.marks().empty()) {
        q = mdl.a_hat() + mdl.A_hat() * x +
            (mdl.lambda_sigma_t().transpose() * p) / r;
    }

    bool feasible(const VectorXd& h) const {
        if (use_box && set.box_bound() - h.lpNorm<Eigen::Infinity>() <= 0.0)
            return false;
        return set.slack(h) > 0.0;
    }

    double value(const VectorXd& h) const {
        double val = 0.5 * (theta + 1.0) * h.dot(SS * h) - h.dot(q);
        for (const auto& a : jumps.atoms) {
            const double s = 1.0 + h.dot(a.gamma);
            double term = (std::pow(s, -theta) - 1.0) / theta;
            if (a.in_z0) term += h.dot(a.gamma);
            val += a.weight * term;
        }
        return val;
    }

    double barrier(const VectorXd& h) const {
        double s = 0.0;
        for (const auto& g : set.marks()) s += std::log(1.0 + h.dot(g));
        if (use_box)
            for (int i = 0; i < h.size(); ++i)
                s += std::log(set.box_bound() - h(i)) +
                     std::log(set.box_bound() + h(i));
        return s;
    }

    double merit(const VectorXd& h, double mu) const {
        return value(h) - (mu > 0.0 ? mu * barrier(h) : 0.0);
    }

    void grad_hess(const VectorXd& h, double mu, VectorXd& grad,
                   MatrixXd& hess) const {
        grad = (theta + 1.0) * (SS * h) - q;
        hess = (theta + 1.0) * SS;
        for (const auto& a : jumps.atoms) {
            const double s = 1.0 + h.dot(a.gamma);
            const double pw = std::pow(s, -(theta + 1.0));
            grad += a.weight * ((a.in_z0 ? 1.0 : 0.0) - pw) * a.gamma;
            hess += a.weight * (theta + 1.0) * (pw / s) * a.gamma *
                    a.gamma.transpose();
        }
        if (mu > 0.0) {
            for (const auto& g : set.marks()) {
                const double s = 1.0 + h.dot(g);
                grad -= (mu / s) * g;
                hess += (mu / (s * s)) * g * g.transpose();
            }
            if (use_box) {
                const double bb = set.box_bound();
                for (int i = 0; i < h.size(); ++i) {
                    grad(i) += mu * (1.0 / (bb - h(i)) - 1.0 / (bb + h(i)));
                    hess(i, i) += mu * (1.0 / ((bb - h(i)) * (bb - h(i))) +
                                        1.0 / ((bb + h(i)) * (bb + h(i))));
                }
            }
        }
    }
};

// Damped Newton on merit(., mu) down to gradient tolerance. Returns the
// final gradient inf-norm; decrements budget per Newton step taken.
double newton_descend(const InnerObjective& obj, VectorXd& h, double mu,
                      double tol, int& budget) {
    VectorXd grad(h.size());
    MatrixXd hess(h.size(), h.size());
    while (true) {
        obj.grad_hess(h, mu, grad, hess);
        const double gnorm = grad.lpNorm<Eigen::Infinity>();
        if (gnorm <= tol || budget <= 0) return gnorm;

        Eigen::LLT<MatrixXd> llt(hess);
        VectorXd step = llt.info() == Eigen::Success ? VectorXd(llt.solve(-grad))
                                                     : VectorXd(-grad);
        --budget;
        const double base = obj.merit(h, mu);
        const double slope = grad.dot(step);
        // Armijo with an epsilon floor: near the optimum the predicted
        // decrease sits below double resolution of the merit value.
        const double floor_eps = 1e-14 * (std::fabs(base) + 1.0);
        double lam = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 60; ++bt) {
            VectorXd cand = h + lam * step;
            if (obj.feasible(cand) &&
                obj.merit(cand, mu) <= base + 1e-4 * lam * slope + floor_eps) {
                h = cand;
                moved = true;
                break;
            }
            lam *= 0.5;
        }
        if (!moved) return gnorm;  // at numerical resolution
    }
}

// Damped Newton in the reduced coordinates h = h_p + Z y of an affine
// constraint set. Same merit/feasibility rules as the full-space descent.
double newton_descend_reduced(const InnerObjective& obj, const MatrixXd& Z,
                              const VectorXd& h_p, VectorXd& y, double mu,
                              double tol, int& budget) {
    if (Z.cols() == 0) return 0.0;
    VectorXd grad_h(h_p.size());
    MatrixXd hess_h(h_p.size(), h_p.size());
    while (true) {
        const VectorXd h = h_p + Z * y;
        obj.grad_hess(h, mu, grad_h, hess_h);
        const VectorXd grad = Z.transpose() * grad_h;
        const double gnorm = grad.lpNorm<Eigen::Infinity>();
        if (gnorm <= tol || budget <= 0) return gnorm;

        const MatrixXd hess = Z.transpose() * hess_h * Z;
        Eigen::LLT<MatrixXd> llt(hess);
        VectorXd step = llt.info() == Eigen::Success ? VectorXd(llt.solve(-grad))
                                                     : VectorXd(-grad);
        --budget;
        const double base = obj.merit(h, mu);
        const double slope = grad.dot(step);
        const double floor_eps = 1e-14 * (std::fabs(base) + 1.0);
        double lam = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 60; ++bt) {
            VectorXd cand_y = y + lam * step;
            VectorXd cand_h = h_p + Z * cand_y;
            if (obj.feasible(cand_h) &&
                obj.merit(cand_h, mu) <= base + 1e-4 * lam * slope + floor_eps) {
                y = cand_y;
                moved = true;
                break;
            }
            lam *= 0.5;
        }
        if (!moved) return gnorm;
    }
}

}  // namespace

VectorXd optimal_h_constrained(const VectorXd& x, double r, const VectorXd& p,
                               const MarketModel& model, const MatrixXd& C,
                               const VectorXd& e, const OptimizerOptions& opts,
                               const VectorXd* warm_start) {
    if (r <= 0.0) throw DomainError("optimal_h_constrained: r must be positive");
    const AdmissibleSet set = model.admissible_set(opts.delta, opts.box_bound);
    const InnerObjective obj(x, r, p, model, set);

    // Null space of C and the minimum-norm particular solution.
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(C);
    if (cod.rank() < C.rows())
        throw DomainError("optimal_h_constrained: rank-deficient constraints");
    const VectorXd h_part = cod.pseudoInverse() * e;
    Eigen::FullPivLU<MatrixXd> lu(C);
    const MatrixXd Z = lu.kernel();  // m x (m - k)

    VectorXd y = VectorXd::Zero(Z.cols());
    if (warm_start && warm_start->size() == model.m) {
        // closest manifold point to the warm start
        const VectorXd yw =
            (Z.transpose() * Z).ldlt().solve(Z.transpose() * (*warm_start - h_part));
        if (obj.feasible(h_part + Z * yw)) y = yw;
    }
    if (!obj.feasible(h_part + Z * y))
        throw DomainError(
            "optimal_h_constrained: no strictly feasible start on the manifold");

    if (Z.cols() > 0) {
        int budget = opts.max_newton;
        for (double mu = opts.mu_start; mu >= opts.mu_end; mu *= 1e-2)
            newton_descend_reduced(obj, Z, h_part, y, mu,
                                   std::max(opts.tol, 0.1 * mu), budget);
        const double gnorm = newton_descend_reduced(obj, Z, h_part, y, 0.0,
                                                    0.02 * opts.tol, budget);
        if (gnorm > opts.tol) {
            std::ostringstream msg;
            msg << "optimal_h_constrained: tolerance not met, |grad|_inf = "
                << gnorm;
            throw OptFailure(msg.str());
        }
    }
    const VectorXd h = h_part + Z * y;
    if (!set.contains_strict(h, opts.delta))
        throw DomainError("optimal_h_constrained: minimizer hits the margin");
    return h;
}

VectorXd optimal_h(const VectorXd& x, double r, const VectorXd& p,
                   const MarketModel& model, const OptimizerOptions& opts,
                   const VectorXd* warm_start) {
    if (r <= 0.0) throw DomainError("optimal_h: r must be positive");
    const AdmissibleSet set = model.admissible_set(opts.delta, opts.box_bound);
    const InnerObjective obj(x, r, p, model, set);

    VectorXd h = VectorXd::Zero(model.m);
    if (warm_start && warm_start->size() == model.m &&
        set.contains_strict(*warm_start, opts.delta) && obj.feasible(*warm_start))
        h = *warm_start;

    int budget = opts.max_newton;
    for (double mu = opts.mu_start; mu >= opts.mu_end; mu *= 1e-2)
        newton_descend(obj, h, mu, std::max(opts.tol, 0.1 * mu), budget);
    // Final polish aims well below tol so the contract holds with margin
    // (a stall at the floating-point floor still satisfies it).
    const double gnorm = newton_descend(obj, h, 0.0, 0.02 * opts.tol, budget);

    if (gnorm > opts.tol) {
        std::ostringstream msg;
        msg << "optimal_h: tolerance " << opts.tol << " not met, |grad|_inf = "
            << gnorm << (budget <= 0 ? " (step budget exhausted)" : " (stalled)");
        throw OptFailure(msg.str());
    }
    if (!set.contains_strict(h, opts.delta)) {
        std::ostringstream msg;
        msg << "optimal_h: minimizer slack " << set.slack(h)
            << " below interior margin " << opts.delta;
        throw OptFailure(msg.str());
    }
    return h;
}

double hamiltonian(const VectorXd& x, double r, const VectorXd& p,
                   const MarketModel& model, const OptimizerOptions& opts) {
    const VectorXd h = optimal_h(x, r, p, model, opts);
    return eval_f(x, h, model).dot(p) + model.theta * eval_g(x, h, model) * r;
}

ZeroBetaPolicy zero_beta(const MarketModel& model, double delta) {
    const VectorXd x0 = VectorXd::Zero(model.n);
    if (model.A0.isZero(0.0)) {
        VectorXd h = VectorXd::Zero(model.m);
        return {h, eval_g(x0, h, model)};
    }
    const MatrixXd Ah = model.A_hat();
    if (numerical_rank(Ah) < model.n)
        throw RankError("zero_beta: rank(A_hat) < n, no zero-beta policy exists");

    // Minimum-norm solution of A_hat' h = -A0.
    VectorXd h = pinv(Ah.transpose()) * (-model.A0);
    const AdmissibleSet set = model.admissible_set(delta);
    if (!set.contains_strict(h, delta)) {
        std::ostringstream msg;
        msg << "zero_beta: minimum-norm candidate (norm " << h.norm()
            << ") leaves the admissible set; rescaling would destroy "
               "h'A_hat = -A0";
        throw NotZeroBeta(msg.str());
    }
    return {h, eval_g(x0, h, model)};
}

}  // namespace rsam
