#pragma once

#include <optional>

#include "rsam/model.hpp"

namespace rsam {

// Running cost of the transformed problem:
//   g(x,h) = (theta+1)/2 h'SS'h - a0 - A0'x - h'(a_hat + A_hat x)
//            + jump integral term
double eval_g(const VectorXd& x, const VectorXd& h, const MarketModel& model);

// Drift of the factor process under the h-measure:
//   f(x,h) = b + B x - theta Lambda Sigma' h
VectorXd eval_f(const VectorXd& x, const VectorXd& h, const MarketModel& model);

struct OptimizerOptions {
    double tol = 1e-9;        // inf-norm of the (scaled) objective gradient
    int max_newton = 100;
    double delta = 1e-6;      // strict-interior margin kept from every mark
    double box_bound = 1e3;   // stands in for J when there are no atoms
    double mu_start = 1e-2;   // log-barrier weight, decreased geometrically
    double mu_end = 1e-8;
};

// Unique minimizer over J of  h |-> f(x,h)'p + theta g(x,h) r  for r > 0
// (the policy-improvement prescription in the exponentially transformed
// variables). Strictly concave inner problem; solved by damped Newton with
// a log-barrier continuation. Returns an h with slack >= delta from every
// mark. Throws OptFailure if the step budget is exhausted.
VectorXd optimal_h(const VectorXd& x, double r, const VectorXd& p,
                   const MarketModel& model,
                   const OptimizerOptions& opts = {},
                   const VectorXd* warm_start = nullptr);

// H(x,r,p) = f(x,h*)'p + theta g(x,h*) r at h* = optimal_h(x,r,p).
double hamiltonian(const VectorXd& x, double r, const VectorXd& p,
                   const MarketModel& model,
                   const OptimizerOptions& opts = {});

// Inner problem restricted to the affine set {h : C h = e}. Used by the
// solver-consistent policy improvement, which pins drift components to
// zero along upwind switching manifolds. Returns the constrained minimizer;
// throws DomainError if no strictly feasible point on the manifold is found.
VectorXd optimal_h_constrained(const VectorXd& x, double r, const VectorXd& p,
                               const MarketModel& model, const MatrixXd& C,
                               const VectorXd& e,
                               const OptimizerOptions& opts = {},
                               const VectorXd* warm_start = nullptr);

struct ZeroBetaPolicy {
    VectorXd h;      // the allocation
    double g_check;  // the state-independent running cost g(., h)
};

// Zero-beta policy: h with h'A_hat = -A0', which makes g independent of x.
// A0 = 0 yields h = 0 with no rank requirement. Otherwise the minimum-norm
// solution is returned if it lies strictly inside J; a candidate that would
// need rescaling is rejected with NotZeroBeta (rescaling breaks h'A_hat = -A0),
// and rank(A_hat) < n raises RankError.
ZeroBetaPolicy zero_beta(const MarketModel& model, double delta = 1e-6);

}  // namespace rsam
