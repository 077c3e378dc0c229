#pragma once

#include <cstdint>
#include <functional>
#include <limits>

#include "rsam/dynamics.hpp"
#include "rsam/grid.hpp"

namespace rsam {

// Optional time-varying factor loading Lambda(t) (filtered reformulations).
using ModelSchedule = std::function<MarketModel(double)>;

// Drift discretization. HybridCentral keeps second-order central
// differences at every node whose M-matrix budget
//   |f_d| <= a_dd/dx_d - |a_12| dx_d/(dx_1 dx_2)
// holds with a policy-safety margin, and falls back to first-order
// upwinding elsewhere; Upwind uses sign-adapted one-sided differences
// everywhere. The choice is made per node from the zero-beta drift, never
// from the running policy, so the pointwise improvement can minimize the
// assembler's exact objective and the iterate sequence stays provably
// non-increasing.
enum class DriftScheme { HybridCentral, Upwind };

// Time stepping. BackwardEuler is the reference mode: unconditionally
// positive and the iterate monotonicity argument is exact. CrankNicolson
// (with a two-step backward-Euler start) converges at second order in dt;
// its explicit half keeps nonnegative weights only while
// dt <= 2 dx^2 / max a_dd, which the solver reports when broken.
enum class TimeScheme { BackwardEuler, CrankNicolson };

struct HjbOptions {
    double tol_pi = 1e-8;  // sup-norm stopping tolerance of policy iteration
    int k_max = 50;
    bool inline_howard = false;  // re-optimize per time step inside the sweep
    int threads = 1;
    DriftScheme scheme = DriftScheme::HybridCentral;
    TimeScheme time_scheme = TimeScheme::BackwardEuler;
    int rannacher_steps = 2;
    double policy_drift_cap = 10.0;  // |h|_2 allowance in the stencil budget
    OptimizerOptions opt;
};

struct SolveDiagnostics {
    bool clamped = false;  // non-positive values clamped: grid too coarse
    int clamp_count = 0;
    double min_value = std::numeric_limits<double>::infinity();
    // dt above this bound loses the M-matrix row-sum condition (1 - dt*theta*g > 0)
    double stability_dt_bound = std::numeric_limits<double>::infinity();
    bool cross_term_warning = false;  // 2-D mixed term broke off-diag dominance
};

struct IterationStats {
    int iterations = 0;
    std::vector<double> decrements;    // sup|Phi_k - Phi_{k-1}| per iteration
    std::vector<double> max_increase;  // worst nodewise increase (monotonicity)
    SolveDiagnostics diag;
};

// Backward implicit solve of the linear parabolic problem
//   dPhi/dt + 1/2 tr(LL' D2 Phi) + f(x,h)'D Phi + theta g(x,h) Phi = 0
// under the frozen policy, terminal slice v^-theta, lateral Dirichlet data
// v^-theta exp(theta g_check (T-t)). Drift per DriftScheme, sign-adapted
// 7-point stencil on the mixed term, zeroth-order term implicit.
ValueGrid solve_linear_pde(const PolicyGrid& policy, const Grid& grid,
                           const MarketModel& model, const ZeroBetaPolicy& zb,
                           const HjbOptions& opts = {},
                           SolveDiagnostics* diag = nullptr,
                           const ModelSchedule* schedule = nullptr);

// Pointwise improvement: at each interior node, h minimizes the assembler's
// discrete objective (gradient estimates matching the drift stencil of the
// node); boundary nodes copy the zero-beta policy.
PolicyGrid policy_improve(const ValueGrid& values, const MarketModel& model,
                          const ZeroBetaPolicy& zb, const HjbOptions& opts = {},
                          const ModelSchedule* schedule = nullptr);

struct PolicyIterationResult {
    ValueGrid values;
    PolicyGrid policy;
    IterationStats stats;
    ZeroBetaPolicy zb;
};

// Approximation in policy space from the zero-beta start: alternates
// solve_linear_pde and policy_improve until the sup-norm decrement falls
// under tol_pi. Throws NoConvergence (with the decrement history) at k_max.
// zb_override selects a different zero-beta policy for the boundary data
// (default: the minimum-norm one).
PolicyIterationResult policy_iteration(const Grid& grid, const MarketModel& model,
                                       const HjbOptions& opts = {},
                                       const ModelSchedule* schedule = nullptr,
                                       const PolicyGrid* initial_policy = nullptr,
                                       const ZeroBetaPolicy* zb_override = nullptr);

// Phi = -(1/theta) ln(Phi_tilde), nodewise.
ValueGrid to_phi(const ValueGrid& values, double theta);

struct VerificationOptions {
    double bound_rel_tol = 1e-12;
    double convexity_slack_coeff = 1.0;  // slack = coeff * dx_d^2
    // Convexity of Phi is a whole-space property; inside the Dirichlet
    // boundary layer of the auxiliary bounded problem it genuinely fails.
    // Convexity checks ignore a margin of this fraction of the box per side.
    double boundary_margin_frac = 0.25;
    int cor42_samples = 1000;
    std::uint64_t sample_seed = 20240901;
    OptimizerOptions opt;
};

struct VerificationReport {
    double max_residual = 0.0;     // central-difference PDE residual, interior
    double median_residual = 0.0;
    bool bounds_ok = false;            // against the discrete envelope
    bool bounds_ok_analytic = false;   // against v^-theta e^{theta g_check (T-t)}
    double max_bound_excess_rel = 0.0;
    double min_value = 0.0;
    int convexity_violations = 0;      // midpoint convexity of Phi per axis
    double worst_convexity_gap = 0.0;
    int cor42_violations = 0;          // geometric-mean inequality on pairs
    int cor42_samples = 0;
};

VerificationReport verify_solution(const ValueGrid& values,
                                   const PolicyGrid& policy, const Grid& grid,
                                   const MarketModel& model,
                                   const ZeroBetaPolicy& zb,
                                   const VerificationOptions& opts = {},
                                   const ModelSchedule* schedule = nullptr);

}  // namespace rsam
