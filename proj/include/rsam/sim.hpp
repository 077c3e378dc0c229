#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rsam/grid.hpp"
#include "rsam/hjb.hpp"
#include "rsam/model.hpp"
#include "rsam/rng.hpp"

namespace rsam {

struct PathMesh {
    double T = 1.0;
    int steps = 100;
    double dt() const { return T / steps; }
};

struct JumpEvent {
    double time = 0.0;
    int atom = 0;
};

// One realization of (X, S, V, chi) on the mesh, with enough recorded
// primitives (Brownian increments, frozen per-step policy, jump events)
// to recompute every derived quantity.
struct SimPath {
    VectorXd times;   // steps+1
    MatrixXd X;       // n x (steps+1)
    MatrixXd logS;    // m x (steps+1), S(0) = 1
    VectorXd logV;    // steps+1, V(0) = v
    VectorXd logChi;  // steps+1, chi(0) = 1
    MatrixXd dW;      // M x steps
    MatrixXd policy;  // m x steps (h frozen at each step start)
    std::vector<JumpEvent> events;
};

using PolicyFn = std::function<VectorXd(double, const VectorXd&)>;

PolicyFn constant_policy(const VectorXd& h);
// Multilinear interpolation of a solved policy grid; outside the grid box
// the zero-beta policy applies.
PolicyFn feedback_policy(const PolicyGrid& pg, const VectorXd& zero_beta_h);

// Exact one-step transition of the factor OU process, jointly with the
// Brownian increment that also drives the asset-side integrals:
//   X' = e^{B dt} X + I1 b + (I1 Lambda / dt) dW + Lc xi
// with I1 = int_0^dt e^{Bs} ds and Lc the conditional covariance factor.
class OuStepKernel {
public:
    OuStepKernel(const MatrixXd& B, const MatrixXd& Lambda, double dt);

    // Conditional draw given the step's Brownian increment.
    VectorXd propagate(const VectorXd& x, const VectorXd& drift_const,
                       const VectorXd& dW, RngStream& rng) const;
    // Marginal draw, Brownian increment integrated out.
    VectorXd propagate_marginal(const VectorXd& x, const VectorXd& drift_const,
                                RngStream& rng) const;

private:
    double dt_;
    MatrixXd Phi_;   // e^{B dt}
    MatrixXd I1_;    // int_0^dt e^{Bs} ds
    MatrixXd I1L_;   // I1 * Lambda
    MatrixXd Lc_;    // factor of cov(X'|dW)
    MatrixXd Lxx_;   // factor of the unconditional covariance
};

// Step-by-step path driver; lets callers choose the policy per step (for
// feedback on a filtered state, say). Brownian and jump draws come from
// independent substreams of (seed, path), so the Brownian path is bitwise
// invariant under changes to the jump measure.
class PathEngine {
public:
    PathEngine(const MarketModel& model, const PathMesh& mesh, const VectorXd& x0,
               std::uint64_t seed, std::uint64_t path_index);

    struct Step {
        VectorXd dW;      // M
        VectorXd dY;      // m, log-price increments (jumps included)
        double dlogV = 0.0;
        double dlogChi = 0.0;
        std::vector<JumpEvent> events;
        double jump_slack = 0.0;  // min over hits of 1 + h'gamma (inf if none)
    };

    double t() const { return step_ * mesh_.dt(); }
    int index() const { return step_; }
    const VectorXd& x() const { return x_; }

    // Advances one mesh step under the frozen allocation h.
    // Throws PolicyInfeasible if h leaves the admissible set.
    Step advance(const VectorXd& h);

private:
    const MarketModel& model_;
    PathMesh mesh_;
    OuStepKernel kernel_;
    AdmissibleSet set_;
    RngStream brownian_;
    RngStream jumps_;
    VectorXd x_;
    int step_ = 0;
    double next_jump_ = 0.0;
    double total_intensity_ = 0.0;
    MatrixXd SS_;
    VectorXd a_hat_;
    MatrixXd A_hat_;
    VectorXd asset_drift_const_;  // -1/2 SS_ii - sum_{Z0} w gamma_i

    int draw_atom();
};

SimPath simulate_path(const MarketModel& model, const PolicyFn& policy,
                      const PathMesh& mesh, const VectorXd& x0,
                      std::uint64_t seed, std::uint64_t path_index = 0);

// Doleans exponential trajectory recomputed from a recorded path:
// Brownian part -theta int h'Sigma dW - theta^2/2 int h'SS'h dt, jump part
// sum ln(1 - G) at events plus int sum_atoms w G dt.
VectorXd doleans(const MarketModel& model, const SimPath& path);

struct McEstimate {
    double mean = 0.0;
    double se = 0.0;
    long paths = 0;
    std::uint64_t seed = 0;
};

// Per-path terminal summaries for estimators and diagnostics.
struct PathSummary {
    double logV_T = 0.0;
    double logChi_T = 0.0;
    double min_logV = 0.0;
    double min_jump_slack = 0.0;  // min over events of 1 + h'gamma
    VectorXd x_T;
};

std::vector<PathSummary> run_paths(const MarketModel& model,
                                   const PolicyFn& policy, const PathMesh& mesh,
                                   const VectorXd& x0, long n_paths,
                                   std::uint64_t seed, int threads = 1);

struct JEstimate {
    McEstimate J;        // -(1/theta) ln E[exp(-theta ln V_T)]
    double mean_logV = 0.0;
    double var_logV = 0.0;
    double se_logV = 0.0;
};

JEstimate estimate_J(const MarketModel& model, const PolicyFn& policy,
                     const PathMesh& mesh, const VectorXd& x0, long n_paths,
                     std::uint64_t seed, int threads = 1);
JEstimate estimate_J_from(const std::vector<PathSummary>& summaries,
                          double theta, std::uint64_t seed);

// Feynman-Kac estimator of the exponentially transformed criterion: X is
// simulated under the changed measure (pure diffusion, drift f(x,h)) and
// exp(theta int g dt - theta ln v) is averaged.
McEstimate estimate_I_tilde(const MarketModel& model, const PolicyFn& policy,
                            const PathMesh& mesh, const VectorXd& x0,
                            long n_paths, std::uint64_t seed, int threads = 1,
                            const ModelSchedule* schedule = nullptr);

}  // namespace rsam
