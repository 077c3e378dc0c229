#include "rsam/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Sparse>

#include "rsam/errors.hpp"
#include "rsam/parallel.hpp"
#include "rsam/rng.hpp"

namespace rsam {

namespace {

using SparseMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

MarketModel model_at(const MarketModel& model, const ModelSchedule* schedule,
                     double t) {
    return schedule ? (*schedule)(t) : model;
}

double boundary_value(const MarketModel& model, const ZeroBetaPolicy& zb,
                      double t) {
    return std::pow(model.v, -model.theta) *
           std::exp(model.theta * zb.g_check * (model.T - t));
}

// Cached per-slice coefficient pieces.
struct SliceCoeffs {
    MatrixXd LL;   // Lambda Lambda'
    MatrixXd LS;   // Lambda Sigma'
    MatrixXd SS;   // Sigma Sigma'
    VectorXd ahat;
    MatrixXd Ahat;

    explicit SliceCoeffs(const MarketModel& m)
        : LL(m.lambda_lambda_t()), LS(m.lambda_sigma_t()),
          SS(m.sigma_sigma_t()), ahat(m.a_hat()), Ahat(m.A_hat()) {}
};

double g_at(const MarketModel& model, const SliceCoeffs& c, const VectorXd& x,
            const VectorXd& h) {
    return 0.5 * (model.theta + 1.0) * h.dot(c.SS * h) - model.a0 -
           model.A0.dot(x) - h.dot(c.ahat + c.Ahat * x) +
           jump_integral_g(h, model.jumps, model.theta);
}

VectorXd f_at(const MarketModel& model, const SliceCoeffs& c, const VectorXd& x,
              const VectorXd& h) {
    return model.b + model.B * x - model.theta * (c.LS * h);
}

// Per-node, per-dimension drift stencil: true = second-order central.
// The budget uses the zero-beta drift plus a policy allowance, never the
// running policy, so the improvement objective and the assembler agree.
using StencilFlags = std::array<bool, 2>;

std::vector<StencilFlags> make_stencil(const Grid& grid, const MarketModel& mj,
                                       const SliceCoeffs& co,
                                       const ZeroBetaPolicy& zb,
                                       const HjbOptions& opts) {
    const int N = grid.node_count();
    std::vector<StencilFlags> flags(static_cast<std::size_t>(N),
                                    StencilFlags{false, false});
    if (opts.scheme == DriftScheme::Upwind) return flags;
    const int dim = grid.dim();
    VectorXd allowance(dim);
    for (int d = 0; d < dim; ++d)
        allowance(d) = mj.theta * co.LS.row(d).norm() * opts.policy_drift_cap;
    const double cross = dim == 2 ? std::fabs(co.LL(0, 1)) : 0.0;
    for (int flat = 0; flat < N; ++flat) {
        const auto idx = grid.unflatten(flat);
        if (grid.is_boundary(idx)) continue;
        const VectorXd f0 = f_at(mj, co, grid.point(idx), zb.h);
        for (int d = 0; d < dim; ++d) {
            const double dx = grid.spacing(d);
            double budget = co.LL(d, d) / dx;
            if (dim == 2) budget -= cross / grid.spacing(1 - d);
            flags[static_cast<std::size_t>(flat)][static_cast<std::size_t>(d)] =
                std::fabs(f0(d)) + allowance(d) <= budget;
        }
    }
    return flags;
}

// Stencil row of the generator L at one interior node (center included).
void add_row(const Grid& grid, const MarketModel& model, const SliceCoeffs& co,
             int flat, const VectorXd& h, const StencilFlags& central,
             std::vector<Triplet>& trip, SolveDiagnostics* diag) {
    const int dim = grid.dim();
    const auto idx = grid.unflatten(flat);
    const VectorXd x = grid.point(idx);
    const VectorXd f = f_at(model, co, x, h);
    const double g = g_at(model, co, x, h);

    double center = model.theta * g;  // coefficient of phi at the node in L

    auto neighbor = [&](int di, int dk) {
        auto nb = idx;
        nb[0] += di;
        if (dim > 1) nb[1] += dk;
        return grid.flatten(nb);
    };

    for (int d = 0; d < dim; ++d) {
        const double dx = grid.spacing(d);
        const double add = co.LL(d, d);
        const double diff_w = 0.5 * add / (dx * dx);
        const int ip = d == 0 ? 1 : 0, kp = d == 0 ? 0 : 1;
        if (central[static_cast<std::size_t>(d)]) {
            const double cw = f(d) / (2.0 * dx);
            trip.emplace_back(flat, neighbor(ip, kp), diff_w + cw);
            trip.emplace_back(flat, neighbor(-ip, -kp), diff_w - cw);
            center += -2.0 * diff_w;
        } else {
            const double up = std::max(f(d), 0.0) / dx;
            const double dn = -std::min(f(d), 0.0) / dx;
            trip.emplace_back(flat, neighbor(ip, kp), diff_w + up);
            trip.emplace_back(flat, neighbor(-ip, -kp), diff_w + dn);
            center += -2.0 * diff_w - up - dn;
        }
    }
    if (dim == 2) {
        const double c12 = co.LL(0, 1);
        if (c12 != 0.0) {
            const double w = std::fabs(c12) / (2.0 * grid.spacing(0) * grid.spacing(1));
            // sign-adapted corner stencil for the mixed derivative
            if (c12 > 0.0) {
                trip.emplace_back(flat, neighbor(1, 1), w);
                trip.emplace_back(flat, neighbor(-1, -1), w);
            } else {
                trip.emplace_back(flat, neighbor(1, -1), w);
                trip.emplace_back(flat, neighbor(-1, 1), w);
            }
            trip.emplace_back(flat, neighbor(1, 0), -w);
            trip.emplace_back(flat, neighbor(-1, 0), -w);
            trip.emplace_back(flat, neighbor(0, 1), -w);
            trip.emplace_back(flat, neighbor(0, -1), -w);
            center += -2.0 * w;
            if (diag) {
                const double dom0 = 0.5 * co.LL(0, 0) /
                                        (grid.spacing(0) * grid.spacing(0)) - w;
                const double dom1 = 0.5 * co.LL(1, 1) /
                                        (grid.spacing(1) * grid.spacing(1)) - w;
                if (dom0 < 0.0 || dom1 < 0.0) diag->cross_term_warning = true;
            }
        }
    }
    trip.emplace_back(flat, flat, center);
    if (diag && g > 0.0)
        diag->stability_dt_bound =
            std::min(diag->stability_dt_bound, 1.0 / (model.theta * g));
}

// Central-difference gradient of a slice at an interior node.
VectorXd central_gradient(const Grid& grid, const VectorXd& slice, int flat) {
    const auto idx = grid.unflatten(flat);
    VectorXd p(grid.dim());
    for (int d = 0; d < grid.dim(); ++d) {
        auto up = idx, dn = idx;
        up[d] += 1;
        dn[d] -= 1;
        p(d) = (slice(grid.flatten(up)) - slice(grid.flatten(dn))) /
               (2.0 * grid.spacing(d));
    }
    return p;
}

// One implicit theta-scheme step: solve (I - alpha L) V_j = (I + beta L) V_up
// with Dirichlet rows pinned to the lateral boundary value. Backward Euler
// is (alpha, beta) = (dt, 0); Crank-Nicolson is (dt/2, dt/2).
VectorXd solve_slice(const Grid& grid, const MarketModel& model,
                     const SliceCoeffs& co, const MatrixXd& policy_slice,
                     const VectorXd& rhs_upper, double bval, double alpha,
                     double beta, const std::vector<StencilFlags>& stencil,
                     SolveDiagnostics* diag) {
    const int N = grid.node_count();
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(N) * (grid.dim() == 1 ? 3 : 9));
    for (int flat = 0; flat < N; ++flat) {
        const auto idx = grid.unflatten(flat);
        if (!grid.is_boundary(idx))
            add_row(grid, model, co, flat, policy_slice.col(flat),
                    stencil[static_cast<std::size_t>(flat)], trip, diag);
    }
    SparseMat L(N, N);
    L.setFromTriplets(trip.begin(), trip.end());

    VectorXd rhs = beta != 0.0 ? VectorXd(rhs_upper + beta * (L * rhs_upper))
                               : rhs_upper;
    SparseMat A = (-alpha * L).eval();
    for (int flat = 0; flat < N; ++flat) A.coeffRef(flat, flat) += 1.0;
    for (int flat = 0; flat < N; ++flat)
        if (grid.is_boundary(grid.unflatten(flat))) rhs(flat) = bval;

    A.makeCompressed();
    Eigen::SparseLU<SparseMat> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success)
        throw LinearSolveFailure("solve_linear_pde: sparse factorization failed");
    VectorXd out = lu.solve(rhs);
    if (lu.info() != Eigen::Success)
        throw LinearSolveFailure("solve_linear_pde: sparse solve failed");
    return out;
}

// Step weights for the time scheme; the first rannacher steps after the
// terminal slice run as backward Euler to damp any startup ringing.
std::pair<double, double> step_weights(const HjbOptions& opts, const Grid& grid,
                                       int j) {
    if (opts.time_scheme == TimeScheme::BackwardEuler ||
        j >= grid.nt - opts.rannacher_steps)
        return {grid.dt, 0.0};
    return {0.5 * grid.dt, 0.5 * grid.dt};
}

void clamp_positive(VectorXd& slice, SolveDiagnostics* diag) {
    double mn = slice.minCoeff();
    if (diag) diag->min_value = std::min(diag->min_value, mn);
    if (mn <= 0.0) {
        for (int i = 0; i < slice.size(); ++i)
            if (slice(i) <= 0.0) {
                slice(i) = 1e-300;
                if (diag) ++diag->clamp_count;
            }
        if (diag) diag->clamped = true;
    }
}

// Gradient estimates of a slice at an interior node: central, forward,
// and backward differences per dimension.
void node_gradients(const Grid& grid, const VectorXd& slice, int flat,
                    VectorXd& dcent, VectorXd& dplus, VectorXd& dminus) {
    const auto idx = grid.unflatten(flat);
    dcent.resize(grid.dim());
    dplus.resize(grid.dim());
    dminus.resize(grid.dim());
    for (int d = 0; d < grid.dim(); ++d) {
        auto up = idx, dn = idx;
        up[d] += 1;
        dn[d] -= 1;
        const double vup = slice(grid.flatten(up));
        const double vdn = slice(grid.flatten(dn));
        dcent(d) = (vup - vdn) / (2.0 * grid.spacing(d));
        dplus(d) = (vup - slice(flat)) / grid.spacing(d);
        dminus(d) = (slice(flat) - vdn) / grid.spacing(d);
    }
}

// The exact drift-plus-cost value the assembler charges for allocation h at
// this node: central dims use f_d D0_d, upwind dims f_d^+ D+_d + f_d^- D-_d.
double discrete_objective(const MarketModel& model, const VectorXd& x,
                          const VectorXd& h, double r, const StencilFlags& central,
                          const VectorXd& dcent, const VectorXd& dplus,
                          const VectorXd& dminus) {
    const VectorXd f = eval_f(x, h, model);
    double val = model.theta * eval_g(x, h, model) * r;
    for (int d = 0; d < f.size(); ++d) {
        if (central[static_cast<std::size_t>(d)])
            val += f(d) * dcent(d);
        else
            val += std::max(f(d), 0.0) * dplus(d) +
                   std::min(f(d), 0.0) * dminus(d);
    }
    return val;
}

// Minimizer of the assembler's discrete objective. Central dims enter the
// smooth inner problem directly; upwind dims are handled by enumerating the
// sign branches and the pinned-drift manifolds, with every candidate scored
// under the true objective.
VectorXd improve_node(const MarketModel& model, const VectorXd& x, double r,
                      const StencilFlags& central, const VectorXd& dcent,
                      const VectorXd& dplus, const VectorXd& dminus,
                      const OptimizerOptions& opt, VectorXd& warm) {
    const int n = static_cast<int>(dcent.size());
    std::vector<int> upwind_dims;
    for (int d = 0; d < n; ++d)
        if (!central[static_cast<std::size_t>(d)]) upwind_dims.push_back(d);

    if (upwind_dims.empty()) {
        warm = optimal_h(x, r, dcent, model, opt, &warm);
        return warm;
    }

    const MatrixXd LS = model.lambda_sigma_t();  // n x m
    const VectorXd drift0 = model.b + model.B * x;
    const int k = static_cast<int>(upwind_dims.size());

    VectorXd best;
    double best_val = std::numeric_limits<double>::infinity();
    auto consider = [&](const VectorXd& h) {
        const double val = discrete_objective(model, x, h, r, central, dcent,
                                              dplus, dminus);
        if (val < best_val) {
            best_val = val;
            best = h;
        }
    };

    for (int mask = 0; mask < (1 << k); ++mask) {
        VectorXd p = dcent;
        for (int i = 0; i < k; ++i)
            p(upwind_dims[i]) = (mask >> i) & 1 ? dplus(upwind_dims[i])
                                                : dminus(upwind_dims[i]);
        try {
            consider(optimal_h(x, r, p, model, opt, &warm));
        } catch (const OptFailure&) {
            // a branch without an interior minimizer cannot win; skip it
        }
    }
    // pinned subsets: drift components forced to zero along switching
    // manifolds of the upwind dims
    for (int pinned = 1; pinned < (1 << k); ++pinned) {
        std::vector<int> pin;
        for (int i = 0; i < k; ++i)
            if ((pinned >> i) & 1) pin.push_back(upwind_dims[i]);
        MatrixXd C(pin.size(), model.m);
        VectorXd e(pin.size());
        bool degenerate = false;
        for (std::size_t i = 0; i < pin.size(); ++i) {
            C.row(i) = model.theta * LS.row(pin[i]);
            e(i) = drift0(pin[i]);
            if (C.row(i).lpNorm<Eigen::Infinity>() < 1e-300) degenerate = true;
        }
        if (degenerate) continue;  // f_d does not depend on h
        for (int fm = 0; fm < (1 << k); ++fm) {
            VectorXd p = dcent;
            bool skip = false;
            for (int i = 0; i < k; ++i) {
                const int d = upwind_dims[i];
                if ((pinned >> i) & 1) {
                    if ((fm >> i) & 1) skip = true;  // avoid duplicates
                    p(d) = 0.0;
                } else {
                    p(d) = (fm >> i) & 1 ? dplus(d) : dminus(d);
                }
            }
            if (skip) continue;
            try {
                consider(optimal_h_constrained(x, r, p, model, C, e, opt, &warm));
            } catch (const Error&) {
                // infeasible or empty manifold; covered by the branches
            }
        }
    }
    if (best.size() == 0)
        throw OptFailure("policy_improve: no feasible candidate at node");
    warm = best;
    return best;
}

// Improves one slice of the policy grid (interior nodes only; boundary nodes
// carry the zero-beta policy). Warm starts chain within a chunk.
void improve_slice(const Grid& grid, const MarketModel& model,
                   const SliceCoeffs& co, const ZeroBetaPolicy& zb,
                   const VectorXd& values, const HjbOptions& opts,
                   MatrixXd& out) {
    const int N = grid.node_count();
    const auto stencil = make_stencil(grid, model, co, zb, opts);
    parallel_chunks(N, opts.threads, [&](int b, int e) {
        VectorXd warm = zb.h;
        VectorXd dcent, dplus, dminus;
        for (int flat = b; flat < e; ++flat) {
            const auto idx = grid.unflatten(flat);
            if (grid.is_boundary(idx)) {
                out.col(flat) = zb.h;
                continue;
            }
            const VectorXd x = grid.point(idx);
            const double r = values(flat);
            if (r <= 0.0)
                throw DomainError("policy_improve: non-positive value at node");
            try {
                node_gradients(grid, values, flat, dcent, dplus, dminus);
                out.col(flat) = improve_node(
                    model, x, r, stencil[static_cast<std::size_t>(flat)], dcent,
                    dplus, dminus, opts.opt, warm);
            } catch (const OptFailure& err) {
                std::ostringstream msg;
                msg << err.what() << " at node " << flat << " (x = "
                    << x.transpose() << ")";
                throw OptFailure(msg.str());
            }
        }
    });
}

}  // namespace

ValueGrid solve_linear_pde(const PolicyGrid& policy, const Grid& grid,
                           const MarketModel& model, const ZeroBetaPolicy& zb,
                           const HjbOptions& opts, SolveDiagnostics* diag,
                           const ModelSchedule* schedule) {
    const int N = grid.node_count();
    ValueGrid vg;
    vg.grid = grid;
    vg.slices.assign(grid.nt + 1, VectorXd::Zero(N));
    vg.slices[grid.nt].setConstant(std::pow(model.v, -model.theta));

    for (int j = grid.nt - 1; j >= 0; --j) {
        const double t = grid.time(j);
        const MarketModel mj = model_at(model, schedule, t);
        const SliceCoeffs co(mj);
        const auto stencil = make_stencil(grid, mj, co, zb, opts);
        const auto [alpha, beta] = step_weights(opts, grid, j);
        vg.slices[j] = solve_slice(grid, mj, co, policy.slices[j],
                                   vg.slices[j + 1], boundary_value(model, zb, t),
                                   alpha, beta, stencil, diag);
        clamp_positive(vg.slices[j], diag);
    }
    return vg;
}

PolicyGrid policy_improve(const ValueGrid& values, const MarketModel& model,
                          const ZeroBetaPolicy& zb, const HjbOptions& opts,
                          const ModelSchedule* schedule) {
    const Grid& grid = values.grid;
    PolicyGrid pg;
    pg.grid = grid;
    pg.m = model.m;
    pg.slices.assign(grid.nt + 1, MatrixXd::Zero(model.m, grid.node_count()));
    for (int j = 0; j <= grid.nt; ++j) {
        const MarketModel mj = model_at(model, schedule, grid.time(j));
        const SliceCoeffs co(mj);
        improve_slice(grid, mj, co, zb, values.slices[j], opts, pg.slices[j]);
    }
    return pg;
}

namespace {

// Inline-Howard backward sweep: before each implicit step the policy at
// slice j is refreshed from the slice-(j+1) values.
ValueGrid howard_sweep(PolicyGrid& policy, const Grid& grid,
                       const MarketModel& model, const ZeroBetaPolicy& zb,
                       const HjbOptions& opts, SolveDiagnostics* diag,
                       const ModelSchedule* schedule) {
    const int N = grid.node_count();
    ValueGrid vg;
    vg.grid = grid;
    vg.slices.assign(grid.nt + 1, VectorXd::Zero(N));
    vg.slices[grid.nt].setConstant(std::pow(model.v, -model.theta));
    for (int j = grid.nt - 1; j >= 0; --j) {
        const double t = grid.time(j);
        const MarketModel mj = model_at(model, schedule, t);
        const SliceCoeffs co(mj);
        const auto stencil = make_stencil(grid, mj, co, zb, opts);
        const auto [alpha, beta] = step_weights(opts, grid, j);
        improve_slice(grid, mj, co, zb, vg.slices[j + 1], opts, policy.slices[j]);
        vg.slices[j] = solve_slice(grid, mj, co, policy.slices[j],
                                   vg.slices[j + 1], boundary_value(model, zb, t),
                                   alpha, beta, stencil, diag);
        clamp_positive(vg.slices[j], diag);
    }
    return vg;
}

}  // namespace

PolicyIterationResult policy_iteration(const Grid& grid, const MarketModel& model,
                                       const HjbOptions& opts,
                                       const ModelSchedule* schedule,
                                       const PolicyGrid* initial_policy,
                                       const ZeroBetaPolicy* zb_override) {
    if (grid.dim() != model.n)
        throw DimensionMismatch("policy_iteration: grid dimension != n");
    const ZeroBetaPolicy zb =
        zb_override ? *zb_override : zero_beta(model, opts.opt.delta);

    PolicyIterationResult res;
    res.zb = zb;
    PolicyGrid policy = initial_policy
                            ? *initial_policy
                            : PolicyGrid::constant(grid, zb.h, grid.nt + 1);

    ValueGrid prev;
    for (int k = 1; k <= opts.k_max; ++k) {
        ValueGrid vk = opts.inline_howard
                           ? howard_sweep(policy, grid, model, zb, opts,
                                          &res.stats.diag, schedule)
                           : solve_linear_pde(policy, grid, model, zb, opts,
                                              &res.stats.diag, schedule);
        res.stats.iterations = k;
        if (k >= 2) {
            double dec = 0.0, inc = 0.0;
            for (int j = 0; j <= grid.nt; ++j) {
                const VectorXd d = vk.slices[j] - prev.slices[j];
                dec = std::max(dec, d.cwiseAbs().maxCoeff());
                inc = std::max(inc, d.maxCoeff());
            }
            res.stats.decrements.push_back(dec);
            res.stats.max_increase.push_back(inc);
            if (dec <= opts.tol_pi) {
                res.values = std::move(vk);
                res.policy = policy_improve(res.values, model, zb, opts, schedule);
                return res;
            }
        }
        if (!opts.inline_howard)
            policy = policy_improve(vk, model, zb, opts, schedule);
        prev = std::move(vk);
    }
    std::ostringstream msg;
    msg << "policy_iteration: no convergence in " << opts.k_max << " iterations";
    throw NoConvergence(msg.str(), res.stats.decrements);
}

ValueGrid to_phi(const ValueGrid& values, double theta) {
    ValueGrid phi;
    phi.grid = values.grid;
    phi.slices.reserve(values.slices.size());
    for (const auto& s : values.slices) {
        if (s.minCoeff() <= 0.0)
            throw DomainError("to_phi: values must be positive");
        phi.slices.push_back((-s.array().log() / theta).matrix());
    }
    return phi;
}

VerificationReport verify_solution(const ValueGrid& values,
                                   const PolicyGrid& policy, const Grid& grid,
                                   const MarketModel& model,
                                   const ZeroBetaPolicy& zb,
                                   const VerificationOptions& opts,
                                   const ModelSchedule* schedule) {
    VerificationReport rep;
    const int N = grid.node_count();
    const int nt = grid.nt;
    const double theta = model.theta;

    // (i) PDE residual with central differences in t and x, the Hamiltonian
    // re-minimized at every interior node.
    std::vector<double> abs_res;
    for (int j = 1; j < nt; ++j) {
        const MarketModel mj = model_at(model, schedule, grid.time(j));
        const MatrixXd LL = mj.lambda_lambda_t();
        const VectorXd& cur = values.slices[j];
        for (int flat = 0; flat < N; ++flat) {
            const auto idx = grid.unflatten(flat);
            if (grid.is_boundary(idx)) continue;
            const VectorXd x = grid.point(idx);
            const double dphidt =
                (values.slices[j + 1](flat) - values.slices[j - 1](flat)) /
                (2.0 * grid.dt);
            double diff = 0.0;
            for (int d = 0; d < grid.dim(); ++d) {
                auto up = idx, dn = idx;
                up[d] += 1;
                dn[d] -= 1;
                const double dx = grid.spacing(d);
                diff += 0.5 * LL(d, d) *
                        (cur(grid.flatten(up)) - 2.0 * cur(flat) +
                         cur(grid.flatten(dn))) / (dx * dx);
            }
            if (grid.dim() == 2 && LL(0, 1) != 0.0) {
                auto pp = idx, mm = idx, pm = idx, mp = idx;
                pp[0] += 1; pp[1] += 1;
                mm[0] -= 1; mm[1] -= 1;
                pm[0] += 1; pm[1] -= 1;
                mp[0] -= 1; mp[1] += 1;
                diff += LL(0, 1) *
                        (cur(grid.flatten(pp)) - cur(grid.flatten(pm)) -
                         cur(grid.flatten(mp)) + cur(grid.flatten(mm))) /
                        (4.0 * grid.spacing(0) * grid.spacing(1));
            }
            const VectorXd p = central_gradient(grid, cur, flat);
            VectorXd warm = policy.at(j, flat);
            const VectorXd h = optimal_h(x, cur(flat), p, mj, opts.opt, &warm);
            const double H = eval_f(x, h, mj).dot(p) +
                             theta * eval_g(x, h, mj) * cur(flat);
            abs_res.push_back(std::fabs(dphidt + diff + H));
        }
    }
    if (!abs_res.empty()) {
        rep.max_residual = *std::max_element(abs_res.begin(), abs_res.end());
        std::vector<double> sorted = abs_res;
        std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2,
                         sorted.end());
        rep.median_residual = sorted[sorted.size() / 2];
    }

    // (ii) positivity and the zero-beta upper bound. Backward Euler can sit
    // above the continuous bound by O(dt) when g_check > 0, so the envelope
    // includes the discrete zero-beta evolution.
    rep.bounds_ok = true;
    rep.bounds_ok_analytic = true;
    rep.min_value = std::numeric_limits<double>::infinity();
    const double vth = std::pow(model.v, -theta);
    for (int j = 0; j <= nt; ++j) {
        const double analytic = vth * std::exp(theta * zb.g_check *
                                               (model.T - grid.time(j)));
        const double geom_step = 1.0 - grid.dt * theta * zb.g_check;
        const double disc =
            geom_step > 0.0 ? vth * std::pow(geom_step, -(nt - j)) : analytic;
        const double envelope = std::max(analytic, disc);
        for (int flat = 0; flat < N; ++flat) {
            const double val = values.slices[j](flat);
            rep.min_value = std::min(rep.min_value, val);
            if (val <= 0.0) rep.bounds_ok = rep.bounds_ok_analytic = false;
            const double excess_a = val / analytic - 1.0;
            const double excess_e = val / envelope - 1.0;
            rep.max_bound_excess_rel = std::max(rep.max_bound_excess_rel, excess_a);
            if (excess_a > opts.bound_rel_tol) rep.bounds_ok_analytic = false;
            if (excess_e > opts.bound_rel_tol) rep.bounds_ok = false;
        }
    }

    // (iii) midpoint convexity of Phi along each axis, away from the
    // Dirichlet boundary layer.
    std::array<int, 2> margin{1, 1};
    for (int d = 0; d < grid.dim(); ++d)
        margin[d] = std::max(
            1, static_cast<int>(std::ceil(opts.boundary_margin_frac *
                                          (grid.nodes[d] - 1))));
    auto margin_interior = [&](const std::array<int, 2>& idx) {
        for (int d = 0; d < grid.dim(); ++d)
            if (idx[d] < margin[d] || idx[d] > grid.nodes[d] - 1 - margin[d])
                return false;
        return true;
    };
    const ValueGrid phi = to_phi(values, theta);
    for (int j = 0; j <= nt; ++j) {
        const VectorXd& s = phi.slices[j];
        for (int flat = 0; flat < N; ++flat) {
            const auto idx = grid.unflatten(flat);
            if (!margin_interior(idx)) continue;
            for (int d = 0; d < grid.dim(); ++d) {
                auto up = idx, dn = idx;
                up[d] += 1;
                dn[d] -= 1;
                const double slack = opts.convexity_slack_coeff *
                                     grid.spacing(d) * grid.spacing(d);
                const double gap = 0.5 * (s(grid.flatten(up)) + s(grid.flatten(dn))) -
                                   s(flat);
                if (gap < -slack) {
                    ++rep.convexity_violations;
                    rep.worst_convexity_gap =
                        std::min(rep.worst_convexity_gap, gap);
                }
            }
        }
    }

    // (iv) Cor-4.2-style geometric-mean inequality on sampled node pairs
    // (kappa = 1/2; even index sums so the midpoint is a node).
    RngStream rng(opts.sample_seed, 0, 0);
    rep.cor42_samples = opts.cor42_samples;
    for (int s = 0; s < opts.cor42_samples; ++s) {
        const int j = static_cast<int>(rng.uniform() * (nt + 1)) % (nt + 1);
        std::array<int, 2> i1{0, 0}, i2{0, 0}, mid{0, 0};
        for (int d = 0; d < grid.dim(); ++d) {
            const int lo = margin[d];
            const int span = grid.nodes[d] - 2 * margin[d];
            i1[d] = lo + static_cast<int>(rng.uniform() * span) % span;
            i2[d] = lo + static_cast<int>(rng.uniform() * span) % span;
            if ((i1[d] + i2[d]) % 2 != 0)
                i2[d] = i2[d] + 1 < lo + span ? i2[d] + 1 : i2[d] - 1;
            mid[d] = (i1[d] + i2[d]) / 2;
        }
        const double lhs = phi.slices[j](grid.flatten(mid));
        const double rhs = 0.5 * (phi.slices[j](grid.flatten(i1)) +
                                  phi.slices[j](grid.flatten(i2)));
        double dx2 = 0.0;
        for (int d = 0; d < grid.dim(); ++d)
            dx2 = std::max(dx2, grid.spacing(d) * grid.spacing(d));
        if (lhs > rhs + opts.convexity_slack_coeff * dx2) ++rep.cor42_violations;
    }
    return rep;
}

}  // namespace rsam
