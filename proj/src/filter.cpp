#include "rsam/filter.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "rsam/errors.hpp"
#include "rsam/linalg.hpp"
#include "rsam/parallel.hpp"

namespace rsam {

namespace {

void require_a0_zero(const MarketModel& model, const char* where) {
    if (!model.A0.isZero(0.0)) {
        std::ostringstream msg;
        msg << where << ": implemented for the unobserved-factor case A0 = 0";
        throw PreconditionError(msg.str());
    }
}

struct FilterCoeffs {
    MatrixXd SS, SSinv, SSinv_sqrt, SS_sqrt;
    MatrixXd Ahat, LS;
    MatrixXd noise;      // Lambda Xi Xi' Lambda'
    MatrixXd drift_adj;  // B - Lambda Sigma' (SS')^{-1} A_hat

    FilterCoeffs(const MarketModel& m, XiConvention xi) {
        SS = m.sigma_sigma_t();
        SSinv = SS.inverse();
        SSinv_sqrt = spd_inv_sqrt(SS);
        SS_sqrt = psd_sqrt(SS);
        Ahat = m.A_hat();
        LS = m.lambda_sigma_t();
        MatrixXd proj;  // Sigma'(...)Sigma, rank-m projection on M-space
        if (xi == XiConvention::Projection) {
            proj = m.Sigma.transpose() * SSinv * m.Sigma;
        } else {
            // Literal reading with Sigma'Sigma (singular for M > m); its
            // pseudoinverse reproduces the same projection.
            proj = m.Sigma.transpose() * pinv(m.Sigma.transpose() * m.Sigma) *
                   m.Sigma;
        }
        const MatrixXd Xi = MatrixXd::Identity(m.M, m.M) - proj;
        noise = m.Lambda * Xi * Xi.transpose() * m.Lambda.transpose();
        drift_adj = m.B - LS * SSinv * Ahat;
    }

    MatrixXd riccati_rhs(const MatrixXd& P) const {
        MatrixXd rhs = noise - P * Ahat.transpose() * SSinv * Ahat * P +
                       drift_adj * P + P * drift_adj.transpose();
        return 0.5 * (rhs + rhs.transpose());
    }

    MatrixXd rk4(const MatrixXd& P, double dt) const {
        const MatrixXd k1 = riccati_rhs(P);
        const MatrixXd k2 = riccati_rhs(P + 0.5 * dt * k1);
        const MatrixXd k3 = riccati_rhs(P + 0.5 * dt * k2);
        const MatrixXd k4 = riccati_rhs(P + dt * k3);
        MatrixXd out = P + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        return 0.5 * (out + out.transpose());
    }
};

VectorXd observation_constant(const MarketModel& model) {
    // Constant drift of Y2. The money-market intercept a0 belongs here so
    // that Y1 carries exactly A_hat X dt + Sigma dW.
    const MatrixXd SS = model.sigma_sigma_t();
    VectorXd c(model.m);
    for (int i = 0; i < model.m; ++i) {
        c(i) = model.a(i) - 0.5 * SS(i, i);
        for (const auto& a : model.jumps.atoms)
            if (a.in_z0)
                c(i) += a.weight * (std::log1p(a.gamma(i)) - a.gamma(i));
    }
    return c;
}

}  // namespace

ObservationDecomposition decompose_observations(const SimPath& path,
                                                const MarketModel& model) {
    require_a0_zero(model, "decompose_observations");
    const int K = static_cast<int>(path.dW.cols());
    const double dt = K > 0 ? path.times(1) - path.times(0) : 0.0;
    ObservationDecomposition dec;
    dec.c = observation_constant(model);
    dec.dY1.resize(model.m, K);
    dec.dY2.resize(model.m, K);
    const MatrixXd Ah = model.A_hat();
    for (int k = 0; k < K; ++k) {
        // dY1 from its definition, so it is bitwise invariant under changes
        // to the jump measure (shared Brownian stream); dY2 is the remainder.
        const VectorXd xbar = 0.5 * (path.X.col(k) + path.X.col(k + 1));
        dec.dY1.col(k) = Ah * xbar * dt + model.Sigma * path.dW.col(k);
        dec.dY2.col(k) =
            path.logS.col(k + 1) - path.logS.col(k) - dec.dY1.col(k);
    }
    return dec;
}

ObservationDecomposition estimate_decomposition(const MatrixXd& logS,
                                                const VectorXd& times,
                                                const MarketModel& model,
                                                double threshold_scale) {
    require_a0_zero(model, "estimate_decomposition");
    const int K = static_cast<int>(logS.cols()) - 1;
    const double dt = K > 0 ? times(1) - times(0) : 0.0;
    ObservationDecomposition dec;
    dec.c = observation_constant(model);
    dec.dY1.resize(model.m, K);
    dec.dY2.resize(model.m, K);

    VectorXd thresh = VectorXd::Constant(model.m,
                                         std::numeric_limits<double>::infinity());
    for (const auto& a : model.jumps.atoms)
        for (int i = 0; i < model.m; ++i) {
            const double mag = std::fabs(std::log1p(a.gamma(i)));
            if (mag > 0.0) thresh(i) = std::min(thresh(i), threshold_scale * mag);
        }

    VectorXd base = dec.c * dt;
    for (const auto& a : model.jumps.atoms)
        if (a.in_z0)
            for (int i = 0; i < model.m; ++i)
                base(i) -= a.weight * std::log1p(a.gamma(i)) * dt;

    for (int k = 0; k < K; ++k) {
        const VectorXd dY = logS.col(k + 1) - logS.col(k);
        VectorXd jump_part = VectorXd::Zero(model.m);
        VectorXd resid = dY;
        // Greedy removal: peel the best-matching atom while a coordinate
        // still exceeds its threshold.
        for (int pass = 0; pass < 8 && !model.jumps.empty(); ++pass) {
            bool flagged = false;
            for (int i = 0; i < model.m; ++i)
                if (std::fabs(resid(i)) >= thresh(i)) flagged = true;
            if (!flagged) break;
            int best = -1;
            double best_gain = 0.0;
            for (std::size_t a = 0; a < model.jumps.atoms.size(); ++a) {
                VectorXd lj(model.m);
                for (int i = 0; i < model.m; ++i)
                    lj(i) = std::log1p(model.jumps.atoms[a].gamma(i));
                const double gain = resid.squaredNorm() - (resid - lj).squaredNorm();
                if (gain > best_gain) {
                    best_gain = gain;
                    best = static_cast<int>(a);
                }
            }
            if (best < 0) break;
            VectorXd lj(model.m);
            for (int i = 0; i < model.m; ++i)
                lj(i) = std::log1p(model.jumps.atoms[best].gamma(i));
            resid -= lj;
            jump_part += lj;
        }
        dec.dY2.col(k) = base + jump_part;
        dec.dY1.col(k) = dY - dec.dY2.col(k);
    }
    return dec;
}

MatrixXd riccati_step(const MatrixXd& P, double dt, const MarketModel& model,
                      XiConvention xi) {
    if ((P - P.transpose()).lpNorm<Eigen::Infinity>() > 1e-10)
        throw DomainError("riccati_step: P must be symmetric");
    const FilterCoeffs co(model, xi);
    MatrixXd out = co.rk4(P, dt);
    if (min_eigenvalue(out) < -1e-8)
        throw NonPSD("riccati_step: P lost positive semidefiniteness; "
                     "reduce the step size");
    return out;
}

RiccatiSchedule::RiccatiSchedule(const MarketModel& model, const MatrixXd& P0,
                                 double T, double dt_fine, XiConvention xi)
    : dt_(dt_fine), T_(T) {
    const FilterCoeffs co(model, xi);
    const int steps = std::max(1, static_cast<int>(std::ceil(T / dt_fine - 1e-12)));
    dt_ = T / steps;
    nodes_.reserve(steps + 1);
    MatrixXd P = 0.5 * (P0 + P0.transpose());
    nodes_.push_back(P);
    for (int k = 0; k < steps; ++k) {
        P = co.rk4(P, dt_);
        if (min_eigenvalue(P) < -1e-8)
            throw NonPSD("riccati schedule: P lost positive semidefiniteness");
        nodes_.push_back(P);
    }
}

MatrixXd RiccatiSchedule::at(double t) const {
    if (nodes_.empty()) throw DomainError("riccati schedule is empty");
    const double u = std::min(std::max(t / dt_, 0.0),
                              static_cast<double>(nodes_.size() - 1));
    const int i = std::min(static_cast<int>(u),
                           static_cast<int>(nodes_.size()) - 2);
    if (nodes_.size() == 1) return nodes_[0];
    const double f = u - i;
    return (1.0 - f) * nodes_[i] + f * nodes_[i + 1];
}

KalmanState filter_step(const KalmanState& state, const VectorXd& dY1,
                        double dt, const MarketModel& model, XiConvention xi) {
    require_a0_zero(model, "filter_step");
    const FilterCoeffs co(model, xi);
    KalmanState next;
    const VectorXd dU = co.SSinv_sqrt * (dY1 - co.Ahat * state.x_hat * dt);
    const MatrixXd gain = (co.LS + state.P * co.Ahat.transpose()) * co.SSinv_sqrt;
    next.x_hat = state.x_hat + (model.b + model.B * state.x_hat) * dt + gain * dU;
    MatrixXd P = state.P;
    const int sub = 10;
    for (int i = 0; i < sub; ++i) P = co.rk4(P, dt / sub);
    if (min_eigenvalue(P) < -1e-8)
        throw NonPSD("filter_step: P lost positive semidefiniteness");
    next.P = P;
    next.t = state.t + dt;
    return next;
}

FilterRun run_filter(const MatrixXd& dY1, const PathMesh& mesh,
                     const VectorXd& m0, const MatrixXd& P0,
                     const MarketModel& model, const RiccatiSchedule* schedule,
                     XiConvention xi) {
    require_a0_zero(model, "run_filter");
    const int K = mesh.steps;
    if (dY1.cols() != K)
        throw DimensionMismatch("run_filter: dY1 column count != mesh steps");
    const double dt = mesh.dt();
    const FilterCoeffs co(model, xi);

    RiccatiSchedule local;
    const RiccatiSchedule* sched = schedule;
    if (!sched) {
        local = RiccatiSchedule(model, P0, mesh.T, dt / 10.0, xi);
        sched = &local;
    }

    FilterRun run;
    run.x_hat.resize(model.n, K + 1);
    run.P.reserve(K + 1);
    run.dU.resize(model.m, K);
    run.x_hat.col(0) = m0;
    run.P.push_back(sched->at(0.0));
    for (int k = 0; k < K; ++k) {
        const double t = k * dt;
        const MatrixXd P = sched->at(t);
        const VectorXd dU = co.SSinv_sqrt *
                            (dY1.col(k) - co.Ahat * run.x_hat.col(k) * dt);
        run.dU.col(k) = dU;
        const MatrixXd gain = (co.LS + P * co.Ahat.transpose()) * co.SSinv_sqrt;
        run.x_hat.col(k + 1) = run.x_hat.col(k) +
                               (model.b + model.B * run.x_hat.col(k)) * dt +
                               gain * dU;
        run.P.push_back(sched->at(t + dt));
    }
    return run;
}

FilteredMarket::FilteredMarket(const MarketModel& model, RiccatiSchedule schedule)
    : base_(model), schedule_(std::move(schedule)) {
    require_a0_zero(model, "filtered_market");
    const MatrixXd SS = model.sigma_sigma_t();
    sqrtSS_ = psd_sqrt(SS);
    inv_sqrtSS_ = spd_inv_sqrt(SS);
    LS_ = model.lambda_sigma_t();
    Ahat_ = model.A_hat();
}

MatrixXd FilteredMarket::lambda_at(double t) const {
    return (LS_ + schedule_.at(t) * Ahat_.transpose()) * inv_sqrtSS_;
}

MarketModel FilteredMarket::snapshot(double t) const {
    MarketModel m = base_;
    m.Lambda = lambda_at(t);
    m.Sigma = sqrtSS_;
    m.M = m.m;
    return m;
}

ModelSchedule FilteredMarket::model_schedule() const {
    const FilteredMarket self = *this;
    return [self](double t) { return self.snapshot(t); };
}

FilterDiagnostics filter_diagnostics(const MarketModel& model,
                                     const PathMesh& mesh, const VectorXd& m0,
                                     const MatrixXd& P0, long n_paths,
                                     std::uint64_t seed, int threads,
                                     int lb_lags, long whiteness_paths) {
    require_a0_zero(model, "filter_diagnostics");
    const RiccatiSchedule sched(model, P0, mesh.T, mesh.dt() / 10.0);
    const PolicyFn h0 = constant_policy(VectorXd::Zero(model.m));
    const double sqdt = std::sqrt(mesh.dt());

    struct PerPath {
        MatrixXd err_outer;
        std::vector<std::vector<double>> innov;  // per component
    };
    std::vector<PerPath> acc(static_cast<std::size_t>(n_paths));

    parallel_chunks(static_cast<int>(n_paths), threads, [&](int b, int e) {
        for (int p = b; p < e; ++p) {
            RngStream init(seed, static_cast<std::uint64_t>(p), 2);
            VectorXd x0(model.n);
            for (int i = 0; i < model.n; ++i) x0(i) = init.normal();
            x0 = m0 + psd_sqrt(P0) * x0;
            const SimPath path = simulate_path(model, h0, mesh, x0, seed,
                                               static_cast<std::uint64_t>(p));
            const auto dec = decompose_observations(path, model);
            const auto run = run_filter(dec.dY1, mesh, m0, P0, model, &sched);
            const VectorXd err = path.X.col(mesh.steps) -
                                 run.x_hat.col(mesh.steps);
            PerPath& pp = acc[static_cast<std::size_t>(p)];
            pp.err_outer = err * err.transpose();
            if (p < whiteness_paths) {
                pp.innov.resize(model.m);
                for (int i = 0; i < model.m; ++i) {
                    pp.innov[i].resize(mesh.steps);
                    for (int k = 0; k < mesh.steps; ++k)
                        pp.innov[i][k] = run.dU(i, k) / sqdt;
                }
            }
        }
    });

    FilterDiagnostics diag;
    diag.P_T = sched.at(mesh.T);
    diag.empirical_cov = MatrixXd::Zero(model.n, model.n);
    for (const auto& pp : acc) diag.empirical_cov += pp.err_outer;
    diag.empirical_cov /= static_cast<double>(n_paths);
    diag.cov_rel_err = (diag.empirical_cov - diag.P_T).norm() / diag.P_T.norm();

    diag.min_P_eig = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 50; ++k)
        diag.min_P_eig = std::min(
            diag.min_P_eig, min_eigenvalue(sched.at(mesh.T * k / 50.0)));
    diag.psd_ok = diag.min_P_eig >= -1e-10;

    for (int i = 0; i < model.m; ++i) {
        std::vector<std::vector<double>> segs;
        for (long p = 0; p < std::min<long>(whiteness_paths, n_paths); ++p)
            segs.push_back(acc[static_cast<std::size_t>(p)].innov[i]);
        diag.whiteness.push_back(ljung_box(segs, lb_lags));
    }
    return diag;
}

JEstimate estimate_J_partial(const MarketModel& model, const PolicyGrid& policy,
                             const VectorXd& zero_beta_h, const PathMesh& mesh,
                             const VectorXd& m0, const MatrixXd& P0,
                             const RiccatiSchedule& schedule, long n_paths,
                             std::uint64_t seed, int threads) {
    require_a0_zero(model, "estimate_J_partial");
    const VectorXd c = observation_constant(model);
    const MatrixXd P0sqrt = psd_sqrt(P0);
    const MatrixXd SSinv_sqrt = spd_inv_sqrt(model.sigma_sigma_t());
    const MatrixXd Ahat = model.A_hat();
    const MatrixXd LS = model.lambda_sigma_t();
    const double dt = mesh.dt();

    std::vector<PathSummary> sums(static_cast<std::size_t>(n_paths));
    parallel_chunks(static_cast<int>(n_paths), threads, [&](int b, int e) {
        for (int p = b; p < e; ++p) {
            RngStream init(seed, static_cast<std::uint64_t>(p), 2);
            VectorXd x0(model.n);
            for (int i = 0; i < model.n; ++i) x0(i) = init.normal();
            x0 = m0 + P0sqrt * x0;

            PathEngine eng(model, mesh, x0, seed, static_cast<std::uint64_t>(p));
            VectorXd x_hat = m0;
            double logV = std::log(model.v);
            for (int k = 0; k < mesh.steps; ++k) {
                const double t = eng.t();
                const VectorXd h =
                    interpolate_policy(policy, t, x_hat, zero_beta_h);
                const auto st = eng.advance(h);
                // dY1 from the observable increments: strip the constant
                // drift and the recorded jumps.
                VectorXd dY2 = c * dt;
                for (const auto& a : model.jumps.atoms)
                    if (a.in_z0)
                        for (int i = 0; i < model.m; ++i)
                            dY2(i) -= a.weight * std::log1p(a.gamma(i)) * dt;
                for (const auto& evn : st.events) {
                    const auto& atom = model.jumps.atoms[evn.atom];
                    for (int i = 0; i < model.m; ++i)
                        dY2(i) += std::log1p(atom.gamma(i));
                }
                const VectorXd dY1 = st.dY - dY2;
                const VectorXd dU = SSinv_sqrt * (dY1 - Ahat * x_hat * dt);
                const MatrixXd gain =
                    (LS + schedule.at(t) * Ahat.transpose()) * SSinv_sqrt;
                x_hat += (model.b + model.B * x_hat) * dt + gain * dU;
                logV += st.dlogV;
            }
            sums[static_cast<std::size_t>(p)].logV_T = logV;
        }
    });
    return estimate_J_from(sums, model.theta, seed);
}

}  // namespace rsam
