#include "rsam/sim.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "rsam/dynamics.hpp"
#include "rsam/errors.hpp"
#include "rsam/linalg.hpp"
#include "rsam/parallel.hpp"
#include "rsam/stats.hpp"

namespace rsam {

PolicyFn constant_policy(const VectorXd& h) {
    return [h](double, const VectorXd&) { return h; };
}

PolicyFn feedback_policy(const PolicyGrid& pg, const VectorXd& zero_beta_h) {
    return [pg, zero_beta_h](double t, const VectorXd& x) {
        return interpolate_policy(pg, t, x, zero_beta_h);
    };
}

OuStepKernel::OuStepKernel(const MatrixXd& B, const MatrixXd& Lambda, double dt)
    : dt_(dt) {
    Phi_ = expm(B * dt);
    I1_ = ou_drift_integral(B, dt);
    I1L_ = I1_ * Lambda;
    const MatrixXd Cxx = ou_covariance_integral(B, Lambda * Lambda.transpose(), dt);
    Lc_ = psd_sqrt(Cxx - I1L_ * I1L_.transpose() / dt);
    Lxx_ = psd_sqrt(Cxx);
}

VectorXd OuStepKernel::propagate(const VectorXd& x, const VectorXd& drift_const,
                                 const VectorXd& dW, RngStream& rng) const {
    const int n = static_cast<int>(x.size());
    VectorXd xi(n);
    for (int i = 0; i < n; ++i) xi(i) = rng.normal();
    return Phi_ * x + I1_ * drift_const + I1L_ * (dW / dt_) + Lc_ * xi;
}

VectorXd OuStepKernel::propagate_marginal(const VectorXd& x,
                                          const VectorXd& drift_const,
                                          RngStream& rng) const {
    const int n = static_cast<int>(x.size());
    VectorXd xi(n);
    for (int i = 0; i < n; ++i) xi(i) = rng.normal();
    return Phi_ * x + I1_ * drift_const + Lxx_ * xi;
}

PathEngine::PathEngine(const MarketModel& model, const PathMesh& mesh,
                       const VectorXd& x0, std::uint64_t seed,
                       std::uint64_t path_index)
    : model_(model), mesh_(mesh),
      kernel_(model.B, model.Lambda, mesh.dt()),
      set_(model.admissible_set()),
      brownian_(seed, path_index, 0),
      jumps_(seed, path_index, 1),
      x_(x0),
      SS_(model.sigma_sigma_t()),
      a_hat_(model.a_hat()),
      A_hat_(model.A_hat()) {
    total_intensity_ = model.jumps.total_intensity();
    next_jump_ = total_intensity_ > 0.0
                     ? jumps_.exponential(total_intensity_)
                     : std::numeric_limits<double>::infinity();
    asset_drift_const_ = VectorXd::Zero(model.m);
    for (int i = 0; i < model.m; ++i) {
        asset_drift_const_(i) = -0.5 * SS_(i, i);
        for (const auto& a : model.jumps.atoms)
            if (a.in_z0) asset_drift_const_(i) -= a.weight * a.gamma(i);
    }
}

int PathEngine::draw_atom() {
    const double u = jumps_.uniform() * total_intensity_;
    double acc = 0.0;
    const auto& atoms = model_.jumps.atoms;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        acc += atoms[k].weight;
        if (u <= acc) return static_cast<int>(k);
    }
    return static_cast<int>(atoms.size()) - 1;
}

PathEngine::Step PathEngine::advance(const VectorXd& h) {
    const double dt = mesh_.dt();
    const double t0 = t();
    const double t1 = t0 + dt;
    if (set_.slack(h) <= 0.0) {
        std::ostringstream msg;
        msg << "policy leaves the admissible set at t = " << t0;
        throw PolicyInfeasible(msg.str());
    }

    Step s;
    s.dW.resize(model_.M);
    const double sq = std::sqrt(dt);
    for (int i = 0; i < model_.M; ++i) s.dW(i) = sq * brownian_.normal();

    const VectorXd x_new = kernel_.propagate(x_, model_.b, s.dW, brownian_);
    const VectorXd xbar = 0.5 * (x_ + x_new);

    // Between-jump increments of ln S and ln V: drift integrals by trapezoid
    // through xbar, compensators exact for the frozen h.
    s.dY = (model_.a + model_.A * xbar + asset_drift_const_) * dt +
           model_.Sigma * s.dW;

    // Z0 compensator of ln V: the {ln(1+h'g) - h'g} drift correction and
    // the compensation of the jump sum collapse to -sum_{Z0} w h'gamma.
    double comp_h = 0.0;
    double chi_comp = 0.0;  // sum_atoms w G, the dt part of ln chi
    for (const auto& a : model_.jumps.atoms) {
        const double hg = h.dot(a.gamma);
        if (a.in_z0) comp_h -= a.weight * hg;
        chi_comp += a.weight * big_g(h, a.gamma, model_.theta);
    }
    const double hSdW = h.dot(model_.Sigma * s.dW);
    const double hSSh = h.dot(SS_ * h);
    s.dlogV = (model_.a0 + model_.A0.dot(xbar) + h.dot(a_hat_ + A_hat_ * xbar) -
               0.5 * hSSh + comp_h) * dt + hSdW;
    s.dlogChi = -model_.theta * hSdW -
                0.5 * model_.theta * model_.theta * hSSh * dt + chi_comp * dt;

    s.jump_slack = std::numeric_limits<double>::infinity();
    while (next_jump_ <= t1) {
        const int k = draw_atom();
        const auto& atom = model_.jumps.atoms[k];
        const double hg = h.dot(atom.gamma);
        s.jump_slack = std::min(s.jump_slack, 1.0 + hg);
        if (1.0 + hg <= 0.0) {
            std::ostringstream msg;
            msg << "wealth jump factor 1 + h'gamma <= 0 at t = " << next_jump_;
            throw PolicyInfeasible(msg.str());
        }
        s.events.push_back({next_jump_, k});
        for (int i = 0; i < model_.m; ++i) s.dY(i) += std::log1p(atom.gamma(i));
        s.dlogV += std::log1p(hg);
        s.dlogChi += std::log1p(-big_g(h, atom.gamma, model_.theta));
        next_jump_ += jumps_.exponential(total_intensity_);
    }

    x_ = x_new;
    ++step_;
    return s;
}

SimPath simulate_path(const MarketModel& model, const PolicyFn& policy,
                      const PathMesh& mesh, const VectorXd& x0,
                      std::uint64_t seed, std::uint64_t path_index) {
    const int K = mesh.steps;
    SimPath path;
    path.times.resize(K + 1);
    path.X.resize(model.n, K + 1);
    path.logS = MatrixXd::Zero(model.m, K + 1);
    path.logV.resize(K + 1);
    path.logChi.resize(K + 1);
    path.dW.resize(model.M, K);
    path.policy.resize(model.m, K);

    PathEngine eng(model, mesh, x0, seed, path_index);
    path.times(0) = 0.0;
    path.X.col(0) = x0;
    path.logV(0) = std::log(model.v);
    path.logChi(0) = 0.0;

    for (int k = 0; k < K; ++k) {
        const VectorXd h = policy(eng.t(), eng.x());
        path.policy.col(k) = h;
        const auto st = eng.advance(h);
        path.times(k + 1) = eng.t();
        path.X.col(k + 1) = eng.x();
        path.logS.col(k + 1) = path.logS.col(k) + st.dY;
        path.logV(k + 1) = path.logV(k) + st.dlogV;
        path.logChi(k + 1) = path.logChi(k) + st.dlogChi;
        path.dW.col(k) = st.dW;
        path.events.insert(path.events.end(), st.events.begin(), st.events.end());
    }
    return path;
}

VectorXd doleans(const MarketModel& model, const SimPath& path) {
    const int K = static_cast<int>(path.dW.cols());
    const double dt = K > 0 ? path.times(1) - path.times(0) : 0.0;
    const MatrixXd SS = model.sigma_sigma_t();
    VectorXd logChi(K + 1);
    logChi(0) = 0.0;
    std::size_t ev = 0;
    for (int k = 0; k < K; ++k) {
        const VectorXd h = path.policy.col(k);
        const double hSdW = h.dot(model.Sigma * path.dW.col(k));
        double comp = 0.0;
        for (const auto& a : model.jumps.atoms)
            comp += a.weight * big_g(h, a.gamma, model.theta);
        double inc = -model.theta * hSdW -
                     0.5 * model.theta * model.theta * h.dot(SS * h) * dt +
                     comp * dt;
        const double t1 = path.times(k + 1);
        while (ev < path.events.size() && path.events[ev].time <= t1) {
            const auto& atom = model.jumps.atoms[path.events[ev].atom];
            inc += std::log1p(-big_g(h, atom.gamma, model.theta));
            ++ev;
        }
        logChi(k + 1) = logChi(k) + inc;
    }
    return logChi.array().exp();
}

std::vector<PathSummary> run_paths(const MarketModel& model,
                                   const PolicyFn& policy, const PathMesh& mesh,
                                   const VectorXd& x0, long n_paths,
                                   std::uint64_t seed, int threads) {
    std::vector<PathSummary> out(static_cast<std::size_t>(n_paths));
    parallel_chunks(static_cast<int>(n_paths), threads, [&](int b, int e) {
        for (int p = b; p < e; ++p) {
            PathEngine eng(model, mesh, x0, seed, static_cast<std::uint64_t>(p));
            double logV = std::log(model.v);
            double logChi = 0.0;
            PathSummary& ps = out[static_cast<std::size_t>(p)];
            ps.min_logV = logV;
            ps.min_jump_slack = std::numeric_limits<double>::infinity();
            for (int k = 0; k < mesh.steps; ++k) {
                const VectorXd h = policy(eng.t(), eng.x());
                const auto st = eng.advance(h);
                logV += st.dlogV;
                logChi += st.dlogChi;
                ps.min_logV = std::min(ps.min_logV, logV);
                ps.min_jump_slack = std::min(ps.min_jump_slack, st.jump_slack);
            }
            ps.logV_T = logV;
            ps.logChi_T = logChi;
            ps.x_T = eng.x();
        }
    });
    return out;
}

JEstimate estimate_J_from(const std::vector<PathSummary>& summaries,
                          double theta, std::uint64_t seed) {
    std::vector<double> z, lv;
    z.reserve(summaries.size());
    lv.reserve(summaries.size());
    for (const auto& s : summaries) {
        z.push_back(-theta * s.logV_T);
        lv.push_back(s.logV_T);
    }
    const LogMeanExp lme = log_mean_exp(z);
    const SampleMoments mom = sample_moments(lv);
    JEstimate est;
    est.J.mean = -lme.log_mean / theta;
    est.J.se = lme.se_log / theta;
    est.J.paths = static_cast<long>(summaries.size());
    est.J.seed = seed;
    est.mean_logV = mom.mean;
    est.var_logV = mom.variance;
    est.se_logV = mom.se_mean();
    return est;
}

JEstimate estimate_J(const MarketModel& model, const PolicyFn& policy,
                     const PathMesh& mesh, const VectorXd& x0, long n_paths,
                     std::uint64_t seed, int threads) {
    const auto sums = run_paths(model, policy, mesh, x0, n_paths, seed, threads);
    return estimate_J_from(sums, model.theta, seed);
}

McEstimate estimate_I_tilde(const MarketModel& model, const PolicyFn& policy,
                            const PathMesh& mesh, const VectorXd& x0,
                            long n_paths, std::uint64_t seed, int threads,
                            const ModelSchedule* schedule) {
    const double dt = mesh.dt();
    // Frozen-coefficient kernels per step (one shared kernel when Lambda is
    // constant in time).
    std::vector<OuStepKernel> kernels;
    std::vector<MatrixXd> LS;
    if (schedule) {
        kernels.reserve(mesh.steps);
        LS.reserve(mesh.steps);
        for (int k = 0; k < mesh.steps; ++k) {
            const MarketModel mk = (*schedule)(k * dt);
            kernels.emplace_back(mk.B, mk.Lambda, dt);
            LS.push_back(mk.lambda_sigma_t());
        }
    } else {
        kernels.emplace_back(model.B, model.Lambda, dt);
        LS.push_back(model.lambda_sigma_t());
    }

    std::vector<double> z(static_cast<std::size_t>(n_paths));
    parallel_chunks(static_cast<int>(n_paths), threads, [&](int b, int e) {
        for (int p = b; p < e; ++p) {
            RngStream rng(seed, static_cast<std::uint64_t>(p), 0);
            VectorXd x = x0;
            double int_g = 0.0;
            for (int k = 0; k < mesh.steps; ++k) {
                const auto& ker = kernels[schedule ? k : 0];
                const auto& ls = LS[schedule ? k : 0];
                const VectorXd h = policy(k * dt, x);
                const double g0 = eval_g(x, h, model);
                const VectorXd drift = model.b - model.theta * (ls * h);
                const VectorXd x_new = ker.propagate_marginal(x, drift, rng);
                const double g1 = eval_g(x_new, h, model);
                int_g += 0.5 * (g0 + g1) * dt;
                x = x_new;
            }
            z[static_cast<std::size_t>(p)] =
                model.theta * int_g - model.theta * std::log(model.v);
        }
    });

    // Mean and SE of exp(z) computed in shifted space for overflow safety.
    const LogMeanExp lme = log_mean_exp(z);
    McEstimate est;
    est.mean = std::exp(lme.log_mean);
    est.se = est.mean * lme.se_log;
    est.paths = n_paths;
    est.seed = seed;
    return est;
}

}  // namespace rsam
