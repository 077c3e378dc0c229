#include <doctest.h>

#include <cmath>

#include "rsam/errors.hpp"
#include "rsam/filter.hpp"
#include "rsam/hjb.hpp"
#include "rsam/linalg.hpp"
#include "oracles.hpp"
#include "test_models.hpp"

using namespace rsam;
using namespace rsam::testmodels;

TEST_CASE("observation decomposition reconstructs log prices") {
    const MarketModel m = with_jumps();
    const PathMesh mesh{m.T, 120};
    const SimPath path = simulate_path(m, constant_policy(vec({0.2, 0.1})),
                                       mesh, vec({0.1}), 314, 3);
    const auto dec = decompose_observations(path, m);
    for (int k = 0; k < mesh.steps; ++k) {
        const VectorXd dY = path.logS.col(k + 1) - path.logS.col(k);
        CHECK(((dec.dY1.col(k) + dec.dY2.col(k)) - dY).lpNorm<Eigen::Infinity>() <
              1e-12);
    }
}

TEST_CASE("no-jump model: dY2 is the deterministic drift only") {
    const MarketModel m = nojump();
    const PathMesh mesh{m.T, 60};
    const SimPath path = simulate_path(m, constant_policy(vec({0.0, 0.0})),
                                       mesh, vec({0.0}), 9, 0);
    CHECK(path.events.empty());
    const auto dec = decompose_observations(path, m);
    for (int k = 0; k < mesh.steps; ++k)
        CHECK((dec.dY2.col(k) - dec.c * mesh.dt()).lpNorm<Eigen::Infinity>() <
              1e-14);
}

TEST_CASE("single-atom model: Y2 jump sizes are ln(1+gamma)") {
    MarketModel m = nojump();
    m.jumps.atoms = {{vec({0.25, 0.15}), 4.0, false}};
    const PathMesh mesh{m.T, 100};
    const SimPath path = simulate_path(m, constant_policy(vec({0.1, 0.1})),
                                       mesh, vec({0.0}), 1234, 1);
    REQUIRE(!path.events.empty());
    const auto dec = decompose_observations(path, m);
    std::size_t ev = 0;
    for (int k = 0; k < mesh.steps; ++k) {
        int hits = 0;
        while (ev < path.events.size() &&
               path.events[ev].time <= path.times(k + 1)) {
            ++hits;
            ++ev;
        }
        const VectorXd without = dec.c * mesh.dt();
        const VectorXd jump_part = dec.dY2.col(k) - without;
        VectorXd expect = VectorXd::Zero(m.m);
        for (int i = 0; i < m.m; ++i)
            expect(i) = hits * std::log1p(m.jumps.atoms[0].gamma(i));
        CHECK((jump_part - expect).lpNorm<Eigen::Infinity>() < 1e-12);
    }
}

TEST_CASE("decomposition requires A0 = 0") {
    const MarketModel m = short_rate();
    const PathMesh mesh{m.T, 10};
    const SimPath path = simulate_path(m, constant_policy(vec({0.0, 0.0})),
                                       mesh, vec({0.0}), 2, 0);
    CHECK_THROWS_AS(decompose_observations(path, m), PreconditionError);
}

TEST_CASE("riccati_step") {
    SUBCASE("no noise, no uncertainty: P stays zero") {
        MarketModel m = nojump();
        m.Lambda = mat({{0.0, 0.0, 0.0}});
        const MatrixXd P0 = MatrixXd::Zero(1, 1);
        const MatrixXd P1 = riccati_step(P0, 0.01, m);
        CHECK(P1.lpNorm<Eigen::Infinity>() == 0.0);
    }
    SUBCASE("scalar stationary point matches the quadratic formula") {
        MarketModel m;
        m.n = 1; m.m = 1; m.M = 2;
        m.b = vec({0.0});
        m.B = mat({{-0.8}});
        m.Lambda = mat({{0.10, 0.05}});
        m.a0 = 0.0;
        m.A0 = vec({0.0});
        m.a = vec({0.05});
        m.A = mat({{0.5}});
        m.Sigma = mat({{0.2, 0.0}});
        m.theta = 1.0;
        m.T = 1.0;
        m.v = 1.0;
        const double pstar = oracles::scalar_riccati_fixed_point(m);
        MatrixXd P = mat({{0.05}});
        for (int i = 0; i < 4000; ++i) P = riccati_step(P, 0.01, m);
        INFO("P = ", P(0, 0), " P* = ", pstar);
        CHECK(std::fabs(P(0, 0) - pstar) < 1e-8);
    }
    SUBCASE("full-information limit: Lambda = c Sigma drives P to zero") {
        MarketModel m;
        m.n = 1; m.m = 1; m.M = 2;
        m.b = vec({0.0});
        m.B = mat({{-0.5}});
        m.Sigma = mat({{0.2, 0.1}});
        m.Lambda = 0.6 * m.Sigma;
        m.a0 = 0.0;
        m.A0 = vec({0.0});
        m.a = vec({0.05});
        m.A = mat({{0.5}});
        m.theta = 1.0;
        m.T = 1.0;
        m.v = 1.0;
        MatrixXd P = mat({{0.3}});
        for (int i = 0; i < 6000; ++i) P = riccati_step(P, 0.005, m);
        CHECK(std::fabs(P(0, 0)) < 1e-8);
    }
    SUBCASE("asymmetric input throws") {
        const MarketModel m = two_factor();
        MatrixXd P = mat({{0.1, 0.5}, {-0.5, 0.1}});
        CHECK_THROWS_AS(riccati_step(P, 0.01, m), DomainError);
    }
}

TEST_CASE("filter_step tracks a deterministic factor exactly when B = 0") {
    MarketModel m = nojump();
    m.b = vec({0.3});
    m.B = mat({{0.0}});
    m.Lambda = mat({{0.0, 0.0, 0.0}});
    const PathMesh mesh{m.T, 50};
    const SimPath path = simulate_path(m, constant_policy(vec({0.0, 0.0})),
                                       mesh, vec({0.4}), 8, 0);
    const auto dec = decompose_observations(path, m);
    KalmanState st{vec({0.4}), MatrixXd::Zero(1, 1), 0.0};
    for (int k = 0; k < mesh.steps; ++k) {
        st = filter_step(st, dec.dY1.col(k), mesh.dt(), m);
        CHECK(st.x_hat(0) ==
              doctest::Approx(path.X(0, k + 1)).epsilon(1e-12));
        CHECK(st.P.lpNorm<Eigen::Infinity>() == 0.0);
    }
}

TEST_CASE("continuous filter approaches the discrete Kalman filter as dt -> 0") {
    const MarketModel m = nojump();
    const VectorXd m0 = vec({0.0});
    const MatrixXd P0 = mat({{0.02}});
    double prev_diff = 0.0;
    std::vector<double> diffs;
    for (int steps : {100, 200, 400}) {
        const PathMesh mesh{m.T, steps};
        const SimPath path = simulate_path(m, constant_policy(vec({0.0, 0.0})),
                                           mesh, vec({0.1}), 246, 0);
        const auto dec = decompose_observations(path, m);
        const auto run = run_filter(dec.dY1, mesh, m0, P0, m);
        const auto kf = oracles::discrete_kalman(m, dec.dY1, mesh.dt(), m0, P0);
        double diff = 0.0;
        for (int k = 0; k <= steps; ++k)
            diff = std::max(diff, (run.x_hat.col(k) - kf.x_hat.col(k)).norm());
        diffs.push_back(diff);
        (void)prev_diff;
        prev_diff = diff;
    }
    INFO("diffs ", diffs[0], " ", diffs[1], " ", diffs[2]);
    // first-order agreement: halving dt should roughly halve the gap
    CHECK(diffs[1] < diffs[0]);
    CHECK(diffs[2] < diffs[1]);
    CHECK(diffs[0] / diffs[2] > 2.2);
}

TEST_CASE("estimation error covariance is consistent with P(T)") {
    const MarketModel m = with_jumps();
    const PathMesh mesh{m.T, 200};
    const auto diag = filter_diagnostics(m, mesh, vec({0.0}), mat({{0.02}}),
                                         2000, 1357, 2);
    INFO("cov_rel_err = ", diag.cov_rel_err);
    CHECK(diag.psd_ok);
    CHECK(diag.cov_rel_err <= 0.10);
    for (const auto& lb : diag.whiteness) {
        INFO("LB p = ", lb.p_value);
        CHECK(lb.p_value >= 0.01);
    }
}

TEST_CASE("adding jump atoms leaves the filter bitwise unchanged") {
    const MarketModel base = nojump();
    const MarketModel jumpy = with_jumps();  // same diffusion coefficients
    const PathMesh mesh{base.T, 150};
    const VectorXd m0 = vec({0.0});
    const MatrixXd P0 = mat({{0.02}});
    for (std::uint64_t p = 0; p < 5; ++p) {
        const SimPath a = simulate_path(base, constant_policy(vec({0.0, 0.0})),
                                        mesh, vec({0.1}), 777, p);
        const SimPath b = simulate_path(jumpy, constant_policy(vec({0.0, 0.0})),
                                        mesh, vec({0.1}), 777, p);
        const auto da = decompose_observations(a, base);
        const auto db = decompose_observations(b, jumpy);
        CHECK((da.dY1 - db.dY1).lpNorm<Eigen::Infinity>() == 0.0);
        const auto ra = run_filter(da.dY1, mesh, m0, P0, base);
        const auto rb = run_filter(db.dY1, mesh, m0, P0, jumpy);
        CHECK((ra.x_hat - rb.x_hat).lpNorm<Eigen::Infinity>() == 0.0);
        for (int k = 0; k <= mesh.steps; ++k)
            CHECK((ra.P[k] - rb.P[k]).lpNorm<Eigen::Infinity>() == 0.0);
    }
}

TEST_CASE("operational jump removal recovers the continuous increments") {
    const MarketModel m = with_jumps();
    const PathMesh mesh{m.T, 200};
    int steps_total = 0, steps_clean = 0;
    for (std::uint64_t p = 0; p < 10; ++p) {
        const SimPath path = simulate_path(m, constant_policy(vec({0.1, 0.1})),
                                           mesh, vec({0.0}), 9876, p);
        const auto truth = decompose_observations(path, m);
        const auto est = estimate_decomposition(path.logS, path.times, m);
        for (int k = 0; k < mesh.steps; ++k) {
            ++steps_total;
            if ((truth.dY1.col(k) - est.dY1.col(k)).lpNorm<Eigen::Infinity>() <
                1e-9)
                ++steps_clean;
        }
    }
    INFO("clean fraction ", double(steps_clean) / steps_total);
    CHECK(double(steps_clean) / steps_total > 0.95);
}

TEST_CASE("filtered market") {
    const MarketModel m = nojump();
    const MatrixXd P0 = mat({{0.02}});

    SUBCASE("P = 0 collapses the factor loading to LS (SS)^{-1/2}") {
        const RiccatiSchedule sched(m, MatrixXd::Zero(1, 1), 1e-9, 1e-10);
        const FilteredMarket fm(m, sched);
        const MatrixXd expect =
            m.lambda_sigma_t() * spd_inv_sqrt(m.sigma_sigma_t());
        CHECK((fm.lambda_at(0.0) - expect).lpNorm<Eigen::Infinity>() < 1e-12);
    }
    SUBCASE("snapshots pass validation") {
        const RiccatiSchedule sched(m, P0, m.T, 5e-4);
        const FilteredMarket fm(m, sched);
        for (double t : {0.0, 0.5, 1.0}) {
            const MarketModel snap = fm.snapshot(t);
            CHECK(snap.M == snap.m);
            const auto rep = validate(snap);
            for (const auto& f : rep.findings) {
                INFO(f.assumption, " at t = ", t);
                CHECK(f.pass);
            }
        }
    }
    SUBCASE("partial-information value matches the filtered-model PDE") {
        const RiccatiSchedule sched(m, P0, m.T, 5e-4);
        const FilteredMarket fm(m, sched);
        const ModelSchedule ms = fm.model_schedule();

        const Grid g = Grid::make(vec({1.0}), {121}, 5e-3, m.T);
        const auto res = policy_iteration(g, m, HjbOptions{}, &ms);
        const double pde_value =
            -std::log(interpolate_value(res.values, 0.0, vec({0.0}))) / m.theta;

        const JEstimate mc = estimate_J_partial(
            m, res.policy, res.zb.h, PathMesh{m.T, 200}, vec({0.0}), P0,
            sched, 20000, 4711, 2);
        INFO("pde ", pde_value, " mc ", mc.J.mean, " se ", mc.J.se);
        CHECK(std::fabs(pde_value - mc.J.mean) <= 3.0 * mc.J.se + 2e-3);
    }
}
