#pragma once

// Shared model fixtures for tests and the acceptance suite.

#include "rsam/model.hpp"

namespace rsam::testmodels {

inline Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
    const int r = static_cast<int>(rows.size());
    const int c = static_cast<int>(rows.begin()->size());
    Eigen::MatrixXd m(r, c);
    int i = 0;
    for (const auto& row : rows) {
        int j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

inline Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<int>(xs.size()));
    int i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

// Degenerate sanity model: zero excess returns, orthogonal loadings, no
// jumps. The optimal policy is h = 0 everywhere and Phi_tilde is flat.
inline MarketModel zero_beta_optimal() {
    MarketModel m;
    m.n = 1; m.m = 2; m.M = 3;
    m.b = vec({0.02});
    m.B = mat({{-0.5}});
    m.Lambda = mat({{0.0, 0.0, 0.25}});
    m.a0 = 0.0;
    m.A0 = vec({0.0});
    m.a = vec({0.0, 0.0});
    m.A = mat({{0.0}, {0.0}});
    m.Sigma = mat({{0.20, 0.0, 0.0}, {0.0, 0.25, 0.0}});
    m.theta = 1.0;
    m.T = 1.0;
    m.v = 1.0;
    return m;
}

// One observed factor, two assets, no jumps. Strong mean reversion keeps
// the state well inside moderate grid boxes.
inline MarketModel nojump() {
    MarketModel m;
    m.n = 1; m.m = 2; m.M = 3;
    m.b = vec({0.0});
    m.B = mat({{-1.5}});
    m.Lambda = mat({{0.05, 0.03, 0.14}});
    m.a0 = 0.05;
    m.A0 = vec({0.0});
    m.a = vec({0.075, 0.065});
    m.A = mat({{0.08}, {0.03}});
    m.Sigma = mat({{0.20, 0.04, 0.0}, {0.04, 0.22, 0.0}});
    m.theta = 2.0;
    m.T = 1.0;
    m.v = 1.0;
    return m;
}

// nojump() plus a two-atom jump measure (one compensated downward mark,
// one uncompensated upward mark).
inline MarketModel with_jumps() {
    MarketModel m = nojump();
    JumpAtom down{vec({-0.15, -0.25}), 2.0, true};
    JumpAtom up{vec({0.20, 0.10}), 1.5, false};
    m.jumps.atoms = {down, up};
    return m;
}

// Flat-rate variants: a0 = 0 with the same excess returns. The zero-beta
// cost is then exactly zero, so the continuous upper bound
// exp(theta g_check (T-t)) = 1 coincides with the discrete zero-beta
// envelope (backward Euler preserves constants), making the bound an exact
// discrete statement.
inline MarketModel nojump_flat_rate() {
    MarketModel m = nojump();
    m.a = m.a_hat();
    m.a0 = 0.0;
    return m;
}

inline MarketModel with_jumps_flat_rate() {
    MarketModel m = with_jumps();
    m.a = m.a_hat();
    m.a0 = 0.0;
    return m;
}

// Stochastic short rate variant: A0 != 0, A_hat full rank; the zero-beta
// policy is the minimum-norm solution of h'A_hat = -A0.
inline MarketModel short_rate() {
    MarketModel m = nojump();
    m.A0 = vec({0.02});
    m.A = mat({{0.10}, {0.05}});
    return m;
}

// Two-factor model for the n = 2 solver path.
inline MarketModel two_factor() {
    MarketModel m;
    m.n = 2; m.m = 3; m.M = 5;
    m.b = vec({0.0, 0.0});
    m.B = mat({{-1.2, 0.2}, {0.0, -1.0}});
    m.Lambda = mat({{0.04, 0.0, 0.0, 0.12, 0.02},
                    {0.0, 0.03, 0.0, 0.03, 0.10}});
    m.a0 = 0.04;
    m.A0 = vec({0.0, 0.0});
    m.a = vec({0.07, 0.06, 0.05});
    m.A = mat({{0.07, 0.02}, {0.02, 0.06}, {0.03, 0.03}});
    m.Sigma = mat({{0.20, 0.03, 0.02, 0.0, 0.0},
                   {0.03, 0.22, 0.04, 0.0, 0.0},
                   {0.02, 0.04, 0.18, 0.0, 0.0}});
    m.theta = 1.5;
    m.T = 0.5;
    m.v = 1.0;
    return m;
}

}  // namespace rsam::testmodels
