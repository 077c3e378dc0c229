#pragma once

// Independent test oracles. Everything here recomputes expected values from
// the model primitives through routes the library does not use: RK4 ODE
// integration for the quadratic value-function ansatz, dense grid scans for
// the inner maximization, Simpson quadrature for Gaussian wealth moments,
// and a discrete-time Kalman recursion.

#include <cmath>
#include <functional>
#include <vector>

#include "rsam/model.hpp"

namespace rsam::oracles {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------
// Quadratic ansatz Phi(t,x) = 0.5 x'Q(t)x + q(t)'x + k(t) for the no-jump
// model, integrated backward from Q(T)=0, q(T)=0, k(T)=ln v.
struct RiccatiSolution {
    std::vector<MatrixXd> Q;
    std::vector<VectorXd> q;
    std::vector<double> k;
    double dt = 0.0;
    double T = 0.0;

    double phi(double t, const VectorXd& x) const {
        const double u = std::min(std::max(t / dt, 0.0),
                                  static_cast<double>(Q.size() - 1));
        const std::size_t i = std::min(static_cast<std::size_t>(u), Q.size() - 2);
        const double f = u - static_cast<double>(i);
        const MatrixXd Qt = (1.0 - f) * Q[i] + f * Q[i + 1];
        const VectorXd qt = (1.0 - f) * q[i] + f * q[i + 1];
        const double kt = (1.0 - f) * k[i] + f * k[i + 1];
        return 0.5 * x.dot(Qt * x) + qt.dot(x) + kt;
    }
};

inline RiccatiSolution solve_riccati_ode(const MarketModel& m, int steps = 4000) {
    if (!m.jumps.empty())
        throw std::logic_error("riccati oracle is for the no-jump model");
    const MatrixXd S = m.sigma_sigma_t().inverse();
    const MatrixXd LL = m.lambda_lambda_t();
    const MatrixXd SL = m.lambda_sigma_t().transpose();  // Sigma Lambda', m x n
    const MatrixXd Ah = m.A_hat();
    const VectorXd ah = m.a_hat();
    const double th = m.theta;

    auto dQ = [&](const MatrixXd& Q) -> MatrixXd {
        const MatrixXd U1 = Ah - th * SL * Q;
        MatrixXd rhs = m.B.transpose() * Q + Q * m.B - th * Q * LL * Q +
                       U1.transpose() * S * U1 / (th + 1.0);
        return -0.5 * (rhs + rhs.transpose());
    };
    auto dq = [&](const MatrixXd& Q, const VectorXd& q) -> VectorXd {
        const MatrixXd U1 = Ah - th * SL * Q;
        const VectorXd u0 = ah - th * SL * q;
        return -(Q * m.b + m.B.transpose() * q - th * Q * LL * q + m.A0 +
                 U1.transpose() * S * u0 / (th + 1.0));
    };
    auto dk = [&](const MatrixXd& Q, const VectorXd& q) -> double {
        const VectorXd u0 = ah - th * SL * q;
        return -(m.b.dot(q) + 0.5 * (LL * Q).trace() -
                 0.5 * th * q.dot(LL * q) + m.a0 +
                 u0.dot(S * u0) / (2.0 * (th + 1.0)));
    };

    RiccatiSolution sol;
    sol.T = m.T;
    sol.dt = m.T / steps;
    sol.Q.assign(steps + 1, MatrixXd::Zero(m.n, m.n));
    sol.q.assign(steps + 1, VectorXd::Zero(m.n));
    sol.k.assign(steps + 1, std::log(m.v));

    // integrate backward in t (downward in index), RK4
    for (int i = steps; i > 0; --i) {
        const double h = -sol.dt;
        const MatrixXd& Q0 = sol.Q[i];
        const VectorXd& q0 = sol.q[i];
        const double k0 = sol.k[i];

        const MatrixXd kq1 = dQ(Q0);
        const VectorXd kl1 = dq(Q0, q0);
        const double kk1 = dk(Q0, q0);
        const MatrixXd kq2 = dQ(Q0 + 0.5 * h * kq1);
        const VectorXd kl2 = dq(Q0 + 0.5 * h * kq1, q0 + 0.5 * h * kl1);
        const double kk2 = dk(Q0 + 0.5 * h * kq1, q0 + 0.5 * h * kl1);
        const MatrixXd kq3 = dQ(Q0 + 0.5 * h * kq2);
        const VectorXd kl3 = dq(Q0 + 0.5 * h * kq2, q0 + 0.5 * h * kl2);
        const double kk3 = dk(Q0 + 0.5 * h * kq2, q0 + 0.5 * h * kl2);
        const MatrixXd kq4 = dQ(Q0 + h * kq3);
        const VectorXd kl4 = dq(Q0 + h * kq3, q0 + h * kl3);
        const double kk4 = dk(Q0 + h * kq3, q0 + h * kl3);

        sol.Q[i - 1] = Q0 + h / 6.0 * (kq1 + 2.0 * kq2 + 2.0 * kq3 + kq4);
        sol.q[i - 1] = q0 + h / 6.0 * (kl1 + 2.0 * kl2 + 2.0 * kl3 + kl4);
        sol.k[i - 1] = k0 + h / 6.0 * (kk1 + 2.0 * kk2 + 2.0 * kk3 + kk4);
    }
    return sol;
}

// ---------------------------------------------------------------------
// The untransformed inner objective, maximized by the optimal allocation:
//   L(x, p, h) = -(theta+1)/2 h'SS'h - theta h'SigmaLambda'p + h'(ahat+Ahat x)
//                - (1/theta) sum_k w_k [ (1+h'g_k)^{-theta} - 1 + theta h'g_k 1{Z0} ]
// p here is the gradient of the untransformed value function.
inline double script_L(const MarketModel& m, const VectorXd& x,
                       const VectorXd& p, const VectorXd& h) {
    const MatrixXd SS = m.Sigma * m.Sigma.transpose();
    double val = -0.5 * (m.theta + 1.0) * h.dot(SS * h) -
                 m.theta * h.dot(m.Sigma * m.Lambda.transpose() * p) +
                 h.dot(m.a_hat() + m.A_hat() * x);
    for (const auto& a : m.jumps.atoms) {
        const double s = 1.0 + h.dot(a.gamma);
        if (s <= 0.0) return -std::numeric_limits<double>::infinity();
        double term = (std::pow(s, -m.theta) - 1.0) / m.theta;
        if (a.in_z0) term += h.dot(a.gamma);
        val -= a.weight * term;
    }
    return val;
}

// Multi-stage dense grid maximization over a box (valid for the strictly
// concave objectives used here). Final resolution <= step_final.
inline VectorXd grid_search_max(const std::function<double(const VectorXd&)>& f,
                                VectorXd lo, VectorXd hi, double step_final) {
    const int m = static_cast<int>(lo.size());
    VectorXd best = 0.5 * (lo + hi);
    const int pts = 81;
    for (int stage = 0; stage < 8; ++stage) {
        double width = (hi - lo).maxCoeff();
        double fbest = -std::numeric_limits<double>::infinity();
        VectorXd arg = best;
        if (m == 1) {
            for (int i = 0; i < pts; ++i) {
                VectorXd h(1);
                h(0) = lo(0) + (hi(0) - lo(0)) * i / (pts - 1);
                const double v = f(h);
                if (v > fbest) { fbest = v; arg = h; }
            }
        } else {
            for (int i = 0; i < pts; ++i)
                for (int j = 0; j < pts; ++j) {
                    VectorXd h(2);
                    h(0) = lo(0) + (hi(0) - lo(0)) * i / (pts - 1);
                    h(1) = lo(1) + (hi(1) - lo(1)) * j / (pts - 1);
                    const double v = f(h);
                    if (v > fbest) { fbest = v; arg = h; }
                }
        }
        best = arg;
        const double step = width / (pts - 1);
        if (step <= step_final) break;
        for (int d = 0; d < m; ++d) {
            lo(d) = best(d) - 2.0 * step;
            hi(d) = best(d) + 2.0 * step;
        }
    }
    return best;
}

// ---------------------------------------------------------------------
// Gaussian moments of ln V(T) for a constant policy in a no-jump model
// with one factor, by Simpson quadrature of the defining integrals.
struct WealthMoments {
    double mean = 0.0;
    double variance = 0.0;
};

inline WealthMoments wealth_moments_1d(const MarketModel& m, const VectorXd& h,
                                       double x0, int quad_steps = 800) {
    if (m.n != 1 || !m.jumps.empty())
        throw std::logic_error("wealth oracle is 1-factor, no jumps");
    const double B = m.B(0, 0);
    const double b = m.b(0);
    const double LL = m.lambda_lambda_t()(0, 0);
    const double LSh = (m.lambda_sigma_t() * h)(0);
    const double SSh = h.dot(m.sigma_sigma_t() * h);
    const double c = m.A0(0) + (m.A_hat().transpose() * h)(0);
    const double T = m.T;
    const int K = quad_steps;  // even
    const double dt = T / K;

    auto simpson_w = [&](int i) {
        if (i == 0 || i == K) return 1.0;
        return i % 2 == 1 ? 4.0 : 2.0;
    };
    auto EX = [&](double s) { return std::exp(B * s) * x0 +
                                     b * (std::expm1(B * s)) / B; };
    auto V = [&](double u) { return LL * std::expm1(2.0 * B * u) / (2.0 * B); };

    double int_EX = 0.0, int_e = 0.0;
    for (int i = 0; i <= K; ++i) {
        const double s = i * dt;
        int_EX += simpson_w(i) * EX(s);
        int_e += simpson_w(i) * std::expm1(B * s) / B;  // int (e^{Bs}-1)/B
    }
    int_EX *= dt / 3.0;
    int_e *= dt / 3.0;

    // Var(int X ds) = 2 int_0^T int_0^s e^{B(s-u)} V(u) du ds
    double var_int = 0.0;
    for (int i = 0; i <= K; ++i) {
        const double s = i * dt;
        const int Ki = std::max(2, i - i % 2);
        double inner = 0.0;
        if (i > 0) {
            const double du = s / Ki;
            for (int j = 0; j <= Ki; ++j) {
                const double u = j * du;
                const double w = (j == 0 || j == Ki) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
                inner += w * std::exp(B * (s - u)) * V(u);
            }
            inner *= du / 3.0;
        }
        var_int += simpson_w(i) * inner;
    }
    var_int *= 2.0 * dt / 3.0;

    WealthMoments wm;
    wm.mean = std::log(m.v) +
              (m.a0 + h.dot(m.a_hat()) - 0.5 * SSh) * T + c * int_EX;
    wm.variance = c * c * var_int + 2.0 * c * LSh * int_e + SSh * T;
    return wm;
}

// ---------------------------------------------------------------------
// Discrete-time Kalman filter with correlated process/measurement noise on
// the Euler-discretized system; one-step predictor form.
struct DiscreteKf {
    MatrixXd x_hat;  // n x (K+1)
};

inline DiscreteKf discrete_kalman(const MarketModel& m, const MatrixXd& dY1,
                                  double dt, const VectorXd& m0,
                                  const MatrixXd& P0) {
    const int K = static_cast<int>(dY1.cols());
    const MatrixXd F = MatrixXd::Identity(m.n, m.n) + m.B * dt;
    const MatrixXd H = m.A_hat() * dt;
    const MatrixXd Q = m.lambda_lambda_t() * dt;
    const MatrixXd R = m.sigma_sigma_t() * dt;
    const MatrixXd S = m.lambda_sigma_t() * dt;  // Cov(w_k, v_k)

    DiscreteKf kf;
    kf.x_hat.resize(m.n, K + 1);
    kf.x_hat.col(0) = m0;
    MatrixXd P = P0;
    for (int k = 0; k < K; ++k) {
        const MatrixXd Sinn = H * P * H.transpose() + R;
        const MatrixXd Kk = (F * P * H.transpose() + S) * Sinn.inverse();
        kf.x_hat.col(k + 1) = kf.x_hat.col(k) + (m.b + m.B * kf.x_hat.col(k)) * dt +
                              Kk * (dY1.col(k) - H * kf.x_hat.col(k));
        P = F * P * F.transpose() + Q - Kk * Sinn * Kk.transpose();
        P = 0.5 * (P + P.transpose());
    }
    return kf;
}

// Positive root of the scalar stationary Riccati equation
//   0 = noise + 2 drift_adj P - (Ah^2/SS) P^2.
inline double scalar_riccati_fixed_point(const MarketModel& m) {
    const double SS = m.sigma_sigma_t()(0, 0);
    const double Ah = m.A_hat()(0, 0);
    const double LS = m.lambda_sigma_t()(0, 0);
    const double LL = m.lambda_lambda_t()(0, 0);
    const double noise = LL - LS * LS / SS;
    const double adj = m.B(0, 0) - LS * Ah / SS;
    const double a = -Ah * Ah / SS;
    const double b = 2.0 * adj;
    const double c = noise;
    // aP^2 + bP + c = 0, a < 0; positive root
    return (-b - std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a);
}

}  // namespace rsam::oracles
