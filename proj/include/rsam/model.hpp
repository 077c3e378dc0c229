#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rsam/jumps.hpp"

namespace rsam {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Market model: n-factor affine diffusion driving the money market rate
// and the drifts of m jump-diffusion asset prices.
//
//   dX   = (b + B X) dt + Lambda dW                    (factors,  R^n)
//   dS0  = S0 (a0 + A0'X) dt                           (money market)
//   dSi  = Si- [ (a + A X)_i dt + Sigma_i dW + jumps ] (assets,   R^m)
//
// W is M-dimensional; for a freshly configured model M = n + m. Filtered
// reformulations reuse this struct with M collapsed to m.
struct MarketModel {
    int n = 0;  // factor dimension
    int m = 0;  // asset count
    int M = 0;  // Brownian dimension

    VectorXd b;       // n
    MatrixXd B;       // n x n
    MatrixXd Lambda;  // n x M
    double a0 = 0.0;
    VectorXd A0;      // n
    VectorXd a;       // m
    MatrixXd A;       // m x n
    MatrixXd Sigma;   // m x M
    JumpMeasure jumps;

    double theta = 1.0;  // risk sensitivity, > 0
    double T = 1.0;      // horizon in years
    double v = 1.0;      // initial wealth

    // a_hat = a - a0*1,  A_hat = A - 1*A0'
    VectorXd a_hat() const { return a.array() - a0; }
    MatrixXd A_hat() const {
        return A - VectorXd::Ones(m) * A0.transpose();
    }

    MatrixXd sigma_sigma_t() const { return Sigma * Sigma.transpose(); }
    MatrixXd lambda_lambda_t() const { return Lambda * Lambda.transpose(); }
    MatrixXd lambda_sigma_t() const { return Lambda * Sigma.transpose(); }

    AdmissibleSet admissible_set(double delta = 1e-6, double box_bound = 1e3) const {
        return AdmissibleSet(jumps, m, delta, box_bound);
    }

    // Throws DimensionMismatch if any shape is inconsistent.
    void check_dimensions() const;
};

struct ValidationFinding {
    std::string assumption;  // short label
    bool pass = false;
    double evidence = 0.0;   // the number the decision was made on
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationFinding> findings;
    bool all_pass() const {
        for (const auto& f : findings)
            if (!f.pass) return false;
        return true;
    }
};

// Checks every standing assumption and reports numeric evidence per entry.
// Violations are reported, never thrown; only inconsistent shapes throw.
ValidationReport validate(const MarketModel& model, double pd_floor = 1e-10);

}  // namespace rsam
