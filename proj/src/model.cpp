#include "rsam/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "rsam/errors.hpp"
#include "rsam/linalg.hpp"

namespace rsam {

void MarketModel::check_dimensions() const {
    auto fail = [](const std::string& what) { throw DimensionMismatch(what); };
    if (n <= 0 || m <= 0 || M <= 0) fail("n, m, M must be positive");
    if (b.size() != n) fail("b must have length n");
    if (B.rows() != n || B.cols() != n) fail("B must be n x n");
    if (Lambda.rows() != n || Lambda.cols() != M) fail("Lambda must be n x M");
    if (A0.size() != n) fail("A0 must have length n");
    if (a.size() != m) fail("a must have length m");
    if (A.rows() != m || A.cols() != n) fail("A must be m x n");
    if (Sigma.rows() != m || Sigma.cols() != M) fail("Sigma must be m x M");
    for (const auto& atom : jumps.atoms)
        if (atom.gamma.size() != m) fail("jump atom marks must have length m");
    if (theta <= 0.0) fail("theta must be > 0");
    if (T <= 0.0) fail("T must be > 0");
    if (v <= 0.0) fail("v must be > 0");
}

ValidationReport validate(const MarketModel& model, double pd_floor) {
    model.check_dimensions();
    ValidationReport rep;

    auto add = [&rep](const std::string& name, bool pass, double evidence,
                      const std::string& detail) {
        rep.findings.push_back({name, pass, evidence, detail});
    };

    {
        const double ev = min_eigenvalue(model.sigma_sigma_t());
        add("SigmaSigmaT_positive_definite", ev > pd_floor, ev,
            "smallest eigenvalue of Sigma*Sigma'");
    }
    {
        const double ev = min_eigenvalue(model.lambda_lambda_t());
        add("LambdaLambdaT_positive_definite", ev > pd_floor, ev,
            "smallest eigenvalue of Lambda*Lambda'");
    }
    {
        const int r = numerical_rank(model.A_hat());
        add("A_hat_full_rank", r == model.n, static_cast<double>(r),
            "numerical rank of A_hat, required n");
    }
    add("more_assets_than_factors", model.m > model.n,
        static_cast<double>(model.m - model.n), "m - n must be positive");

    // Jump support: each asset needs at least one downward and one upward
    // mark, and every mark must satisfy gamma_i > -1.
    for (int i = 0; i < model.m; ++i) {
        double lo = 0.0, hi = 0.0;
        bool above_bankruptcy = true;
        for (const auto& atom : model.jumps.atoms) {
            lo = std::min(lo, atom.gamma(i));
            hi = std::max(hi, atom.gamma(i));
            if (atom.gamma(i) <= -1.0) above_bankruptcy = false;
        }
        std::ostringstream name;
        name << "jump_support_asset_" << (i + 1);
        const bool two_sided = model.jumps.empty() ? false : (lo < 0.0 && hi > 0.0);
        if (model.jumps.empty()) {
            add(name.str(), true, 0.0, "no jump atoms (pure diffusion model)");
        } else {
            std::ostringstream det;
            det << "mark range [" << lo << ", " << hi << "] must straddle 0";
            add(name.str(), two_sided && above_bankruptcy, hi - lo, det.str());
        }
    }
    {
        const double s2 = model.jumps.second_moment_z0();
        add("jump_second_moment_finite", std::isfinite(s2), s2,
            "sum of weight*|gamma|^2 over compensated atoms");
    }
    for (const auto& atom : model.jumps.atoms) {
        if (atom.weight <= 0.0) {
            add("jump_weights_positive", false, atom.weight,
                "atom weights must be > 0");
            break;
        }
    }

    return rep;
}

}  // namespace rsam
