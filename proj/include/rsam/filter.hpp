#pragma once

#include <cstdint>
#include <vector>

#include "rsam/model.hpp"
#include "rsam/sim.hpp"
#include "rsam/stats.hpp"

namespace rsam {

// Convention for Xi in the Riccati drift term. The projection form
// I - Sigma'(Sigma Sigma')^{-1} Sigma is the default; the pinv variant
// evaluates the same projection through a pseudoinverse of Sigma'Sigma.
enum class XiConvention { Projection, PinvLiteral };

struct KalmanState {
    VectorXd x_hat;  // conditional mean
    MatrixXd P;      // conditional covariance, symmetric PSD
    double t = 0.0;
};

// Split of the log-price increments into the continuous observation part
// dY1 = A_hat X dt + Sigma dW and the jump/constant part dY2 = c dt + jumps.
struct ObservationDecomposition {
    VectorXd c;    // m
    MatrixXd dY1;  // m x K
    MatrixXd dY2;  // m x K
};

// Exact decomposition of a simulated path (requires A0 = 0; throws
// PreconditionError otherwise).
ObservationDecomposition decompose_observations(const SimPath& path,
                                                const MarketModel& model);

// Operational decomposition from raw log prices: jump removal by
// thresholding |dY_i| against half the smallest atom log-jump magnitude.
// Heuristic; the truth-mode decomposition above is the reference.
ObservationDecomposition estimate_decomposition(const MatrixXd& logS,
                                                const VectorXd& times,
                                                const MarketModel& model,
                                                double threshold_scale = 0.5);

// One RK4 step of the matrix Riccati equation
//   P' = Lambda Xi Xi' Lambda' - P A_hat'(SS')^{-1} A_hat P
//        + (B - Lambda Sigma'(SS')^{-1} A_hat) P + P (.)'
// Output symmetrized; throws NonPSD if the smallest eigenvalue drops
// below -1e-8.
MatrixXd riccati_step(const MatrixXd& P, double dt, const MarketModel& model,
                      XiConvention xi = XiConvention::Projection);

// P(t) integrated offline on a fine mesh (substeps per filter step) and
// linearly interpolated. P is deterministic, so one schedule serves every
// path.
class RiccatiSchedule {
public:
    RiccatiSchedule() = default;
    RiccatiSchedule(const MarketModel& model, const MatrixXd& P0, double T,
                    double dt_fine, XiConvention xi = XiConvention::Projection);
    MatrixXd at(double t) const;
    double horizon() const { return T_; }

private:
    std::vector<MatrixXd> nodes_;
    double dt_ = 0.0;
    double T_ = 0.0;
};

// One filter update from the observation increment dY1 over dt. P advances
// by RK4 on substeps of dt/10. Requires A0 = 0.
KalmanState filter_step(const KalmanState& state, const VectorXd& dY1,
                        double dt, const MarketModel& model,
                        XiConvention xi = XiConvention::Projection);

struct FilterRun {
    MatrixXd x_hat;           // n x (K+1)
    std::vector<MatrixXd> P;  // K+1
    MatrixXd dU;              // m x K, innovation increments
};

FilterRun run_filter(const MatrixXd& dY1, const PathMesh& mesh,
                     const VectorXd& m0, const MatrixXd& P0,
                     const MarketModel& model,
                     const RiccatiSchedule* schedule = nullptr,
                     XiConvention xi = XiConvention::Projection);

// Time-varying-coefficient reformulation driven by the innovations: factor
// loading (Lambda Sigma' + P(t) A_hat')(SS')^{-1/2}, asset loading
// (SS')^{1/2}, Brownian dimension collapsed to m, jumps unchanged.
class FilteredMarket {
public:
    FilteredMarket(const MarketModel& model, RiccatiSchedule schedule);

    MatrixXd lambda_at(double t) const;      // n x m
    MarketModel snapshot(double t) const;    // frozen-coefficient model
    ModelSchedule model_schedule() const;
    const MatrixXd& asset_loading() const { return sqrtSS_; }
    const MarketModel& base() const { return base_; }

private:
    MarketModel base_;
    RiccatiSchedule schedule_;
    MatrixXd sqrtSS_;      // (SS')^{1/2}
    MatrixXd inv_sqrtSS_;  // (SS')^{-1/2}
    MatrixXd LS_;          // Lambda Sigma'
    MatrixXd Ahat_;
};

struct FilterDiagnostics {
    MatrixXd P_T;
    MatrixXd empirical_cov;    // mean of (X_T - x_hat_T)(X_T - x_hat_T)'
    double cov_rel_err = 0.0;  // Frobenius, relative to P_T
    double min_P_eig = 0.0;    // over the whole schedule
    bool psd_ok = false;
    std::vector<LjungBox> whiteness;  // per innovation component
};

// Simulates truth paths, filters each from the exact decomposition, and
// summarizes estimation consistency. whiteness_paths caps how many paths
// feed the pooled Ljung-Box statistic.
FilterDiagnostics filter_diagnostics(const MarketModel& model,
                                     const PathMesh& mesh, const VectorXd& m0,
                                     const MatrixXd& P0, long n_paths,
                                     std::uint64_t seed, int threads = 1,
                                     int lb_lags = 10,
                                     long whiteness_paths = 200);

// Full partial-information pipeline: truth simulated under P with X0 ~
// N(m0, P0), the policy evaluated on the filtered state, wealth accumulated
// from the true asset increments.
JEstimate estimate_J_partial(const MarketModel& model, const PolicyGrid& policy,
                             const VectorXd& zero_beta_h, const PathMesh& mesh,
                             const VectorXd& m0, const MatrixXd& P0,
                             const RiccatiSchedule& schedule, long n_paths,
                             std::uint64_t seed, int threads = 1);

}  // namespace rsam
