#pragma once

#include <cstddef>
#include <vector>

namespace rsam {

double normal_cdf(double x);

// Regularized incomplete gamma P(a,x) and Q(a,x) = 1 - P(a,x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Survival function and quantile of the chi-square distribution.
double chi2_sf(double x, double dof);
double chi2_quantile(double p, double dof);

struct SampleMoments {
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    double third_central = 0.0;
    double se_mean() const;
};
SampleMoments sample_moments(const std::vector<double>& xs);

// log(mean(exp(z))) with max-shift, plus the delta-method standard error of
// the log-mean. Returned pair: (log_mean, se_of_log_mean).
struct LogMeanExp {
    double log_mean = 0.0;
    double se_log = 0.0;  // sd(exp z)/ (sqrt(N) * mean(exp z))
};
LogMeanExp log_mean_exp(const std::vector<double>& zs);

// Ljung-Box portmanteau statistic on a series pooled over segments
// (autocovariances never cross a segment boundary).
struct LjungBox {
    double statistic = 0.0;
    int lags = 0;
    double effective_n = 0.0;
    double p_value = 1.0;
};
LjungBox ljung_box(const std::vector<std::vector<double>>& segments, int lags);

// Pearson chi-square goodness of fit for observed counts vs expected counts;
// cells with expected < min_expected are merged into their neighbour.
struct GofResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};
GofResult chi2_gof(const std::vector<double>& observed,
                   const std::vector<double>& expected,
                   double min_expected = 5.0);

}  // namespace rsam
