#include "rsam/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rsam/errors.hpp"

namespace rsam {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// Series expansion of P(a,x), valid for x < a+1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a,x), valid for x >= a+1 (modified Lentz).
double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw DomainError("gamma_p: invalid arguments");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw DomainError("gamma_q: invalid arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

double chi2_sf(double x, double dof) { return gamma_q(0.5 * dof, 0.5 * x); }

double chi2_quantile(double p, double dof) {
    if (p <= 0.0 || p >= 1.0) throw DomainError("chi2_quantile: p must be in (0,1)");
    double lo = 0.0, hi = dof + 10.0;
    while (1.0 - chi2_sf(hi, dof) < p) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (1.0 - chi2_sf(mid, dof) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double SampleMoments::se_mean() const {
    return count > 1 ? std::sqrt(variance / static_cast<double>(count)) : 0.0;
}

SampleMoments sample_moments(const std::vector<double>& xs) {
    SampleMoments m;
    m.count = xs.size();
    if (xs.empty()) return m;
    double s = 0.0;
    for (double x : xs) s += x;
    m.mean = s / static_cast<double>(xs.size());
    double s2 = 0.0, s3 = 0.0;
    for (double x : xs) {
        const double d = x - m.mean;
        s2 += d * d;
        s3 += d * d * d;
    }
    m.variance = xs.size() > 1 ? s2 / static_cast<double>(xs.size() - 1) : 0.0;
    m.third_central = s3 / static_cast<double>(xs.size());
    return m;
}

LogMeanExp log_mean_exp(const std::vector<double>& zs) {
    LogMeanExp r;
    if (zs.empty()) return r;
    const double zmax = *std::max_element(zs.begin(), zs.end());
    double s = 0.0;
    for (double z : zs) s += std::exp(z - zmax);
    const double n = static_cast<double>(zs.size());
    const double mean_shift = s / n;
    r.log_mean = zmax + std::log(mean_shift);
    double s2 = 0.0;
    for (double z : zs) {
        const double d = std::exp(z - zmax) - mean_shift;
        s2 += d * d;
    }
    const double var_shift = zs.size() > 1 ? s2 / (n - 1.0) : 0.0;
    r.se_log = std::sqrt(var_shift / n) / mean_shift;
    return r;
}

LjungBox ljung_box(const std::vector<std::vector<double>>& segments, int lags) {
    LjungBox lb;
    lb.lags = lags;
    double denom = 0.0;
    double n_total = 0.0;
    double mean = 0.0, count = 0.0;
    for (const auto& seg : segments)
        for (double u : seg) {
            mean += u;
            count += 1.0;
        }
    if (count == 0.0) return lb;
    mean /= count;
    for (const auto& seg : segments)
        for (double u : seg) denom += (u - mean) * (u - mean);
    for (const auto& seg : segments) n_total += static_cast<double>(seg.size());
    if (denom == 0.0) return lb;

    lb.effective_n = n_total;
    double q = 0.0;
    for (int k = 1; k <= lags; ++k) {
        double num = 0.0;
        for (const auto& seg : segments) {
            const int len = static_cast<int>(seg.size());
            for (int t = 0; t + k < len; ++t)
                num += (seg[t] - mean) * (seg[t + k] - mean);
        }
        const double rho = num / denom;
        q += rho * rho / (n_total - k);
    }
    lb.statistic = n_total * (n_total + 2.0) * q;
    lb.p_value = chi2_sf(lb.statistic, lags);
    return lb;
}

GofResult chi2_gof(const std::vector<double>& observed,
                   const std::vector<double>& expected, double min_expected) {
    if (observed.size() != expected.size() || observed.empty())
        throw DomainError("chi2_gof: size mismatch");
    // Merge low-expectation cells left to right.
    std::vector<double> obs, exp;
    double o_acc = 0.0, e_acc = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        o_acc += observed[i];
        e_acc += expected[i];
        if (e_acc >= min_expected) {
            obs.push_back(o_acc);
            exp.push_back(e_acc);
            o_acc = e_acc = 0.0;
        }
    }
    if (e_acc > 0.0) {
        if (exp.empty()) {
            obs.push_back(o_acc);
            exp.push_back(e_acc);
        } else {
            obs.back() += o_acc;
            exp.back() += e_acc;
        }
    }
    GofResult r;
    r.dof = static_cast<int>(exp.size()) - 1;
    for (std::size_t i = 0; i < exp.size(); ++i) {
        const double d = obs[i] - exp[i];
        r.statistic += d * d / exp[i];
    }
    r.p_value = r.dof > 0 ? chi2_sf(r.statistic, r.dof) : 1.0;
    return r;
}

}  // namespace rsam
