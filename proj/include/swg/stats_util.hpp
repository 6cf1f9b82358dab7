#pragma once

#include <span>
#include <vector>

#include "swg/common.hpp"

namespace swg {

inline constexpr double kLog2Pi = 1.8378770664093454836;

// log(sum(exp(x))) guarding against overflow; returns -inf for an empty span
// or when every element is -inf.
double log_sum_exp(std::span<const double> x);
double log_add_exp(double a, double b);

// Log density of N(mean, var) at x. var must be positive.
double normal_log_pdf(double x, double mean, double var);

// Standard normal CDF.
double normal_cdf(double z);

// Upper regularized incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
double gamma_q(double a, double x);

// Survival function of the chi-square distribution with df degrees of
// freedom: P(X > x).
double chi2_sf(double x, int df);

// Asymptotic p-value of the one-sample Kolmogorov-Smirnov statistic d for
// sample size n, with the Stephens small-sample correction.
double kolmogorov_p(double d, long n);

// Quantile of the values in x at probability p using linear interpolation of
// order statistics (the convention where the sample minimum is p=0 and the
// maximum is p=1). x need not be sorted; NaNs must be removed by the caller.
double quantile(std::vector<double> x, double p);
// Same but x is already sorted ascending and is not copied.
double quantile_sorted(std::span<const double> x, double p);

// Mean / sd / skewness / kurtosis of the non-missing values. sd uses the
// n-1 divisor; skewness and kurtosis are the standardized third and fourth
// central moments with the n divisor (kurtosis is raw, normal = 3). Fewer
// than 2 (respectively 3, 4) values yields NaN for the affected moments.
struct Moments {
    double mean = kMissing;
    double sd = kMissing;
    double skewness = kMissing;
    double kurtosis = kMissing;
    long n = 0;
};
Moments moments(std::span<const double> x);

// Deterministic sum: always accumulates in index order, independent of
// threading. Used as the reduction primitive for the parallel kernels.
double ordered_sum(std::span<const double> x);

}  // namespace swg
