#pragma once

#include <vector>

#include "swg/model.hpp"
#include "swg/series.hpp"

namespace swg {

// Yearly mean temperatures. A year with fewer non-missing days than the
// coverage threshold gets a NaN mean and is excluded from all fits; the year
// axis itself stays contiguous.
struct YearlySeries {
    int first_year = 0;
    std::vector<double> mean;
    std::vector<long> n_days;

    long n_valid() const {
        long c = 0;
        for (double v : mean)
            if (!is_missing(v)) ++c;
        return c;
    }
};

YearlySeries yearly_mean_temperature(const DailySeries& series, int min_days = 300);

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double rss = kMissing;
};

// Broken line: intercept + slope * year + slope_change * (year -
// break_year)^+ with the hinge active strictly after the break year.
struct PiecewiseFit {
    int break_year = 0;
    double intercept = 0.0;
    double slope = 0.0;
    double slope_change = 0.0;
    double rss = kMissing;
};

// Least squares on the valid years; throws InvalidParameterError with fewer
// than 2 of them.
LinearFit fit_linear(const YearlySeries& ys);

// Exhaustive break year search over every candidate leaving at least 3
// valid years on each side (ties resolved to the earliest year); throws
// InvalidParameterError when no candidate exists.
PiecewiseFit fit_piecewise(const YearlySeries& ys);

// Likelihood ratio comparison of the linear and broken-line fits under
// Gaussian errors: statistic = n * log(rss_linear / rss_piecewise),
// referred to chi-square with 1 degree of freedom. The break year is not
// penalized for having been searched over, so the test is anti-conservative;
// results are reported as-is.
struct TrendTest {
    TrendKind chosen = TrendKind::Linear;
    int break_year = 0;  // set when the broken line is chosen
    double statistic = 0.0;
    double p_value = 1.0;
    // Kolmogorov-Smirnov p-value of the linear-fit residuals against a
    // fitted normal; a descriptive check of the error model.
    double normality_p = kMissing;
    LinearFit linear;
    PiecewiseFit piecewise;
    long n_years = 0;
};

TrendTest trend_test(const YearlySeries& ys, double alpha = 0.05);

// Centred summer (Jun-Aug) and winter (Dec, Jan, Feb of the same calendar
// year) mean temperatures smoothed with a trailing window. Descriptive
// output only; no test attaches to it.
struct SeasonalMeansRow {
    int year = 0;
    double summer = kMissing;
    double winter = kMissing;
};

std::vector<SeasonalMeansRow> seasonal_windowed_means(const DailySeries& series,
                                                      int window_years = 15);

}  // namespace swg
