#pragma once

#include <string>
#include <vector>

#include "swg/common.hpp"

namespace swg {

// Time axis of a daily series. Years are fixed at 365 days: February 29 is
// dropped on ingest so that day-of-year is a stable index 1..365. Day indices
// t are 1-based and run over the whole series.
struct Calendar {
    int first_year = 0;
    int n_years = 0;
    int period = 365;

    long n_days() const { return static_cast<long>(n_years) * period; }
    int day_of_year(long t) const { return static_cast<int>((t - 1) % period) + 1; }
    int year_index(long t) const { return static_cast<int>((t - 1) / period); }
    int year_of(long t) const { return first_year + year_index(t); }
    // Midpoint of the year range; used to centre the time regressor so the
    // optimiser does not see calendar-year magnitudes.
    double reference_year() const { return first_year + (n_years - 1) / 2.0; }
};

// One day of (precipitation, temperature), either coordinate possibly missing.
struct Observation {
    double precip = kMissing;
    double temp = kMissing;
    long t = 1;
    int day_of_year = 1;
};

// Per-day provenance flags written by ingestion, one char per coordinate:
// '.' valid, 'm' missing in source, 's' suspect and treated as missing,
// 'x' malformed or out of range and treated as missing.
struct DayFlags {
    char precip = '.';
    char temp = '.';
};

// A cleaned daily bivariate series on a 365-day calendar. Missing values are
// NaN. Precipitation below the dryness threshold has already been set to
// exactly zero, so precip[t] == 0 is the dry event. The series starts on day
// 1 of calendar.first_year but may end mid-year (simulated series in
// particular can have any length).
struct DailySeries {
    std::string station;
    Calendar calendar;
    std::vector<double> precip;
    std::vector<double> temp;
    std::vector<DayFlags> flags;
    double dryness_threshold = 0.1;

    long n_days() const { return static_cast<long>(precip.size()); }

    Observation at(long t) const {
        Observation o;
        o.precip = precip[static_cast<size_t>(t - 1)];
        o.temp = temp[static_cast<size_t>(t - 1)];
        o.t = t;
        o.day_of_year = calendar.day_of_year(t);
        return o;
    }

    // Days with at least one observed coordinate; the sample size used for
    // model selection penalties.
    long n_observed() const {
        long n = 0;
        for (size_t i = 0; i < precip.size(); ++i)
            if (!is_missing(precip[i]) || !is_missing(temp[i])) ++n;
        return n;
    }
};

// Month arithmetic on the fixed 365-day year (no leap days).
inline constexpr int kMonthLengths[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};

inline int month_of_day_of_year(int doy) {
    int m = 0, acc = 0;
    while (m < 12 && doy > acc + kMonthLengths[m]) acc += kMonthLengths[m++];
    return m + 1;
}

// 1-based day of year for a (month, day) pair of a non-leap year; returns 0
// for an invalid pair (including February 29).
inline int day_of_year_from_month_day(int month, int day) {
    if (month < 1 || month > 12 || day < 1 || day > kMonthLengths[month - 1]) return 0;
    int acc = 0;
    for (int m = 0; m < month - 1; ++m) acc += kMonthLengths[m];
    return acc + day;
}

}  // namespace swg
