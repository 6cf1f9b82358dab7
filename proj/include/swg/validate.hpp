#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "swg/common.hpp"
#include "swg/series.hpp"

namespace swg {

// ---------------------------------------------------------------------------
// Elementary statistics. Univariate operations take the daily value vector
// plus the calendar; missing values (NaN) are handled as documented per
// operation.

// Empirical quantiles of the non-missing values at the given probabilities
// (linear interpolation between order statistics). Throws
// InvalidParameterError when nothing remains after missing removal.
std::vector<double> quantile_curve(std::span<const double> values,
                                   std::span<const double> probs);

// Per day-of-year moments across years. sd uses the n-1 divisor; skewness
// and kurtosis are the standardized third and fourth central moments
// (kurtosis raw, normal = 3). Days with fewer than 2 contributing years are
// missing (4 for kurtosis, 3 for skewness). Throws when the series cannot
// cover any day twice.
struct DailyMomentsResult {
    std::vector<double> mean, sd, skewness, kurtosis;
};
DailyMomentsResult daily_moments(std::span<const double> values, const Calendar& cal);

// Elementwise min and max across years per day-of-year, missing-aware.
struct ExtremesResult {
    std::vector<double> min, max;
};
ExtremesResult interannual_extremes(std::span<const double> values, const Calendar& cal);

// Pearson autocorrelation over the non-missing (x_t, x_{t+lag}) pairs.
std::vector<double> autocorr(std::span<const double> values, std::span<const int> lags);

// Histogram of maximal-run lengths. count has max_len + 1 entries: runs of
// length 1..max_len and an overflow bin counting longer runs. Missing days
// never qualify, so they break runs; runs touching the series ends count.
struct RunHistogram {
    std::vector<double> count;
    long n_qualifying_days = 0;
    long overflow_days = 0;  // days inside overflow runs (mass bookkeeping)
};

// Runs strictly above (above = true) or strictly below the threshold u.
RunHistogram exceedance_clusters(std::span<const double> values, double u, bool above,
                                 int max_len);

// Dry spells (runs of exactly zero precipitation) and wet spells (runs of
// positive precipitation).
struct SpellsResult {
    RunHistogram dry, wet;
};
SpellsResult spells(std::span<const double> precip, int max_len);

// Precipitation totals per calendar year or per calendar month instance
// (year-major order). A period with more than 10% of its in-range days
// missing is flagged; its total still sums the non-missing days.
enum class AggregationPeriod { Year, Month };
struct TotalsResult {
    std::vector<double> totals;
    std::vector<std::uint8_t> flagged;
};
TotalsResult aggregate_totals(std::span<const double> precip, const Calendar& cal,
                              AggregationPeriod period);

// Pearson correlation of the daily (precip, temp) pairs pooled across years,
// one value per calendar month; missing where a month has no variance.
std::vector<double> monthly_correlation(const DailySeries& series);

// Kernel-smoothed conditional precipitation statistics against temperature,
// with the Gaussian kernel exp(-x^2/2) and bandwidth h. Occurrence is the
// smoothed probability of a wet day at temperature y; Intensity is the
// smoothed mean precipitation of wet days at temperature y. Days missing
// either coordinate are excluded; grid points with no kernel mass (or no
// wet mass for Intensity) are missing.
enum class KernelMode { Occurrence, Intensity };
std::vector<double> kernel_conditional(const DailySeries& series, KernelMode mode,
                                       std::span<const double> ygrid, double h);

// Seasonal variant: weights also decay with the cyclic day-of-year distance
// min(|t-s|, period - |t-s|) at bandwidth h1, temperature at bandwidth h2.
std::vector<double> kernel_conditional_seasonal(const DailySeries& series, int day_of_year,
                                                KernelMode mode,
                                                std::span<const double> ygrid, double h1,
                                                double h2);

// ---------------------------------------------------------------------------
// Report assembly

struct ClusterSpec {
    enum class Rule { QuantileAbove, QuantileBelow, Absolute };
    Rule rule = Rule::QuantileAbove;
    double value = 0.95;  // quantile level, or the absolute threshold
    enum class Variable { Temp, Precip };
    Variable variable = Variable::Temp;
};

// Threshold for a cluster statistic; quantile rules resolve on the series
// the spec is applied to.
double resolve_threshold(const DailySeries& series, const ClusterSpec& spec);

struct ValidationConfig {
    std::vector<double> quantile_probs;     // default i/1000, i = 1..999
    std::vector<double> yearly_total_probs; // default i/20, i = 1..19
    int spell_max_len = 10;
    int cluster_max_len = 10;
    std::vector<double> hot_alphas = {0.95};
    std::vector<double> cold_alphas = {0.05};
    double kernel_h = 2.0;
    double kernel_h1 = 15.0;
    double kernel_h2 = 2.0;
    std::vector<int> seasonal_days = {15, 105, 196, 288};
    double ygrid_step = 1.0;
    double band_lo = 0.025;
    double band_hi = 0.975;
    // Restrict to these statistic names; empty = the full suite.
    std::vector<std::string> statistics;
};

// One validation statistic with its Monte-Carlo band. coverage per bin: 1 if
// the observed value lies inside [lo, hi], 0 if outside, -1 where undefined
// (missing observed value or band). For seasonal kernel statistics,
// extrapolated marks grid points outside the observed temperature range at
// that day of year.
struct StatisticReport {
    std::string name;
    std::vector<std::string> bins;
    std::vector<double> observed;
    Matrix per_sim;  // n_sims x n_bins
    std::vector<double> sim_mean, band_lo, band_hi;
    std::vector<int> coverage;
    std::vector<std::uint8_t> extrapolated;  // empty unless applicable
    int n_sims = 0;
    std::string error;  // non-empty when this statistic failed

    // Fraction of defined bins whose observed value lies inside the band.
    double coverage_fraction() const;
};

// Computes every selected statistic on the observed series and on each
// simulation, and wraps them in empirical bands. Thresholds and grids are
// resolved once on the observed series so that all series are measured
// against the same rulers. The provider is called once per simulation index
// (under a lock, so it may stream from a file); statistic evaluation runs in
// parallel across simulations.
std::vector<StatisticReport> build_report(const DailySeries& observed, int n_sims,
                                          const std::function<DailySeries(int)>& sim_provider,
                                          const ValidationConfig& cfg, ExecPolicy policy = {});

// Convenience overload for in-memory simulations.
std::vector<StatisticReport> build_report(const DailySeries& observed,
                                          const std::vector<DailySeries>& sims,
                                          const ValidationConfig& cfg, ExecPolicy policy = {});

}  // namespace swg
