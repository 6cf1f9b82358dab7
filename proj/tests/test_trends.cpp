#include <cmath>
#include <vector>

#include "doctest.h"
#include "swg/rng.hpp"
#include "swg/stats_util.hpp"
#include "swg/trends.hpp"

using namespace swg;

namespace {

// A daily series whose temperature is constant within each year; the yearly
// mean then equals that constant exactly.
DailySeries series_from_yearly(int first_year, const std::vector<double>& yearly) {
    DailySeries s;
    s.calendar = Calendar{first_year, static_cast<int>(yearly.size())};
    const long n = s.calendar.n_days();
    s.precip.assign(n, 0.0);
    s.temp.resize(n);
    s.flags.resize(n);
    for (long t = 0; t < n; ++t) s.temp[t] = yearly[static_cast<size_t>(t / 365)];
    return s;
}

YearlySeries yearly(int first_year, const std::vector<double>& mean) {
    YearlySeries ys;
    ys.first_year = first_year;
    ys.mean = mean;
    ys.n_days.assign(mean.size(), 365);
    return ys;
}

}  // namespace

TEST_CASE("yearly means honour the coverage threshold") {
    std::vector<double> vals(5, 10.0);
    DailySeries s = series_from_yearly(2000, vals);
    // Year 1 (index 1): knock out 70 days, leaving 295 < 300.
    for (long t = 365; t < 365 + 70; ++t) s.temp[t] = kMissing;
    // Year 2: knock out 65 days, leaving exactly 300.
    for (long t = 2 * 365; t < 2 * 365 + 65; ++t) s.temp[t] = kMissing;
    const YearlySeries ys = yearly_mean_temperature(s);
    REQUIRE(ys.mean.size() == 5);
    CHECK(ys.first_year == 2000);
    CHECK(ys.mean[0] == doctest::Approx(10.0));
    CHECK(is_missing(ys.mean[1]));
    CHECK(ys.mean[2] == doctest::Approx(10.0));
    CHECK(ys.n_days[1] == 295);
    CHECK(ys.n_valid() == 4);

    // The mean is over the observed days only.
    DailySeries s2 = series_from_yearly(2000, {4.0});
    for (long t = 0; t < 100; ++t) s2.temp[t] = 8.0;
    const YearlySeries ys2 = yearly_mean_temperature(s2);
    CHECK(ys2.mean[0] == doctest::Approx((100.0 * 8.0 + 265.0 * 4.0) / 365.0).epsilon(1e-12));
}

TEST_CASE("noiseless line is recovered exactly") {
    std::vector<double> mean(30);
    for (int y = 0; y < 30; ++y) mean[y] = 5.0 + 0.03 * (1970 + y);
    const YearlySeries ys = yearly(1970, mean);
    const LinearFit f = fit_linear(ys);
    CHECK(f.slope == doctest::Approx(0.03).epsilon(1e-10));
    CHECK(f.intercept == doctest::Approx(5.0).epsilon(1e-6));
    CHECK(f.rss == doctest::Approx(0.0).epsilon(1e-12));

    // Missing years are simply left out.
    YearlySeries gaps = ys;
    gaps.mean[3] = kMissing;
    gaps.mean[17] = kMissing;
    const LinearFit g = fit_linear(gaps);
    CHECK(g.slope == doctest::Approx(0.03).epsilon(1e-10));

    YearlySeries tiny = yearly(1970, {1.0});
    CHECK_THROWS_AS(fit_linear(tiny), InvalidParameterError);
}

TEST_CASE("noiseless broken line is recovered exactly, break included") {
    // Flat at 8.0 until 1990, then rising by 0.05 per year.
    std::vector<double> mean(41);
    for (int y = 0; y < 41; ++y) {
        const int year = 1970 + y;
        mean[y] = 8.0 + 0.05 * std::max(0, year - 1990);
    }
    const YearlySeries ys = yearly(1970, mean);
    const PiecewiseFit f = fit_piecewise(ys);
    CHECK(f.break_year == 1990);
    CHECK(f.slope == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(f.slope_change == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(f.rss == doctest::Approx(0.0).epsilon(1e-10));

    // With a little noise on top the test still prefers the broken line at
    // a tiny p-value and finds the break. (Exactly zero residuals are
    // rejected by trend_test as degenerate, hence the noise.)
    RngStream rng(7003, 0);
    std::vector<double> noisy = mean;
    for (double& v : noisy) v += rng.normal(0.0, 0.05);
    const TrendTest t = trend_test(yearly(1970, noisy));
    CHECK(t.chosen == TrendKind::PiecewiseLinear);
    CHECK(std::abs(t.break_year - 1990) <= 1);
    CHECK(t.p_value < 1e-6);

    // Too few years for any admissible break.
    YearlySeries tiny = yearly(1970, {1.0, 2.0, 3.0, 4.0, 5.0});
    CHECK_THROWS_AS(fit_piecewise(tiny), InvalidParameterError);
}

TEST_CASE("flat series: degenerate fits resolve to the earliest break") {
    const YearlySeries ys = yearly(1950, std::vector<double>(20, 3.25));
    const PiecewiseFit f = fit_piecewise(ys);
    // Every candidate gives rss == 0; ties resolve to the earliest
    // candidate, which must leave 3 valid years strictly on each side.
    CHECK(f.break_year == 1952);
    CHECK(f.slope == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(f.slope_change == doctest::Approx(0.0).epsilon(1e-12));
    // Exactly zero residuals make the likelihood ratio meaningless; the
    // test refuses them instead of dividing by zero.
    CHECK_THROWS_AS(trend_test(ys), InvalidParameterError);
}

TEST_CASE("test statistic recomputes from the reported fits") {
    RngStream rng(7001, 0);
    std::vector<double> mean(40);
    for (int y = 0; y < 40; ++y) mean[y] = 6.0 + 0.01 * y + rng.normal(0.0, 0.4);
    const YearlySeries ys = yearly(1960, mean);
    const TrendTest t = trend_test(ys);
    CHECK(t.n_years == 40);
    const double stat = 40.0 * std::log(t.linear.rss / t.piecewise.rss);
    CHECK(t.statistic == doctest::Approx(stat).epsilon(1e-10));
    CHECK(t.p_value == doctest::Approx(chi2_sf(stat, 1)).epsilon(1e-10));
    CHECK((t.chosen == TrendKind::PiecewiseLinear) == (t.p_value < 0.05));
    // The piecewise fit never has larger rss than the linear one: the
    // linear model is nested in it.
    CHECK(t.piecewise.rss <= t.linear.rss + 1e-9);
}

TEST_CASE("residual normality check separates normal from heavy-tailed errors") {
    RngStream rng(7002, 0);
    std::vector<double> normal_mean(50), heavy_mean(50);
    for (int y = 0; y < 50; ++y) {
        normal_mean[y] = 2.0 + 0.02 * y + rng.normal(0.0, 0.5);
        // Scale mixture: occasional wild years.
        const double sd = rng.uniform() < 0.15 ? 4.0 : 0.25;
        heavy_mean[y] = 2.0 + 0.02 * y + rng.normal(0.0, sd);
    }
    const TrendTest tn = trend_test(yearly(1950, normal_mean));
    const TrendTest th = trend_test(yearly(1950, heavy_mean));
    CHECK(tn.normality_p > 0.05);
    CHECK(th.normality_p < 0.05);
}

TEST_CASE("selection calibration on noisy linear and broken-line truths") {
    // The break search is not penalized, so under a pure linear truth the
    // broken line is chosen far more often than the nominal 5%: with these
    // settings the rate sits near 28%. Under a genuine hinge of 0.05 per
    // year against noise 0.3 the break year lands within 3 years about
    // two thirds of the time. Both rates are frozen here as regression
    // bands; the companion acceptance checks document the nominal targets.
    const int reps = 500;
    int rejections = 0, breaks_close = 0;
    for (int rep = 0; rep < reps; ++rep) {
        RngStream rng(7100, static_cast<std::uint64_t>(rep));
        std::vector<double> pure(61), hinged(61);
        for (int y = 0; y < 61; ++y) {
            const int year = 1950 + y;
            pure[y] = 10.0 + 0.01 * year + rng.normal(0.0, 0.3);
            hinged[y] = 10.0 + 0.05 * std::max(0, year - 1980) + rng.normal(0.0, 0.3);
        }
        if (trend_test(yearly(1950, pure)).chosen == TrendKind::PiecewiseLinear) ++rejections;
        const TrendTest th = trend_test(yearly(1950, hinged));
        if (th.chosen == TrendKind::PiecewiseLinear && std::abs(th.break_year - 1980) <= 3)
            ++breaks_close;
    }
    const double type1 = static_cast<double>(rejections) / reps;
    const double close = static_cast<double>(breaks_close) / reps;
    CHECK(type1 > 0.22);
    CHECK(type1 < 0.34);
    CHECK(close > 0.58);
    CHECK(close < 0.72);
}

TEST_CASE("windowed seasonal means are centred and missing-aware") {
    // Constant temperature: summer and winter means are equal and centring
    // drives both columns to zero.
    DailySeries s = series_from_yearly(1980, std::vector<double>(20, 7.5));
    const auto rows = seasonal_windowed_means(s, 5);
    REQUIRE(!rows.empty());
    for (const auto& r : rows) {
        if (!is_missing(r.summer)) CHECK(r.summer == doctest::Approx(0.0).epsilon(1e-9));
        if (!is_missing(r.winter)) CHECK(r.winter == doctest::Approx(0.0).epsilon(1e-9));
    }
    // Rows carry consecutive years within the series range.
    for (size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].year == rows[i - 1].year + 1);
    CHECK(rows.front().year >= 1980);
    CHECK(rows.back().year <= 1999);
}
