#include "swg/validate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>

#include "swg/stats_util.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace swg {

std::vector<double> quantile_curve(std::span<const double> values,
                                   std::span<const double> probs) {
    std::vector<double> x;
    x.reserve(values.size());
    for (double v : values)
        if (!is_missing(v)) x.push_back(v);
    if (x.empty())
        throw InvalidParameterError("quantile_curve: no values left after missing removal");
    std::sort(x.begin(), x.end());
    std::vector<double> out(probs.size());
    for (size_t i = 0; i < probs.size(); ++i) out[i] = quantile_sorted(x, probs[i]);
    return out;
}

DailyMomentsResult daily_moments(std::span<const double> values, const Calendar& cal) {
    const int P = cal.period;
    if (static_cast<long>(values.size()) <= P)
        throw InvalidParameterError("daily_moments: need more than one year of data");
    DailyMomentsResult r;
    r.mean.assign(P, kMissing);
    r.sd.assign(P, kMissing);
    r.skewness.assign(P, kMissing);
    r.kurtosis.assign(P, kMissing);
    std::vector<double> vals;
    for (int d = 0; d < P; ++d) {
        vals.clear();
        for (size_t t = static_cast<size_t>(d); t < values.size(); t += P)
            if (!is_missing(values[t])) vals.push_back(values[t]);
        if (vals.size() < 2) continue;
        const Moments m = moments(vals);
        r.mean[d] = m.mean;
        r.sd[d] = m.sd;
        r.skewness[d] = m.skewness;
        r.kurtosis[d] = m.kurtosis;
    }
    return r;
}

ExtremesResult interannual_extremes(std::span<const double> values, const Calendar& cal) {
    const int P = cal.period;
    if (values.empty()) throw InvalidParameterError("interannual_extremes: empty series");
    ExtremesResult r;
    r.min.assign(P, kMissing);
    r.max.assign(P, kMissing);
    for (int d = 0; d < P; ++d) {
        for (size_t t = static_cast<size_t>(d); t < values.size(); t += P) {
            const double v = values[t];
            if (is_missing(v)) continue;
            if (is_missing(r.min[d]) || v < r.min[d]) r.min[d] = v;
            if (is_missing(r.max[d]) || v > r.max[d]) r.max[d] = v;
        }
    }
    return r;
}

std::vector<double> autocorr(std::span<const double> values, std::span<const int> lags) {
    int max_lag = 0;
    for (int l : lags) {
        if (l < 1) throw InvalidParameterError("autocorr: lags must be >= 1");
        max_lag = std::max(max_lag, l);
    }
    if (static_cast<long>(values.size()) <= max_lag + 1)
        throw InvalidParameterError("autocorr: series shorter than the largest lag");
    std::vector<double> out(lags.size(), kMissing);
    for (size_t li = 0; li < lags.size(); ++li) {
        const int lag = lags[li];
        double sx = 0, sy = 0;
        long n = 0;
        for (size_t t = 0; t + lag < values.size(); ++t) {
            const double a = values[t], b = values[t + lag];
            if (is_missing(a) || is_missing(b)) continue;
            sx += a;
            sy += b;
            ++n;
        }
        if (n < 2) continue;
        const double mx = sx / n, my = sy / n;
        double sxx = 0, syy = 0, sxy = 0;
        for (size_t t = 0; t + lag < values.size(); ++t) {
            const double a = values[t], b = values[t + lag];
            if (is_missing(a) || is_missing(b)) continue;
            sxy += (a - mx) * (b - my);
            sxx += (a - mx) * (a - mx);
            syy += (b - my) * (b - my);
        }
        if (sxx > 0.0 && syy > 0.0) out[li] = sxy / std::sqrt(sxx * syy);
    }
    return out;
}

namespace {

RunHistogram run_histogram(std::span<const double> values, int max_len,
                           const std::function<bool(double)>& qualifies) {
    if (max_len < 1) throw InvalidParameterError("run histogram: max_len must be >= 1");
    RunHistogram h;
    h.count.assign(static_cast<size_t>(max_len) + 1, 0.0);
    long run = 0;
    auto close_run = [&]() {
        if (run == 0) return;
        if (run <= max_len)
            h.count[static_cast<size_t>(run - 1)] += 1.0;
        else {
            h.count[static_cast<size_t>(max_len)] += 1.0;
            h.overflow_days += run;
        }
        h.n_qualifying_days += run;
        run = 0;
    };
    for (double v : values) {
        if (!is_missing(v) && qualifies(v))
            ++run;
        else
            close_run();
    }
    close_run();
    return h;
}

}  // namespace

RunHistogram exceedance_clusters(std::span<const double> values, double u, bool above,
                                 int max_len) {
    return run_histogram(values, max_len,
                         [&](double v) { return above ? v > u : v < u; });
}

SpellsResult spells(std::span<const double> precip, int max_len) {
    SpellsResult r;
    r.dry = run_histogram(precip, max_len, [](double v) { return v == 0.0; });
    r.wet = run_histogram(precip, max_len, [](double v) { return v > 0.0; });
    return r;
}

TotalsResult aggregate_totals(std::span<const double> precip, const Calendar& cal,
                              AggregationPeriod period) {
    const long n = static_cast<long>(precip.size());
    TotalsResult r;
    if (n == 0) return r;
    const int Y = cal.year_index(n) + 1;
    const int n_bins = period == AggregationPeriod::Year ? Y : Y * 12;
    r.totals.assign(n_bins, 0.0);
    r.flagged.assign(n_bins, 0);
    std::vector<long> in_range(n_bins, 0), missing(n_bins, 0);
    for (long t = 1; t <= n; ++t) {
        const int y = cal.year_index(t);
        const int bin = period == AggregationPeriod::Year
                            ? y
                            : y * 12 + month_of_day_of_year(cal.day_of_year(t)) - 1;
        ++in_range[bin];
        const double v = precip[static_cast<size_t>(t - 1)];
        if (is_missing(v))
            ++missing[bin];
        else
            r.totals[static_cast<size_t>(bin)] += v;
    }
    for (int b = 0; b < n_bins; ++b) {
        if (in_range[b] == 0) {
            r.totals[static_cast<size_t>(b)] = kMissing;
            r.flagged[static_cast<size_t>(b)] = 1;
        } else if (missing[b] * 10 > in_range[b]) {
            r.flagged[static_cast<size_t>(b)] = 1;
            if (missing[b] == in_range[b]) r.totals[static_cast<size_t>(b)] = kMissing;
        }
    }
    return r;
}

std::vector<double> monthly_correlation(const DailySeries& series) {
    const long n = series.n_days();
    std::vector<double> sx(12, 0), sy(12, 0);
    std::vector<long> cnt(12, 0);
    for (long t = 1; t <= n; ++t) {
        const double p = series.precip[static_cast<size_t>(t - 1)];
        const double y = series.temp[static_cast<size_t>(t - 1)];
        if (is_missing(p) || is_missing(y)) continue;
        const int m = month_of_day_of_year(series.calendar.day_of_year(t)) - 1;
        sx[m] += p;
        sy[m] += y;
        ++cnt[m];
    }
    std::vector<double> mx(12, 0), my(12, 0), sxx(12, 0), syy(12, 0), sxy(12, 0);
    for (int m = 0; m < 12; ++m)
        if (cnt[m] >= 2) {
            mx[m] = sx[m] / cnt[m];
            my[m] = sy[m] / cnt[m];
        }
    for (long t = 1; t <= n; ++t) {
        const double p = series.precip[static_cast<size_t>(t - 1)];
        const double y = series.temp[static_cast<size_t>(t - 1)];
        if (is_missing(p) || is_missing(y)) continue;
        const int m = month_of_day_of_year(series.calendar.day_of_year(t)) - 1;
        if (cnt[m] < 2) continue;
        sxy[m] += (p - mx[m]) * (y - my[m]);
        sxx[m] += (p - mx[m]) * (p - mx[m]);
        syy[m] += (y - my[m]) * (y - my[m]);
    }
    std::vector<double> out(12, kMissing);
    for (int m = 0; m < 12; ++m)
        if (cnt[m] >= 2 && sxx[m] > 0.0 && syy[m] > 0.0)
            out[m] = sxy[m] / std::sqrt(sxx[m] * syy[m]);
    return out;
}

std::vector<double> kernel_conditional(const DailySeries& series, KernelMode mode,
                                       std::span<const double> ygrid, double h) {
    if (!(h > 0.0)) throw InvalidParameterError("kernel_conditional: bandwidth must be positive");
    const long n = series.n_days();
    std::vector<double> out(ygrid.size(), kMissing);
    for (size_t g = 0; g < ygrid.size(); ++g) {
        const double y0 = ygrid[g];
        double sw = 0.0, swet = 0.0, samt = 0.0;
        for (long t = 0; t < n; ++t) {
            const double p = series.precip[static_cast<size_t>(t)];
            const double y = series.temp[static_cast<size_t>(t)];
            if (is_missing(p) || is_missing(y)) continue;
            const double z = (y - y0) / h;
            const double w = std::exp(-0.5 * z * z);
            sw += w;
            if (p > 0.0) {
                swet += w;
                samt += w * p;
            }
        }
        if (mode == KernelMode::Occurrence) {
            if (sw > 0.0) out[g] = swet / sw;
        } else {
            if (swet > 0.0) out[g] = samt / swet;
        }
    }
    return out;
}

std::vector<double> kernel_conditional_seasonal(const DailySeries& series, int day_of_year,
                                                KernelMode mode,
                                                std::span<const double> ygrid, double h1,
                                                double h2) {
    if (!(h1 > 0.0) || !(h2 > 0.0))
        throw InvalidParameterError("kernel_conditional_seasonal: bandwidths must be positive");
    const int P = series.calendar.period;
    if (day_of_year < 1 || day_of_year > P)
        throw InvalidParameterError("kernel_conditional_seasonal: day of year out of range");
    const long n = series.n_days();

    // Time weights depend only on the cyclic day-of-year distance.
    std::vector<double> wt(P);
    for (int s = 1; s <= P; ++s) {
        const double d0 = std::fabs(static_cast<double>(day_of_year - s));
        const double d = std::min(d0, P - d0);
        const double z = d / h1;
        wt[s - 1] = std::exp(-0.5 * z * z);
    }

    std::vector<double> out(ygrid.size(), kMissing);
    for (size_t g = 0; g < ygrid.size(); ++g) {
        const double y0 = ygrid[g];
        double sw = 0.0, swet = 0.0, samt = 0.0;
        for (long t = 0; t < n; ++t) {
            const double p = series.precip[static_cast<size_t>(t)];
            const double y = series.temp[static_cast<size_t>(t)];
            if (is_missing(p) || is_missing(y)) continue;
            const double w1 = wt[static_cast<size_t>(series.calendar.day_of_year(t + 1) - 1)];
            if (w1 < 1e-12) continue;
            const double z = (y - y0) / h2;
            const double w = w1 * std::exp(-0.5 * z * z);
            sw += w;
            if (p > 0.0) {
                swet += w;
                samt += w * p;
            }
        }
        if (mode == KernelMode::Occurrence) {
            if (sw > 0.0) out[g] = swet / sw;
        } else {
            if (swet > 0.0) out[g] = samt / swet;
        }
    }
    return out;
}

double resolve_threshold(const DailySeries& series, const ClusterSpec& spec) {
    if (spec.rule == ClusterSpec::Rule::Absolute) return spec.value;
    if (!(spec.value > 0.0 && spec.value < 1.0))
        throw InvalidParameterError("cluster threshold quantile must lie in (0,1)");
    const std::vector<double>& src =
        spec.variable == ClusterSpec::Variable::Temp ? series.temp : series.precip;
    std::vector<double> x;
    for (double v : src)
        if (!is_missing(v)) x.push_back(v);
    if (x.empty()) throw InvalidParameterError("cluster threshold: series has no data");
    return quantile(std::move(x), spec.value);
}

// ---------------------------------------------------------------------------
// Report assembly

double StatisticReport::coverage_fraction() const {
    long defined = 0, covered = 0;
    for (int c : coverage) {
        if (c < 0) continue;
        ++defined;
        covered += c;
    }
    return defined > 0 ? static_cast<double>(covered) / defined : kMissing;
}

namespace {

enum class StatKind {
    TempQuantiles,
    PrecipQuantilesWet,
    TempDailyMean,
    TempDailySd,
    TempDailySkewness,
    TempDailyKurtosis,
    TempDailyMin,
    TempDailyMax,
    PrecipDailyMean,
    TempAutocorr,
    HotClusters,
    ColdClusters,
    DrySpells,
    WetSpells,
    YearlyTotalQuantiles,
    MonthlyTotalMean,
    MonthlyCorrelation,
    KernelOccurrence,
    KernelIntensity,
    SeasonalOccurrence,
    SeasonalIntensity,
};

struct PlanItem {
    std::string name;
    StatKind kind;
    double threshold = 0.0;   // resolved cluster threshold
    int seasonal_day = 0;     // day of year for the seasonal kernels
    std::vector<std::string> bins;
    std::vector<std::uint8_t> extrapolated;
};

struct Plan {
    std::vector<PlanItem> items;
    std::vector<double> qprobs, yprobs;
    std::vector<double> ygrid;
    int spell_max_len = 10;
    int cluster_max_len = 10;
    double h = 2.0, h1 = 15.0, h2 = 2.0;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::vector<std::string> day_bins(int period) {
    std::vector<std::string> b(static_cast<size_t>(period));
    for (int d = 0; d < period; ++d) b[static_cast<size_t>(d)] = std::to_string(d + 1);
    return b;
}

std::vector<std::string> length_bins(int max_len) {
    std::vector<std::string> b;
    for (int l = 1; l <= max_len; ++l) b.push_back(std::to_string(l));
    b.push_back(std::to_string(max_len) + "+");
    return b;
}

std::vector<std::string> prob_bins(const std::vector<double>& probs) {
    std::vector<std::string> b;
    b.reserve(probs.size());
    for (double p : probs) b.push_back(fmt("p%.3f", p));
    return b;
}

std::vector<std::string> grid_bins(const std::vector<double>& grid) {
    std::vector<std::string> b;
    b.reserve(grid.size());
    for (double y : grid) b.push_back(fmt("%.6g", y));
    return b;
}

bool wanted(const ValidationConfig& cfg, const std::string& name) {
    if (cfg.statistics.empty()) return true;
    return std::find(cfg.statistics.begin(), cfg.statistics.end(), name) !=
           cfg.statistics.end();
}

Plan build_plan(const DailySeries& observed, const ValidationConfig& cfg) {
    Plan plan;
    plan.spell_max_len = cfg.spell_max_len;
    plan.cluster_max_len = cfg.cluster_max_len;
    plan.h = cfg.kernel_h;
    plan.h1 = cfg.kernel_h1;
    plan.h2 = cfg.kernel_h2;

    plan.qprobs = cfg.quantile_probs;
    if (plan.qprobs.empty())
        for (int i = 1; i <= 999; ++i) plan.qprobs.push_back(i / 1000.0);
    plan.yprobs = cfg.yearly_total_probs;
    if (plan.yprobs.empty())
        for (int i = 1; i <= 19; ++i) plan.yprobs.push_back(i / 20.0);

    // Temperature grid resolved on the observed series.
    {
        double lo = kMissing, hi = kMissing;
        for (double v : observed.temp) {
            if (is_missing(v)) continue;
            if (is_missing(lo) || v < lo) lo = v;
            if (is_missing(hi) || v > hi) hi = v;
        }
        if (!is_missing(lo)) {
            const double step = cfg.ygrid_step > 0.0 ? cfg.ygrid_step : 1.0;
            for (double y = std::floor(lo); y <= std::ceil(hi) + 1e-9; y += step)
                plan.ygrid.push_back(y);
        }
    }

    const int P = observed.calendar.period;
    auto add = [&](std::string name, StatKind kind, std::vector<std::string> bins) {
        if (!wanted(cfg, name)) return static_cast<PlanItem*>(nullptr);
        plan.items.push_back(PlanItem{std::move(name), kind, 0.0, 0, std::move(bins), {}});
        return &plan.items.back();
    };

    add("temp_quantiles", StatKind::TempQuantiles, prob_bins(plan.qprobs));
    add("precip_quantiles_wet", StatKind::PrecipQuantilesWet, prob_bins(plan.qprobs));
    add("temp_daily_mean", StatKind::TempDailyMean, day_bins(P));
    add("temp_daily_sd", StatKind::TempDailySd, day_bins(P));
    add("temp_daily_skewness", StatKind::TempDailySkewness, day_bins(P));
    add("temp_daily_kurtosis", StatKind::TempDailyKurtosis, day_bins(P));
    add("temp_daily_min", StatKind::TempDailyMin, day_bins(P));
    add("temp_daily_max", StatKind::TempDailyMax, day_bins(P));
    add("precip_daily_mean", StatKind::PrecipDailyMean, day_bins(P));
    add("temp_autocorr", StatKind::TempAutocorr, {"lag1", "lag2", "lag3"});

    for (double a : cfg.hot_alphas) {
        const std::string name = "hot_clusters_q" + fmt("%g", a * 100.0);
        if (!wanted(cfg, name)) continue;
        ClusterSpec cs{ClusterSpec::Rule::QuantileAbove, a, ClusterSpec::Variable::Temp};
        PlanItem item{name, StatKind::HotClusters, resolve_threshold(observed, cs), 0,
                      length_bins(cfg.cluster_max_len), {}};
        plan.items.push_back(std::move(item));
    }
    for (double a : cfg.cold_alphas) {
        const std::string name = "cold_clusters_q" + fmt("%g", a * 100.0);
        if (!wanted(cfg, name)) continue;
        ClusterSpec cs{ClusterSpec::Rule::QuantileBelow, a, ClusterSpec::Variable::Temp};
        PlanItem item{name, StatKind::ColdClusters, resolve_threshold(observed, cs), 0,
                      length_bins(cfg.cluster_max_len), {}};
        plan.items.push_back(std::move(item));
    }

    add("dry_spells", StatKind::DrySpells, length_bins(cfg.spell_max_len));
    add("wet_spells", StatKind::WetSpells, length_bins(cfg.spell_max_len));
    add("yearly_precip_total_quantiles", StatKind::YearlyTotalQuantiles,
        prob_bins(plan.yprobs));
    {
        std::vector<std::string> mb;
        for (int m = 1; m <= 12; ++m) mb.push_back(std::to_string(m));
        add("monthly_precip_total_mean", StatKind::MonthlyTotalMean, mb);
        add("monthly_precip_temp_corr", StatKind::MonthlyCorrelation, std::move(mb));
    }

    if (!plan.ygrid.empty()) {
        add("precip_occurrence_vs_temp", StatKind::KernelOccurrence, grid_bins(plan.ygrid));
        add("precip_intensity_vs_temp", StatKind::KernelIntensity, grid_bins(plan.ygrid));
        for (int d : cfg.seasonal_days) {
            if (d < 1 || d > P)
                throw InvalidParameterError("validation: seasonal day of year out of range");
            // Grid points outside the observed temperature range at this day
            // of year are marked as extrapolation.
            double lo = kMissing, hi = kMissing;
            for (size_t t = static_cast<size_t>(d - 1); t < observed.temp.size();
                 t += static_cast<size_t>(P)) {
                const double v = observed.temp[t];
                if (is_missing(v)) continue;
                if (is_missing(lo) || v < lo) lo = v;
                if (is_missing(hi) || v > hi) hi = v;
            }
            std::vector<std::uint8_t> ex(plan.ygrid.size(), 0);
            for (size_t g = 0; g < plan.ygrid.size(); ++g)
                if (is_missing(lo) || plan.ygrid[g] < lo || plan.ygrid[g] > hi) ex[g] = 1;
            for (StatKind kind : {StatKind::SeasonalOccurrence, StatKind::SeasonalIntensity}) {
                const std::string name =
                    (kind == StatKind::SeasonalOccurrence ? "precip_occurrence_vs_temp_day"
                                                          : "precip_intensity_vs_temp_day") +
                    std::to_string(d);
                if (!wanted(cfg, name)) continue;
                PlanItem item{name, kind, 0.0, d, grid_bins(plan.ygrid), ex};
                plan.items.push_back(std::move(item));
            }
        }
    }
    for (const std::string& want : cfg.statistics) {
        const bool found =
            std::any_of(plan.items.begin(), plan.items.end(),
                        [&](const PlanItem& it) { return it.name == want; });
        if (!found)
            throw InvalidParameterError("validation: unknown statistic name '" + want + "'");
    }
    return plan;
}

// Every selected statistic evaluated on one series, aligned with plan.items.
// Failures are per statistic: a failed item gets an error string and an
// all-missing value vector.
struct ComputedStats {
    std::vector<std::vector<double>> values;
    std::vector<std::string> errors;
};

ComputedStats compute_all(const DailySeries& s, const Plan& plan) {
    ComputedStats cs;
    cs.values.resize(plan.items.size());
    cs.errors.resize(plan.items.size());

    bool need_temp_moments = false;
    for (const PlanItem& it : plan.items)
        need_temp_moments |= it.kind == StatKind::TempDailyMean ||
                             it.kind == StatKind::TempDailySd ||
                             it.kind == StatKind::TempDailySkewness ||
                             it.kind == StatKind::TempDailyKurtosis;
    DailyMomentsResult tmom;
    std::string tmom_error;
    if (need_temp_moments) {
        try {
            tmom = daily_moments(s.temp, s.calendar);
        } catch (const std::exception& e) {
            tmom_error = e.what();
        }
    }

    for (size_t i = 0; i < plan.items.size(); ++i) {
        const PlanItem& it = plan.items[i];
        std::vector<double>& out_i = cs.values[i];
        try {
        auto& out = cs.values;
        switch (it.kind) {
            case StatKind::TempQuantiles:
                out[i] = quantile_curve(s.temp, plan.qprobs);
                break;
            case StatKind::PrecipQuantilesWet: {
                std::vector<double> wet;
                for (double v : s.precip)
                    if (!is_missing(v) && v > 0.0) wet.push_back(v);
                out[i] = quantile_curve(wet, plan.qprobs);
                break;
            }
            case StatKind::TempDailyMean:
            case StatKind::TempDailySd:
            case StatKind::TempDailySkewness:
            case StatKind::TempDailyKurtosis:
                if (!tmom_error.empty()) throw InvalidParameterError(tmom_error);
                if (it.kind == StatKind::TempDailyMean) out[i] = tmom.mean;
                if (it.kind == StatKind::TempDailySd) out[i] = tmom.sd;
                if (it.kind == StatKind::TempDailySkewness) out[i] = tmom.skewness;
                if (it.kind == StatKind::TempDailyKurtosis) out[i] = tmom.kurtosis;
                break;
            case StatKind::TempDailyMin:
                out[i] = interannual_extremes(s.temp, s.calendar).min;
                break;
            case StatKind::TempDailyMax:
                out[i] = interannual_extremes(s.temp, s.calendar).max;
                break;
            case StatKind::PrecipDailyMean:
                out[i] = daily_moments(s.precip, s.calendar).mean;
                break;
            case StatKind::TempAutocorr: {
                const int lags[3] = {1, 2, 3};
                out[i] = autocorr(s.temp, lags);
                break;
            }
            case StatKind::HotClusters:
                out[i] = exceedance_clusters(s.temp, it.threshold, true, plan.cluster_max_len)
                             .count;
                break;
            case StatKind::ColdClusters:
                out[i] = exceedance_clusters(s.temp, it.threshold, false, plan.cluster_max_len)
                             .count;
                break;
            case StatKind::DrySpells:
                out[i] = spells(s.precip, plan.spell_max_len).dry.count;
                break;
            case StatKind::WetSpells:
                out[i] = spells(s.precip, plan.spell_max_len).wet.count;
                break;
            case StatKind::YearlyTotalQuantiles: {
                const TotalsResult tr =
                    aggregate_totals(s.precip, s.calendar, AggregationPeriod::Year);
                std::vector<double> keep;
                for (size_t b = 0; b < tr.totals.size(); ++b)
                    if (!tr.flagged[b] && !is_missing(tr.totals[b]))
                        keep.push_back(tr.totals[b]);
                out[i] = quantile_curve(keep, plan.yprobs);
                break;
            }
            case StatKind::MonthlyTotalMean: {
                const TotalsResult tr =
                    aggregate_totals(s.precip, s.calendar, AggregationPeriod::Month);
                std::vector<double> sum(12, 0.0);
                std::vector<long> cnt(12, 0);
                for (size_t b = 0; b < tr.totals.size(); ++b) {
                    if (tr.flagged[b] || is_missing(tr.totals[b])) continue;
                    sum[b % 12] += tr.totals[b];
                    ++cnt[b % 12];
                }
                out[i].assign(12, kMissing);
                for (int m = 0; m < 12; ++m)
                    if (cnt[m] > 0) out[i][static_cast<size_t>(m)] = sum[m] / cnt[m];
                break;
            }
            case StatKind::MonthlyCorrelation: out[i] = monthly_correlation(s); break;
            case StatKind::KernelOccurrence:
                out[i] = kernel_conditional(s, KernelMode::Occurrence, plan.ygrid, plan.h);
                break;
            case StatKind::KernelIntensity:
                out[i] = kernel_conditional(s, KernelMode::Intensity, plan.ygrid, plan.h);
                break;
            case StatKind::SeasonalOccurrence:
                out[i] = kernel_conditional_seasonal(s, it.seasonal_day,
                                                     KernelMode::Occurrence, plan.ygrid,
                                                     plan.h1, plan.h2);
                break;
            case StatKind::SeasonalIntensity:
                out[i] = kernel_conditional_seasonal(s, it.seasonal_day,
                                                     KernelMode::Intensity, plan.ygrid,
                                                     plan.h1, plan.h2);
                break;
        }
        } catch (const std::exception& e) {
            cs.errors[i] = e.what();
            out_i.assign(it.bins.size(), kMissing);
        }
        if (out_i.empty()) out_i.assign(it.bins.size(), kMissing);
    }
    return cs;
}

}  // namespace

std::vector<StatisticReport> build_report(const DailySeries& observed, int n_sims,
                                          const std::function<DailySeries(int)>& sim_provider,
                                          const ValidationConfig& cfg, ExecPolicy policy) {
    if (n_sims < 2) throw InvalidParameterError("build_report: need at least 2 simulations");
    const Plan plan = build_plan(observed, cfg);
    const size_t S = plan.items.size();

    std::vector<StatisticReport> reports(S);
    for (size_t i = 0; i < S; ++i) {
        StatisticReport& r = reports[i];
        r.name = plan.items[i].name;
        r.bins = plan.items[i].bins;
        r.extrapolated = plan.items[i].extrapolated;
        r.n_sims = n_sims;
        r.per_sim = Matrix(n_sims, static_cast<long>(r.bins.size()), kMissing);
        r.observed.assign(r.bins.size(), kMissing);
    }

    // Observed values; a statistic that cannot be computed on the observed
    // series is reported with an error note instead of aborting the run.
    {
        const ComputedStats obs = compute_all(observed, plan);
        for (size_t i = 0; i < S; ++i) {
            reports[i].observed = obs.values[i];
            if (!obs.errors[i].empty())
                reports[i].error = "observed: " + obs.errors[i];
        }
    }

    std::mutex provider_mutex;
    std::vector<std::vector<std::string>> sim_errors(static_cast<size_t>(n_sims));
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic, 1) if (policy.parallel && n_sims > 1)
#endif
    for (int si = 0; si < n_sims; ++si) {
        try {
            DailySeries sim;
            {
                std::lock_guard<std::mutex> lock(provider_mutex);
                sim = sim_provider(si);
            }
            const ComputedStats vals = compute_all(sim, plan);
            std::vector<std::string> errs(S);
            for (size_t i = 0; i < S; ++i) {
                const size_t nb = reports[i].bins.size();
                for (size_t b = 0; b < nb && b < vals.values[i].size(); ++b)
                    reports[i].per_sim(si, static_cast<long>(b)) = vals.values[i][b];
                errs[i] = vals.errors[i];
            }
            sim_errors[static_cast<size_t>(si)] = std::move(errs);
        } catch (const std::exception& e) {
            sim_errors[static_cast<size_t>(si)].assign(S, e.what());
        }
    }
    for (int si = 0; si < n_sims; ++si) {
        const auto& errs = sim_errors[static_cast<size_t>(si)];
        for (size_t i = 0; i < S && i < errs.size(); ++i)
            if (!errs[i].empty() && reports[i].error.empty())
                reports[i].error =
                    "simulation " + std::to_string(si) + ": " + errs[i];
    }

    // Bands: empirical quantiles across simulations, bin by bin.
    for (size_t i = 0; i < S; ++i) {
        StatisticReport& r = reports[i];
        const size_t nb = r.bins.size();
        r.sim_mean.assign(nb, kMissing);
        r.band_lo.assign(nb, kMissing);
        r.band_hi.assign(nb, kMissing);
        r.coverage.assign(nb, -1);
        std::vector<double> col;
        for (size_t b = 0; b < nb; ++b) {
            col.clear();
            for (int si = 0; si < n_sims; ++si) {
                const double v = r.per_sim(si, static_cast<long>(b));
                if (!is_missing(v)) col.push_back(v);
            }
            if (col.size() < 2) continue;
            double s = 0.0;
            for (double v : col) s += v;
            r.sim_mean[b] = s / static_cast<double>(col.size());
            std::sort(col.begin(), col.end());
            r.band_lo[b] = quantile_sorted(col, cfg.band_lo);
            r.band_hi[b] = quantile_sorted(col, cfg.band_hi);
            if (!is_missing(r.observed[b]))
                r.coverage[b] =
                    (r.observed[b] >= r.band_lo[b] && r.observed[b] <= r.band_hi[b]) ? 1 : 0;
        }
    }
    return reports;
}

std::vector<StatisticReport> build_report(const DailySeries& observed,
                                          const std::vector<DailySeries>& sims,
                                          const ValidationConfig& cfg, ExecPolicy policy) {
    return build_report(
        observed, static_cast<int>(sims.size()),
        [&](int i) { return sims[static_cast<size_t>(i)]; }, cfg, policy);
}

}  // namespace swg
