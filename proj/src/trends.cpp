#include "swg/trends.hpp"

#include <algorithm>
#include <cmath>

#include "swg/stats_util.hpp"

namespace swg {

YearlySeries yearly_mean_temperature(const DailySeries& series, int min_days) {
    const Calendar& cal = series.calendar;
    const long n = series.n_days();
    const int Y = n > 0 ? cal.year_index(n) + 1 : 0;
    YearlySeries ys;
    ys.first_year = cal.first_year;
    ys.mean.assign(Y, kMissing);
    ys.n_days.assign(Y, 0);
    std::vector<double> sum(Y, 0.0);
    for (long t = 1; t <= n; ++t) {
        const double v = series.temp[static_cast<size_t>(t - 1)];
        if (is_missing(v)) continue;
        const int y = cal.year_index(t);
        sum[y] += v;
        ++ys.n_days[y];
    }
    for (int y = 0; y < Y; ++y)
        if (ys.n_days[y] >= min_days) ys.mean[y] = sum[y] / ys.n_days[y];
    return ys;
}

namespace {

struct XY {
    std::vector<double> x;  // calendar year
    std::vector<double> y;  // yearly mean
};

XY valid_points(const YearlySeries& ys) {
    XY p;
    for (size_t i = 0; i < ys.mean.size(); ++i) {
        if (is_missing(ys.mean[i])) continue;
        p.x.push_back(static_cast<double>(ys.first_year + static_cast<int>(i)));
        p.y.push_back(ys.mean[i]);
    }
    return p;
}

// Solves the 3x3 symmetric system A b = c in place by Gaussian elimination
// with partial pivoting. Returns false if A is singular.
bool solve3(double a[3][3], double c[3], double b[3], int dim) {
    int idx[3] = {0, 1, 2};
    for (int col = 0; col < dim; ++col) {
        int piv = col;
        for (int r = col + 1; r < dim; ++r)
            if (std::fabs(a[idx[r]][col]) > std::fabs(a[idx[piv]][col])) piv = r;
        std::swap(idx[col], idx[piv]);
        const double d = a[idx[col]][col];
        if (std::fabs(d) < 1e-12) return false;
        for (int r = col + 1; r < dim; ++r) {
            const double f = a[idx[r]][col] / d;
            for (int cc = col; cc < dim; ++cc) a[idx[r]][cc] -= f * a[idx[col]][cc];
            c[idx[r]] -= f * c[idx[col]];
        }
    }
    for (int col = dim - 1; col >= 0; --col) {
        double s = c[idx[col]];
        for (int cc = col + 1; cc < dim; ++cc) s -= a[idx[col]][cc] * b[cc];
        b[col] = s / a[idx[col]][col];
    }
    return true;
}

}  // namespace

LinearFit fit_linear(const YearlySeries& ys) {
    const XY p = valid_points(ys);
    const size_t n = p.x.size();
    if (n < 2) throw InvalidParameterError("fit_linear: need at least 2 valid years");
    // Centre the regressor for conditioning; report raw-year coefficients.
    double xm = 0.0, ym = 0.0;
    for (size_t i = 0; i < n; ++i) {
        xm += p.x[i];
        ym += p.y[i];
    }
    xm /= static_cast<double>(n);
    ym /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = p.x[i] - xm;
        sxx += dx * dx;
        sxy += dx * (p.y[i] - ym);
    }
    LinearFit f;
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = ym - f.slope * xm;
    f.rss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double e = p.y[i] - (f.intercept + f.slope * p.x[i]);
        f.rss += e * e;
    }
    return f;
}

PiecewiseFit fit_piecewise(const YearlySeries& ys) {
    const XY p = valid_points(ys);
    const size_t n = p.x.size();
    PiecewiseFit best;
    bool found = false;
    if (n >= 6) {
        const int lo = static_cast<int>(p.x.front());
        const int hi = static_cast<int>(p.x.back());
        for (int tau = lo; tau < hi; ++tau) {
            long left = 0, right = 0;
            for (double x : p.x) (x <= tau ? left : right) += 1;
            if (left < 3 || right < 3) continue;

            // Regressors centred at their means for conditioning.
            double m0 = 0.0, m1 = 0.0, m2 = 0.0;
            for (size_t i = 0; i < n; ++i) {
                m1 += p.x[i];
                m2 += std::max(0.0, p.x[i] - tau);
            }
            m1 /= static_cast<double>(n);
            m2 /= static_cast<double>(n);
            for (size_t i = 0; i < n; ++i) m0 += p.y[i];
            m0 /= static_cast<double>(n);

            double a[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
            double c[3] = {0, 0, 0};
            for (size_t i = 0; i < n; ++i) {
                const double r[3] = {1.0, p.x[i] - m1, std::max(0.0, p.x[i] - tau) - m2};
                const double yv = p.y[i] - m0;
                for (int u = 0; u < 3; ++u) {
                    c[u] += r[u] * yv;
                    for (int v = 0; v < 3; ++v) a[u][v] += r[u] * r[v];
                }
            }
            double b[3] = {0, 0, 0};
            if (!solve3(a, c, b, 3)) continue;
            double rss = 0.0;
            for (size_t i = 0; i < n; ++i) {
                const double fit = m0 + b[0] + b[1] * (p.x[i] - m1) +
                                   b[2] * (std::max(0.0, p.x[i] - tau) - m2);
                const double e = p.y[i] - fit;
                rss += e * e;
            }
            if (!found || rss < best.rss) {
                found = true;
                best.break_year = tau;
                best.slope = b[1];
                best.slope_change = b[2];
                // Un-centre: value = intercept + slope*x + change*(x-tau)^+.
                best.intercept = (m0 + b[0]) - b[1] * m1 - b[2] * m2;
                best.rss = rss;
            }
        }
    }
    if (!found)
        throw InvalidParameterError(
            "fit_piecewise: no break year leaves 3 valid years on both sides");
    return best;
}

TrendTest trend_test(const YearlySeries& ys, double alpha) {
    TrendTest tt;
    tt.linear = fit_linear(ys);
    tt.piecewise = fit_piecewise(ys);
    tt.n_years = ys.n_valid();

    const double n = static_cast<double>(tt.n_years);
    if (!(tt.piecewise.rss > 0.0) || !(tt.linear.rss > 0.0))
        throw InvalidParameterError("trend_test: zero residual sum of squares");
    tt.statistic = std::max(0.0, n * std::log(tt.linear.rss / tt.piecewise.rss));
    tt.p_value = chi2_sf(tt.statistic, 1);
    if (tt.p_value < alpha) {
        tt.chosen = TrendKind::PiecewiseLinear;
        tt.break_year = tt.piecewise.break_year;
    } else {
        tt.chosen = TrendKind::Linear;
        tt.break_year = 0;
    }

    // Normality of the linear-fit residuals (KS against the fitted normal).
    {
        const XY p = valid_points(ys);
        std::vector<double> r;
        r.reserve(p.x.size());
        for (size_t i = 0; i < p.x.size(); ++i)
            r.push_back(p.y[i] - (tt.linear.intercept + tt.linear.slope * p.x[i]));
        const size_t nn = r.size();
        if (nn >= 4) {
            const double sd = std::sqrt(tt.linear.rss / static_cast<double>(nn - 2));
            std::sort(r.begin(), r.end());
            double d = 0.0;
            for (size_t i = 0; i < nn; ++i) {
                const double cdf = normal_cdf(r[i] / sd);
                d = std::max(d, std::fabs(cdf - static_cast<double>(i) / nn));
                d = std::max(d, std::fabs(static_cast<double>(i + 1) / nn - cdf));
            }
            tt.normality_p = kolmogorov_p(d, static_cast<long>(nn));
        }
    }
    return tt;
}

std::vector<SeasonalMeansRow> seasonal_windowed_means(const DailySeries& series,
                                                      int window_years) {
    const Calendar& cal = series.calendar;
    const long n = series.n_days();
    const int Y = n > 0 ? cal.year_index(n) + 1 : 0;
    std::vector<double> ssum(Y, 0.0), wsum(Y, 0.0);
    std::vector<long> scnt(Y, 0), wcnt(Y, 0);
    for (long t = 1; t <= n; ++t) {
        const double v = series.temp[static_cast<size_t>(t - 1)];
        if (is_missing(v)) continue;
        const int month = month_of_day_of_year(cal.day_of_year(t));
        const int y = cal.year_index(t);
        if (month >= 6 && month <= 8) {
            ssum[y] += v;
            ++scnt[y];
        } else if (month == 12 || month <= 2) {
            wsum[y] += v;
            ++wcnt[y];
        }
    }
    std::vector<double> s(Y, kMissing), w(Y, kMissing);
    double sm = 0.0, wm = 0.0;
    long sn = 0, wn = 0;
    for (int y = 0; y < Y; ++y) {
        if (scnt[y] >= 60) {
            s[y] = ssum[y] / scnt[y];
            sm += s[y];
            ++sn;
        }
        if (wcnt[y] >= 60) {
            w[y] = wsum[y] / wcnt[y];
            wm += w[y];
            ++wn;
        }
    }
    if (sn > 0) sm /= sn;
    if (wn > 0) wm /= wn;

    std::vector<SeasonalMeansRow> rows;
    for (int y = 0; y < Y; ++y) {
        SeasonalMeansRow row;
        row.year = cal.first_year + y;
        // Trailing window means of the centred seasonal series.
        double sacc = 0.0, wacc = 0.0;
        long sc = 0, wc = 0;
        for (int u = std::max(0, y - window_years + 1); u <= y; ++u) {
            if (!is_missing(s[u])) {
                sacc += s[u] - sm;
                ++sc;
            }
            if (!is_missing(w[u])) {
                wacc += w[u] - wm;
                ++wc;
            }
        }
        if (sc > 0) row.summer = sacc / sc;
        if (wc > 0) row.winter = wacc / wc;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace swg
