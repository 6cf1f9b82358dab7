#include "swg/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "swg/stats_util.hpp"

namespace swg {

namespace {

// Exceptions must not escape an OpenMP region, so observation domain errors
// are raised in a cheap serial pass before any parallel kernel runs.
void check_precip_domain(const DailySeries& series) {
    const long n = series.n_days();
    for (long t = 1; t <= n; ++t) {
        const double p = series.precip[static_cast<size_t>(t - 1)];
        if (!is_missing(p) && p < 0.0)
            throw InvalidObservationError("negative precipitation at day " + std::to_string(t));
    }
}

void throw_if_degenerate(const std::vector<unsigned char>& bad) {
    for (size_t i = 0; i < bad.size(); ++i)
        if (bad[i])
            throw DegenerateLikelihoodError(
                "observation at day " + std::to_string(i + 1) +
                    " has zero density under every state",
                static_cast<long>(i + 1));
}

}  // namespace

EmissionTables build_emission_tables(const Parameters& params, const ModelSpec& spec,
                                     const Calendar& calendar) {
    const int K = spec.n_states;
    const int M = spec.n_components;
    const int M1 = spec.n_dirac;
    const int P = spec.period;
    const int Y = std::max(1, calendar.n_years);

    EmissionTables tb;
    tb.n_states = K;
    tb.n_components = M;
    tb.n_dirac = M1;
    tb.temp_season = Matrix(K, P);
    tb.precip_lscale = Matrix(K, P);
    tb.trend_level = Matrix(K, Y);
    tb.log_weight = Matrix(K, M);
    tb.log_rate = Matrix(K, std::max(1, M - M1));
    tb.rate = Matrix(K, std::max(1, M - M1));
    tb.mu = Matrix(K, M);
    tb.inv_var = Matrix(K, M);
    tb.log_norm_const = Matrix(K, M);

    for (int k = 0; k < K; ++k) {
        const StateEmissionParams& st = params.emission[k];
        for (int r = 1; r <= P; ++r) {
            tb.temp_season(k, r - 1) = seasonal_value(st.temp_season, r, spec);
            tb.precip_lscale(k, r - 1) = seasonal_value(st.precip_season, r, spec);
        }
        for (int y = 0; y < Y; ++y) {
            const long t = static_cast<long>(y) * P + 1;
            tb.trend_level(k, y) = trend_value(st.trend_coeffs, t, spec.trend, calendar);
        }
        for (int m = 0; m < M; ++m) {
            tb.log_weight(k, m) = st.weights[m] > 0.0
                                      ? std::log(st.weights[m])
                                      : -std::numeric_limits<double>::infinity();
            tb.mu(k, m) = st.temp_mean[m];
            tb.inv_var(k, m) = 1.0 / st.temp_var[m];
            tb.log_norm_const(k, m) = -0.5 * (kLog2Pi + std::log(st.temp_var[m]));
        }
        for (int m = 0; m < M - M1; ++m) {
            tb.rate(k, m) = st.rate_base[m];
            tb.log_rate(k, m) = std::log(st.rate_base[m]);
        }
    }
    return tb;
}

namespace {

// Mixture log density of day t under state k, reading only tabulated values.
double mixture_log_density(const EmissionTables& tb, int k, double precip, double temp,
                           int doy, int year_index) {
    const int M = tb.n_components;
    const int M1 = tb.n_dirac;
    const bool have_precip = !is_missing(precip);
    const bool have_temp = !is_missing(temp);
    const bool wet = have_precip && precip > 0.0;

    int m_lo = 0, m_hi = M;
    if (have_precip) {
        if (precip == 0.0)
            m_hi = M1;
        else
            m_lo = M1;
    }

    const double level = have_temp
                             ? tb.trend_level(k, year_index) + tb.temp_season(k, doy - 1)
                             : 0.0;
    const double lscale = wet ? tb.precip_lscale(k, doy - 1) : 0.0;
    const double escale = wet ? std::exp(-lscale) : 0.0;

    double acc = -std::numeric_limits<double>::infinity();
    for (int m = m_lo; m < m_hi; ++m) {
        double lp = tb.log_weight(k, m);
        if (!std::isfinite(lp)) continue;
        if (wet) lp += tb.log_rate(k, m - M1) - lscale - tb.rate(k, m - M1) * escale * precip;
        if (have_temp) {
            const double d = temp - level - tb.mu(k, m);
            lp += tb.log_norm_const(k, m) - 0.5 * d * d * tb.inv_var(k, m);
        }
        acc = log_add_exp(acc, lp);
    }
    return acc;
}

}  // namespace

Matrix emission_log_matrix(const Parameters& params, const DailySeries& series,
                           const ModelSpec& spec, ExecPolicy policy) {
    check_precip_domain(series);
    const long n = series.n_days();
    const int K = spec.n_states;
    const EmissionTables tb = build_emission_tables(params, spec, series.calendar);
    Matrix out(n, K);
    std::vector<unsigned char> bad(static_cast<size_t>(n), 0);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) if (policy.parallel)
#endif
    for (long t = 1; t <= n; ++t) {
        const double p = series.precip[static_cast<size_t>(t - 1)];
        const double y = series.temp[static_cast<size_t>(t - 1)];
        const int doy = series.calendar.day_of_year(t);
        const int yi = series.calendar.year_index(t);
        bool any = false;
        for (int k = 0; k < K; ++k) {
            const double v = mixture_log_density(tb, k, p, y, doy, yi);
            out(t - 1, k) = v;
            any = any || std::isfinite(v);
        }
        if (!any) bad[static_cast<size_t>(t - 1)] = 1;
    }
    throw_if_degenerate(bad);
    return out;
}

Matrix emission_component_log(const Parameters& params, const DailySeries& series,
                              const ModelSpec& spec, ExecPolicy policy) {
    check_precip_domain(series);
    const long n = series.n_days();
    const int K = spec.n_states;
    const int M = spec.n_components;
    const int M1 = spec.n_dirac;
    const EmissionTables tb = build_emission_tables(params, spec, series.calendar);
    Matrix out(n, static_cast<long>(K) * M);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) if (policy.parallel)
#endif
    for (long t = 1; t <= n; ++t) {
        const double p = series.precip[static_cast<size_t>(t - 1)];
        const double y = series.temp[static_cast<size_t>(t - 1)];
        const int doy = series.calendar.day_of_year(t);
        const int yi = series.calendar.year_index(t);
        const bool have_precip = !is_missing(p);
        const bool have_temp = !is_missing(y);
        const bool wet = have_precip && p > 0.0;
        int m_lo = 0, m_hi = M;
        if (have_precip) {
            if (p == 0.0)
                m_hi = M1;
            else
                m_lo = M1;
        }
        double* row = out.row_ptr(t - 1);
        for (int k = 0; k < K; ++k) {
            const double level =
                have_temp ? tb.trend_level(k, yi) + tb.temp_season(k, doy - 1) : 0.0;
            const double lscale = wet ? tb.precip_lscale(k, doy - 1) : 0.0;
            const double escale = wet ? std::exp(-lscale) : 0.0;
            for (int m = 0; m < M; ++m) {
                double lp = -std::numeric_limits<double>::infinity();
                if (m >= m_lo && m < m_hi && std::isfinite(tb.log_weight(k, m))) {
                    lp = tb.log_weight(k, m);
                    if (wet)
                        lp += tb.log_rate(k, m - M1) - lscale -
                              tb.rate(k, m - M1) * escale * p;
                    if (have_temp) {
                        const double d = y - level - tb.mu(k, m);
                        lp += tb.log_norm_const(k, m) - 0.5 * d * d * tb.inv_var(k, m);
                    }
                }
                row[k * M + m] = lp;
            }
        }
    }
    return out;
}

namespace serial_ref {

Matrix emission_log_matrix(const Parameters& params, const DailySeries& series,
                           const ModelSpec& spec) {
    const long n = series.n_days();
    const int K = spec.n_states;
    Matrix out(n, K);
    for (long t = 1; t <= n; ++t) {
        const Observation obs = series.at(t);
        bool any = false;
        for (int k = 0; k < K; ++k) {
            const double v = emission_log_density(params.emission[k], obs, spec, series.calendar);
            out(t - 1, k) = v;
            any = any || std::isfinite(v);
        }
        if (!any)
            throw DegenerateLikelihoodError(
                "observation at day " + std::to_string(t) +
                    " has zero density under every state",
                t);
    }
    return out;
}

}  // namespace serial_ref

}  // namespace swg
