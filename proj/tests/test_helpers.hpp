#pragma once

// Shared fabric for the test suites: random but valid parameter sets and
// synthetic observation series. Everything here only builds inputs; expected
// outputs always come from an independent computation in the test itself.

#include <cmath>
#include <vector>

#include "swg/model.hpp"
#include "swg/rng.hpp"
#include "swg/series.hpp"

namespace swg::test {

// A parameter set drawn uniformly from a box around neutral values. The box
// is small enough that every day has comfortably finite log densities.
inline Parameters random_parameters(const ModelSpec& spec, RngStream& rng, double scale = 0.8) {
    const int K = spec.n_states;
    const int M = spec.n_components;
    const int B = spec.n_harmonic_coeffs();
    Parameters p;
    p.transition = TransitionParams(K, spec.degree);
    for (double& c : p.transition.coeffs) c = rng.uniform(-scale, scale);
    p.initial.resize(K);
    double isum = 0.0;
    for (double& v : p.initial) {
        v = rng.uniform(0.1, 1.0);
        isum += v;
    }
    for (double& v : p.initial) v /= isum;

    p.emission.resize(K);
    for (auto& st : p.emission) {
        st.weights.resize(M);
        double wsum = 0.0;
        for (double& w : st.weights) {
            w = rng.uniform(0.2, 1.0);
            wsum += w;
        }
        for (double& w : st.weights) w /= wsum;
        st.rate_base.resize(M - spec.n_dirac);
        for (double& r : st.rate_base) r = std::exp(rng.uniform(-1.0, 1.0));
        st.precip_season.resize(B);
        for (double& c : st.precip_season) c = rng.uniform(-0.4, 0.4);
        st.temp_mean.resize(M);
        for (double& m : st.temp_mean) m = rng.uniform(-3.0, 3.0);
        st.temp_var.resize(M);
        for (double& v : st.temp_var) v = rng.uniform(0.4, 2.5);
        st.temp_season.resize(B);
        for (double& c : st.temp_season) c = rng.uniform(-1.0, 1.0);
        st.trend_coeffs.resize(spec.trend.dof());
        st.trend_coeffs[0] = rng.uniform(-2.0, 2.0);
        for (size_t i = 1; i < st.trend_coeffs.size(); ++i)
            st.trend_coeffs[i] = rng.uniform(-0.01, 0.01);
        // Keep the trend level near zero over the calendar in use; slopes
        // multiply calendar years, so compensate in the intercept.
        if (spec.trend.kind != TrendKind::Constant)
            st.trend_coeffs[0] -= st.trend_coeffs[1] * 2000.0;
    }
    return p;
}

// A series with the requested missingness and wet-day fraction. Dry days are
// only generated when the spec has a dry component, and wet days only when
// it has a wet component, so the emission density never vanishes.
inline DailySeries random_series(const ModelSpec& spec, const Calendar& cal, long n_days,
                                 RngStream& rng, double missing_prob = 0.0) {
    double wet_prob = 0.6;
    if (spec.n_dirac == 0) wet_prob = 1.0;
    if (spec.n_dirac == spec.n_components) wet_prob = 0.0;
    DailySeries s;
    s.station = "synthetic";
    s.calendar = cal;
    s.precip.resize(n_days);
    s.temp.resize(n_days);
    s.flags.resize(n_days);
    for (long i = 0; i < n_days; ++i) {
        if (rng.uniform() < missing_prob) {
            s.precip[i] = kMissing;
            s.flags[i].precip = 'm';
        } else if (rng.uniform() < wet_prob) {
            s.precip[i] = rng.exponential_mean(2.0) + 0.2;
        } else {
            s.precip[i] = 0.0;
        }
        if (rng.uniform() < missing_prob) {
            s.temp[i] = kMissing;
            s.flags[i].temp = 'm';
        } else {
            s.temp[i] = rng.normal(2.0, 4.0);
        }
    }
    return s;
}

// Largest absolute difference over every scalar of two parameter sets with
// the same shape.
inline double max_abs_diff(const Parameters& a, const Parameters& b) {
    double d = 0.0;
    auto upd = [&d](double x, double y) { d = std::max(d, std::fabs(x - y)); };
    for (size_t i = 0; i < a.transition.coeffs.size(); ++i)
        upd(a.transition.coeffs[i], b.transition.coeffs[i]);
    for (size_t i = 0; i < a.initial.size(); ++i) upd(a.initial[i], b.initial[i]);
    for (size_t k = 0; k < a.emission.size(); ++k) {
        const auto& x = a.emission[k];
        const auto& y = b.emission[k];
        for (size_t i = 0; i < x.weights.size(); ++i) upd(x.weights[i], y.weights[i]);
        for (size_t i = 0; i < x.rate_base.size(); ++i) upd(x.rate_base[i], y.rate_base[i]);
        for (size_t i = 0; i < x.precip_season.size(); ++i)
            upd(x.precip_season[i], y.precip_season[i]);
        for (size_t i = 0; i < x.temp_mean.size(); ++i) upd(x.temp_mean[i], y.temp_mean[i]);
        for (size_t i = 0; i < x.temp_var.size(); ++i) upd(x.temp_var[i], y.temp_var[i]);
        for (size_t i = 0; i < x.temp_season.size(); ++i) upd(x.temp_season[i], y.temp_season[i]);
        for (size_t i = 0; i < x.trend_coeffs.size(); ++i)
            upd(x.trend_coeffs[i], y.trend_coeffs[i]);
    }
    return d;
}

}  // namespace swg::test
