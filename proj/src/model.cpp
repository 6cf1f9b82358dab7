#include "swg/model.hpp"

#include <algorithm>
#include <cmath>

#include "swg/stats_util.hpp"

namespace swg {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw InvalidParameterError(msg);
}

bool all_finite(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

void validate_spec(const ModelSpec& spec) {
    require(spec.n_states >= 1, "n_states must be >= 1");
    require(spec.n_components >= 1, "n_components must be >= 1");
    require(spec.n_dirac >= 0 && spec.n_dirac <= spec.n_components,
            "n_dirac must lie in [0, n_components]");
    require(spec.degree >= 0, "degree must be >= 0");
    require(spec.period >= 1, "period must be >= 1");
}

void validate_parameters(const Parameters& params, const ModelSpec& spec) {
    validate_spec(spec);
    const int K = spec.n_states;
    const int M = spec.n_components;
    const int B = spec.n_harmonic_coeffs();

    require(params.transition.n_states == K && params.transition.degree == spec.degree,
            "transition parameter block does not match the spec");
    require(static_cast<int>(params.transition.coeffs.size()) == K * (K - 1) * B,
            "transition coefficient count does not match the spec");
    require(all_finite(params.transition.coeffs), "non-finite transition coefficient");

    require(static_cast<int>(params.emission.size()) == K, "need one emission block per state");
    for (const auto& st : params.emission) {
        require(static_cast<int>(st.weights.size()) == M, "component weight count mismatch");
        require(static_cast<int>(st.rate_base.size()) == M - spec.n_dirac,
                "precipitation rate count mismatch");
        require(static_cast<int>(st.precip_season.size()) == B,
                "precipitation seasonal coefficient count mismatch");
        require(static_cast<int>(st.temp_mean.size()) == M, "temperature mean count mismatch");
        require(static_cast<int>(st.temp_var.size()) == M, "temperature variance count mismatch");
        require(static_cast<int>(st.temp_season.size()) == B,
                "temperature seasonal coefficient count mismatch");
        require(static_cast<int>(st.trend_coeffs.size()) == spec.trend.dof(),
                "trend coefficient count mismatch");

        double wsum = 0.0;
        for (double w : st.weights) {
            require(std::isfinite(w) && w >= 0.0, "component weights must be non-negative");
            wsum += w;
        }
        require(std::fabs(wsum - 1.0) <= 1e-6, "component weights must sum to 1");
        for (double r : st.rate_base)
            require(std::isfinite(r) && r > 0.0, "precipitation rates must be positive");
        for (double v : st.temp_var)
            require(std::isfinite(v) && v > 0.0, "temperature variances must be positive");
        require(all_finite(st.precip_season) && all_finite(st.temp_season) &&
                    all_finite(st.temp_mean) && all_finite(st.trend_coeffs),
                "non-finite emission coefficient");
    }

    require(static_cast<int>(params.initial.size()) == K, "initial distribution size mismatch");
    double psum = 0.0;
    for (double p : params.initial) {
        require(std::isfinite(p) && p >= 0.0, "initial probabilities must be non-negative");
        psum += p;
    }
    require(std::fabs(psum - 1.0) <= 1e-6, "initial distribution must sum to 1");
}

void harmonic_basis(int degree, int period, int day_of_year, std::span<double> out) {
    if (static_cast<int>(out.size()) != 2 * degree + 1)
        throw InvalidParameterError("harmonic_basis: output span has the wrong length");
    out[0] = 1.0;
    const double w = 2.0 * M_PI * static_cast<double>(day_of_year) / period;
    for (int l = 1; l <= degree; ++l) {
        out[2 * l - 1] = std::cos(l * w);
        out[2 * l] = std::sin(l * w);
    }
}

double seasonal_value(std::span<const double> coeffs, long t, const ModelSpec& spec) {
    if (static_cast<int>(coeffs.size()) != spec.n_harmonic_coeffs())
        throw InvalidParameterError("seasonal_value: coefficient count does not match the degree");
    const int doy = static_cast<int>((t - 1) % spec.period) + 1;
    double v = coeffs[0];
    const double w = 2.0 * M_PI * static_cast<double>(doy) / spec.period;
    for (int l = 1; l <= spec.degree; ++l)
        v += coeffs[2 * l - 1] * std::cos(l * w) + coeffs[2 * l] * std::sin(l * w);
    return v;
}

double trend_value(std::span<const double> coeffs, long t, const TrendForm& trend,
                   const Calendar& calendar) {
    if (static_cast<int>(coeffs.size()) != trend.dof())
        throw InvalidParameterError("trend_value: coefficient count does not match the form");
    const double year = static_cast<double>(calendar.year_of(t));
    switch (trend.kind) {
        case TrendKind::Constant: return coeffs[0];
        case TrendKind::Linear: return coeffs[0] + coeffs[1] * year;
        case TrendKind::PiecewiseLinear: {
            const double hinge = std::max(0.0, year - trend.break_year);
            return coeffs[0] + coeffs[1] * year + coeffs[2] * hinge;
        }
    }
    return coeffs[0];
}

Matrix transition_matrix(const TransitionParams& tp, long t, const ModelSpec& spec) {
    const int K = spec.n_states;
    if (tp.n_states != K || tp.degree != spec.degree)
        throw InvalidParameterError("transition_matrix: parameter block does not match the spec");
    Matrix q(K, K, 0.0);
    if (K == 1) {
        q(0, 0) = 1.0;
        return q;
    }
    const int B = spec.n_harmonic_coeffs();
    std::vector<double> basis(B);
    const int doy = static_cast<int>((t - 1) % spec.period) + 1;
    harmonic_basis(spec.degree, spec.period, doy, basis);

    std::vector<double> logits(K);
    for (int i = 0; i < K; ++i) {
        for (int j = 0; j < K - 1; ++j) {
            double p = 0.0;
            for (int l = 0; l < B; ++l) p += tp.at(i, j, l) * basis[l];
            logits[j] = p;
        }
        logits[K - 1] = 0.0;  // softmax reference state
        const double m = *std::max_element(logits.begin(), logits.end());
        double denom = 0.0;
        for (int j = 0; j < K; ++j) denom += std::exp(logits[j] - m);
        for (int j = 0; j < K; ++j) q(i, j) = std::exp(logits[j] - m) / denom;
    }
    return q;
}

double emission_log_density(const StateEmissionParams& state, const Observation& obs,
                            const ModelSpec& spec, const Calendar& calendar) {
    const int M = spec.n_components;
    const int M1 = spec.n_dirac;
    const bool have_precip = !is_missing(obs.precip);
    const bool have_temp = !is_missing(obs.temp);
    if (have_precip && obs.precip < 0.0)
        throw InvalidObservationError("negative precipitation observation");

    double temp_level = 0.0;
    if (have_temp)
        temp_level = trend_value(state.trend_coeffs, obs.t, spec.trend, calendar) +
                     seasonal_value(state.temp_season, obs.t, spec);
    double log_scale = 0.0;
    const bool wet_obs = have_precip && obs.precip > 0.0;
    if (wet_obs) log_scale = seasonal_value(state.precip_season, obs.t, spec);

    // Component m contributes when it is compatible with the precipitation
    // coordinate: dry components only on dry days, wet components only on
    // wet days, every component when precipitation is missing.
    int m_lo = 0, m_hi = M;
    if (have_precip) {
        if (obs.precip == 0.0)
            m_hi = M1;
        else
            m_lo = M1;
    }

    double acc = -std::numeric_limits<double>::infinity();
    for (int m = m_lo; m < m_hi; ++m) {
        const double w = state.weights[m];
        if (w <= 0.0) continue;
        double lp = std::log(w);
        if (wet_obs && m >= M1) {
            const double rate = state.rate_base[m - M1];
            lp += std::log(rate) - log_scale - rate * std::exp(-log_scale) * obs.precip;
        }
        if (have_temp)
            lp += normal_log_pdf(obs.temp, temp_level + state.temp_mean[m], state.temp_var[m]);
        acc = log_add_exp(acc, lp);
    }
    return acc;
}

double exact_log_likelihood(const Parameters& params, const DailySeries& series,
                            const ModelSpec& spec) {
    const long n = series.n_days();
    const int K = spec.n_states;
    if (n > 12 || K > 3)
        throw InvalidParameterError(
            "exact_log_likelihood enumerates all state paths; use it only for n <= 12, K <= 3");
    if (n == 0) return 0.0;

    Matrix f(n, K);
    for (long t = 1; t <= n; ++t) {
        const Observation obs = series.at(t);
        for (int k = 0; k < K; ++k)
            f(t - 1, k) = emission_log_density(params.emission[k], obs, spec, series.calendar);
    }
    std::vector<Matrix> qlog;
    qlog.reserve(n > 1 ? n - 1 : 0);
    for (long t = 1; t < n; ++t) {
        Matrix q = transition_matrix(params.transition, t, spec);
        for (int i = 0; i < K; ++i)
            for (int j = 0; j < K; ++j) q(i, j) = std::log(q(i, j));
        qlog.push_back(std::move(q));
    }

    std::vector<int> path(n, 0);
    double total = -std::numeric_limits<double>::infinity();
    while (true) {
        double lp = std::log(params.initial[path[0]]) + f(0, path[0]);
        for (long t = 1; t < n; ++t)
            lp += qlog[t - 1](path[t - 1], path[t]) + f(t, path[t]);
        total = log_add_exp(total, lp);

        long pos = n - 1;
        while (pos >= 0 && path[pos] == K - 1) path[pos--] = 0;
        if (pos < 0) break;
        ++path[pos];
    }
    return total;
}

Parameters permute_states(const Parameters& params, std::span<const int> perm,
                          const ModelSpec& spec) {
    const int K = spec.n_states;
    if (static_cast<int>(perm.size()) != K)
        throw InvalidParameterError("permute_states: permutation length mismatch");
    std::vector<bool> seen(K, false);
    for (int p : perm) {
        if (p < 0 || p >= K || seen[p])
            throw InvalidParameterError("permute_states: not a permutation");
        seen[p] = true;
    }

    Parameters out;
    out.emission.resize(K);
    out.initial.resize(K);
    for (int i = 0; i < K; ++i) {
        out.emission[i] = params.emission[perm[i]];
        out.initial[i] = params.initial[perm[i]];
    }

    // The softmax logits are relative to the last state, so relabelling
    // changes the reference: the new logit (i', j') is the old logit
    // (perm[i'], perm[j']) minus the old logit (perm[i'], perm[K-1]), where
    // the old reference state carries logit zero. Coefficient vectors
    // subtract term by term because the basis is shared.
    const int B = spec.n_harmonic_coeffs();
    out.transition = TransitionParams(K, spec.degree);
    for (int i = 0; i < K && K > 1; ++i) {
        const int oi = perm[i];
        for (int j = 0; j < K - 1; ++j) {
            const int oj = perm[j];
            const int oref = perm[K - 1];
            for (int l = 0; l < B; ++l) {
                double v = 0.0;
                if (oj < K - 1) v += params.transition.at(oi, oj, l);
                if (oref < K - 1) v -= params.transition.at(oi, oref, l);
                out.transition.at(i, j, l) = v;
            }
        }
    }
    return out;
}

Parameters canonicalize(const Parameters& params, const ModelSpec& spec) {
    Parameters out = params;
    const int M = spec.n_components;
    const int M1 = spec.n_dirac;
    for (auto& st : out.emission) {
        // Move the constant of the precipitation log-scale into the rates.
        const double s0 = st.precip_season[0];
        st.precip_season[0] = 0.0;
        for (int m = 0; m < M - M1; ++m) st.rate_base[m] *= std::exp(-s0);

        // Move the constant of the temperature cycle and the weighted mean
        // of the component offsets into the trend intercept.
        const double c0 = st.temp_season[0];
        st.temp_season[0] = 0.0;
        double mu_bar = 0.0;
        for (int m = 0; m < M; ++m) mu_bar += st.weights[m] * st.temp_mean[m];
        for (int m = 0; m < M; ++m) st.temp_mean[m] -= mu_bar;
        st.trend_coeffs[0] += c0 + mu_bar;
    }
    return out;
}

int count_parameters(const ModelSpec& spec) {
    validate_spec(spec);
    const int K = spec.n_states;
    const int M = spec.n_components;
    const int M1 = spec.n_dirac;
    const int B = spec.n_harmonic_coeffs();
    const int per_state = (M - 1) + (M - M1) + B + M + M + B + spec.trend.dof();
    return K * (K - 1) * B + K * per_state + (K - 1);
}

}  // namespace swg
