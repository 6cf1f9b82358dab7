#include "swg/simulate.hpp"

#include <cmath>

#include "swg/kernels.hpp"
#include "swg/rng.hpp"

namespace swg {

std::vector<double> stationary_distribution(const Matrix& q) {
    const int K = static_cast<int>(q.rows());
    if (K != q.cols() || K < 1)
        throw InvalidParameterError("stationary_distribution: matrix must be square");
    std::vector<double> p(K, 1.0 / K), next(K);
    for (int it = 0; it < 20000; ++it) {
        for (int j = 0; j < K; ++j) {
            double s = 0.0;
            for (int i = 0; i < K; ++i) s += p[i] * q(i, j);
            // Damping keeps periodic chains from oscillating.
            next[j] = 0.5 * (p[j] + s);
        }
        double diff = 0.0, norm = 0.0;
        for (int j = 0; j < K; ++j) {
            diff += std::fabs(next[j] - p[j]);
            norm += next[j];
        }
        for (int j = 0; j < K; ++j) p[j] = next[j] / norm;
        if (diff < 1e-14) break;
    }
    return p;
}

Matrix state_marginals(const FittedModel& model, long n_days) {
    const int K = model.spec.n_states;
    if (n_days <= 0) throw InvalidParameterError("state_marginals: n_days must be positive");
    Matrix out(n_days, K);
    std::vector<double> p = model.params.initial;
    for (long t = 1; t <= n_days; ++t) {
        for (int k = 0; k < K; ++k) out(t - 1, k) = p[k];
        if (t == n_days) break;
        const Matrix q = transition_matrix(model.params.transition, t, model.spec);
        std::vector<double> next(K, 0.0);
        for (int i = 0; i < K; ++i)
            for (int j = 0; j < K; ++j) next[j] += p[i] * q(i, j);
        p = std::move(next);
    }
    return out;
}

std::vector<Trajectory> simulate(const FittedModel& model, const SimulationRequest& req,
                                 ExecPolicy policy) {
    const ModelSpec& spec = model.spec;
    validate_parameters(model.params, spec);
    if (req.n_days <= 0) throw InvalidParameterError("simulate: n_days must be positive");
    if (req.n_trajectories <= 0)
        throw InvalidParameterError("simulate: n_trajectories must be positive");
    if (req.first_index < 0)
        throw InvalidParameterError("simulate: first_index must be non-negative");
    if (req.initial == SimulationRequest::InitialState::Fixed &&
        (req.fixed_state < 0 || req.fixed_state >= spec.n_states))
        throw InvalidParameterError("simulate: fixed_state out of range");
    if (spec.n_states > 255 || spec.n_components > 255)
        throw InvalidParameterError("simulate: state or component count exceeds 255");

    const int K = spec.n_states;
    const int M1 = spec.n_dirac;
    const int P = spec.period;

    // The simulated span can run past the fitted years; the trend tables
    // must cover every simulated year.
    Calendar cal = model.calendar;
    cal.n_years = std::max(cal.n_years,
                           static_cast<int>((req.n_days + P - 1) / P));
    const EmissionTables tb = build_emission_tables(model.params, spec, cal);

    // Transition rows tabulated per day of year.
    std::vector<double> qrows(static_cast<size_t>(P) * K * K);
    for (int r = 1; r <= P; ++r) {
        const Matrix q = transition_matrix(model.params.transition, r, spec);
        for (int i = 0; i < K; ++i)
            for (int j = 0; j < K; ++j)
                qrows[(static_cast<size_t>(r - 1) * K + i) * K + j] = q(i, j);
    }
    const std::vector<double> start =
        req.initial == SimulationRequest::InitialState::Stationary
            ? stationary_distribution(transition_matrix(model.params.transition, 1, spec))
            : std::vector<double>();

    std::vector<Trajectory> out(static_cast<size_t>(req.n_trajectories));
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic, 1) if (policy.parallel && req.n_trajectories > 1)
#endif
    for (int i = 0; i < req.n_trajectories; ++i) {
        RngStream rng(req.seed, static_cast<std::uint64_t>(req.first_index + i));
        Trajectory& tr = out[static_cast<size_t>(i)];
        tr.precip.resize(static_cast<size_t>(req.n_days));
        tr.temp.resize(static_cast<size_t>(req.n_days));
        if (req.emit_states) {
            tr.state.resize(static_cast<size_t>(req.n_days));
            tr.component.resize(static_cast<size_t>(req.n_days));
        }
        int k = req.initial == SimulationRequest::InitialState::Fixed
                    ? req.fixed_state
                    : rng.discrete(start);
        for (long t = 1; t <= req.n_days; ++t) {
            const int doy = cal.day_of_year(t);
            const int yi = cal.year_index(t);
            const int m = rng.discrete(model.params.emission[k].weights);
            double precip = 0.0;
            if (m >= M1) {
                // Exponential with rate rate/exp(lscale), i.e. mean
                // exp(lscale)/rate.
                const double mean =
                    std::exp(tb.precip_lscale(k, doy - 1)) / tb.rate(k, m - M1);
                precip = rng.exponential_mean(mean);
            }
            const double level = tb.trend_level(k, yi) + tb.temp_season(k, doy - 1);
            const double temp =
                rng.normal(level + tb.mu(k, m), std::sqrt(1.0 / tb.inv_var(k, m)));
            tr.precip[static_cast<size_t>(t - 1)] = precip;
            tr.temp[static_cast<size_t>(t - 1)] = temp;
            if (req.emit_states) {
                tr.state[static_cast<size_t>(t - 1)] = static_cast<std::uint8_t>(k);
                tr.component[static_cast<size_t>(t - 1)] = static_cast<std::uint8_t>(m);
            }
            if (t < req.n_days) {
                const double* row = &qrows[(static_cast<size_t>(doy - 1) * K + k) * K];
                k = rng.discrete(std::span<const double>(row, K));
            }
        }
    }
    return out;
}

DailySeries trajectory_to_series(const Trajectory& traj, const Calendar& calendar,
                                 const std::string& station, double dryness_threshold) {
    DailySeries s;
    s.station = station;
    s.dryness_threshold = dryness_threshold;
    s.calendar = calendar;
    const long n = static_cast<long>(traj.precip.size());
    s.calendar.n_years =
        static_cast<int>((n + calendar.period - 1) / calendar.period);
    s.precip = traj.precip;
    s.temp = traj.temp;
    for (double& p : s.precip)
        if (p < s.dryness_threshold) p = 0.0;
    s.flags.assign(static_cast<size_t>(n), DayFlags{});
    return s;
}

DailySeries trajectory_to_series(const Trajectory& traj, const FittedModel& model) {
    return trajectory_to_series(traj, model.calendar, model.station, model.dryness_threshold);
}

}  // namespace swg
