#include "swg/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "swg/optim.hpp"
#include "swg/stats_util.hpp"

namespace swg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Log transition matrices tabulated per day of year; the matrix for day t
// depends on t only through t mod period.
struct LogQTable {
    int K = 0;
    int period = 0;
    std::vector<double> v;  // [doy-1][i][j]

    double at(int doy, int i, int j) const {
        return v[(static_cast<size_t>(doy - 1) * K + i) * K + j];
    }
};

LogQTable build_logq(const TransitionParams& tp, const ModelSpec& spec) {
    LogQTable q;
    q.K = spec.n_states;
    q.period = spec.period;
    q.v.resize(static_cast<size_t>(spec.period) * q.K * q.K);
    for (int r = 1; r <= spec.period; ++r) {
        const Matrix m = transition_matrix(tp, r, spec);
        for (int i = 0; i < q.K; ++i)
            for (int j = 0; j < q.K; ++j)
                q.v[(static_cast<size_t>(r - 1) * q.K + i) * q.K + j] = std::log(m(i, j));
    }
    return q;
}

struct FbCore {
    Matrix la;  // n x K forward log weights
    Matrix lb;  // n x K backward log weights
    double ll = 0.0;
};

FbCore fb_core(const Matrix& f, const LogQTable& q, const std::vector<double>& initial,
               const Calendar& cal) {
    const long n = f.rows();
    const int K = static_cast<int>(f.cols());
    FbCore r;
    r.la = Matrix(n, K);
    r.lb = Matrix(n, K);
    std::vector<double> buf(K);

    for (int k = 0; k < K; ++k)
        r.la(0, k) = (initial[k] > 0.0 ? std::log(initial[k]) : kNegInf) + f(0, k);
    for (long t = 1; t < n; ++t) {
        const int doy = cal.day_of_year(t);  // transition leaving day number t
        for (int k = 0; k < K; ++k) {
            for (int i = 0; i < K; ++i) buf[i] = r.la(t - 1, i) + q.at(doy, i, k);
            r.la(t, k) = log_sum_exp(buf) + f(t, k);
        }
    }
    for (int k = 0; k < K; ++k) r.lb(n - 1, k) = 0.0;
    for (long t = n - 2; t >= 0; --t) {
        const int doy = cal.day_of_year(t + 1);
        for (int k = 0; k < K; ++k) {
            for (int j = 0; j < K; ++j) buf[j] = q.at(doy, k, j) + f(t + 1, j) + r.lb(t + 1, j);
            r.lb(t, k) = log_sum_exp(buf);
        }
    }
    for (int k = 0; k < K; ++k) buf[k] = r.la(n - 1, k);
    r.ll = log_sum_exp(buf);
    if (!std::isfinite(r.ll))
        throw DegenerateLikelihoodError("series has zero likelihood under the model", n);
    return r;
}

}  // namespace

ForwardBackwardResult forward_backward(const Parameters& params, const DailySeries& series,
                                       const ModelSpec& spec, ExecPolicy policy) {
    validate_parameters(params, spec);
    const long n = series.n_days();
    if (n == 0) throw InvalidParameterError("forward_backward: empty series");
    const int K = spec.n_states;

    const Matrix f = emission_log_matrix(params, series, spec, policy);
    const LogQTable q = build_logq(params.transition, spec);
    const FbCore fb = fb_core(f, q, params.initial, series.calendar);

    ForwardBackwardResult res;
    res.loglik = fb.ll;
    res.post.n = n;
    res.post.n_states = K;
    res.post.gamma = Matrix(n, K);
    for (long t = 0; t < n; ++t)
        for (int k = 0; k < K; ++k) {
            const double v = fb.la(t, k) + fb.lb(t, k) - fb.ll;
            res.post.gamma(t, k) = std::isfinite(v) ? std::exp(v) : 0.0;
        }
    if (n > 1) {
        res.post.xi.assign(static_cast<size_t>(n - 1) * K * K, 0.0);
        for (long t = 1; t < n; ++t) {
            const int doy = series.calendar.day_of_year(t);
            for (int i = 0; i < K; ++i)
                for (int j = 0; j < K; ++j) {
                    const double v = fb.la(t - 1, i) + q.at(doy, i, j) + f(t, j) +
                                     fb.lb(t, j) - fb.ll;
                    res.post.xi_at(t, i, j) = std::isfinite(v) ? std::exp(v) : 0.0;
                }
        }
    }
    return res;
}

double bic(double loglik, int n_params, long n_obs) {
    if (n_obs <= 0) throw InvalidParameterError("bic: sample size must be positive");
    return -loglik + 0.5 * n_params * std::log(static_cast<double>(n_obs));
}

namespace {

// ---------------------------------------------------------------------------
// EM internals

struct EStepResult {
    double ll = 0.0;
    Matrix gamma;  // n x K
    Matrix resp;   // n x (K*M) per-component responsibilities
    // Transition pair probabilities summed per day of year: [doy-1][i][j].
    std::vector<double> xi_doy;
};

EStepResult e_step(const Parameters& params, const DailySeries& series, const ModelSpec& spec,
                   ExecPolicy policy) {
    const long n = series.n_days();
    const int K = spec.n_states;
    const int M = spec.n_components;

    Matrix comp = emission_component_log(params, series, spec, policy);

    Matrix f(n, K);
    std::vector<unsigned char> bad(static_cast<size_t>(n), 0);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) if (policy.parallel)
#endif
    for (long t = 0; t < n; ++t) {
        const double* row = comp.row_ptr(t);
        bool any = false;
        for (int k = 0; k < K; ++k) {
            const double v = log_sum_exp(std::span<const double>(row + k * M, M));
            f(t, k) = v;
            any = any || std::isfinite(v);
        }
        if (!any) bad[static_cast<size_t>(t)] = 1;
    }
    for (size_t i = 0; i < bad.size(); ++i)
        if (bad[i])
            throw DegenerateLikelihoodError("observation at day " + std::to_string(i + 1) +
                                                " has zero density under every state",
                                            static_cast<long>(i + 1));

    const LogQTable q = build_logq(params.transition, spec);
    const FbCore fb = fb_core(f, q, params.initial, series.calendar);

    EStepResult es;
    es.ll = fb.ll;
    es.gamma = Matrix(n, K);
    es.resp = Matrix(n, static_cast<long>(K) * M);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) if (policy.parallel)
#endif
    for (long t = 0; t < n; ++t) {
        const double* crow = comp.row_ptr(t);
        double* rrow = es.resp.row_ptr(t);
        for (int k = 0; k < K; ++k) {
            const double lg = fb.la(t, k) + fb.lb(t, k) - fb.ll;
            const double g = std::isfinite(lg) ? std::exp(lg) : 0.0;
            es.gamma(t, k) = g;
            const double fk = f(t, k);
            for (int m = 0; m < M; ++m) {
                const double lw = crow[k * M + m] - fk;
                rrow[k * M + m] = (g > 0.0 && std::isfinite(lw)) ? g * std::exp(lw) : 0.0;
            }
        }
    }

    const int P = spec.period;
    es.xi_doy.assign(static_cast<size_t>(P) * K * K, 0.0);
    if (n > 1) {
        const int dim = P * K * K;
        chunked_accumulate(
            n - 1, dim, es.xi_doy.data(),
            [&](long t0, std::span<double> acc) {
                // t0 indexes the transition leaving day number t0+1.
                const long t = t0 + 1;
                const int doy = series.calendar.day_of_year(t);
                const size_t base = static_cast<size_t>(doy - 1) * K * K;
                for (int i = 0; i < K; ++i) {
                    const double lai = fb.la(t - 1, i);
                    if (!std::isfinite(lai)) continue;
                    for (int j = 0; j < K; ++j) {
                        const double v =
                            lai + q.at(doy, i, j) + f(t, j) + fb.lb(t, j) - fb.ll;
                        if (std::isfinite(v)) acc[base + i * K + j] += std::exp(v);
                    }
                }
            },
            policy);
    }
    return es;
}

// Per-series constants reused across every EM iteration.
struct FitWorkspace {
    Matrix basis_doy;  // period x B
    std::vector<double> u_year;  // centred calendar year per year index
    std::vector<double> h_year;  // centred hinge regressor per year index
    std::vector<long> wet_days;  // 0-based day indices with precip > 0
    std::vector<long> temp_days;  // 0-based day indices with temp present
    double ref_year = 0.0;
    double ref_hinge = 0.0;
};

FitWorkspace build_workspace(const DailySeries& series, const ModelSpec& spec) {
    FitWorkspace ws;
    const int B = spec.n_harmonic_coeffs();
    ws.basis_doy = Matrix(spec.period, B);
    std::vector<double> b(B);
    for (int r = 1; r <= spec.period; ++r) {
        harmonic_basis(spec.degree, spec.period, r, b);
        for (int l = 0; l < B; ++l) ws.basis_doy(r - 1, l) = b[l];
    }
    const Calendar& cal = series.calendar;
    const int Y = std::max(1, cal.n_years);
    ws.ref_year = cal.reference_year();
    ws.ref_hinge = spec.trend.kind == TrendKind::PiecewiseLinear
                       ? std::max(0.0, ws.ref_year - spec.trend.break_year)
                       : 0.0;
    ws.u_year.resize(Y);
    ws.h_year.resize(Y);
    for (int y = 0; y < Y; ++y) {
        const double year = cal.first_year + y;
        ws.u_year[y] = year - ws.ref_year;
        ws.h_year[y] = spec.trend.kind == TrendKind::PiecewiseLinear
                           ? std::max(0.0, year - spec.trend.break_year) - ws.ref_hinge
                           : 0.0;
    }
    const long n = series.n_days();
    for (long t = 0; t < n; ++t) {
        const double p = series.precip[static_cast<size_t>(t)];
        if (!is_missing(p) && p > 0.0) ws.wet_days.push_back(t);
        if (!is_missing(series.temp[static_cast<size_t>(t)])) ws.temp_days.push_back(t);
    }
    return ws;
}

// Negative expected complete-data log likelihood of the transition block and
// its gradient in the flattened coefficient layout of TransitionParams.
double transition_objective(std::span<const double> x, std::span<double> grad,
                            const std::vector<double>& xi_doy, const FitWorkspace& ws,
                            const ModelSpec& spec) {
    const int K = spec.n_states;
    const int B = spec.n_harmonic_coeffs();
    std::fill(grad.begin(), grad.end(), 0.0);
    double obj = 0.0;
    std::vector<double> logits(K), qrow(K);
    for (int r = 0; r < spec.period; ++r) {
        const double* b = ws.basis_doy.row_ptr(r);
        const size_t base = static_cast<size_t>(r) * K * K;
        for (int i = 0; i < K; ++i) {
            double rowsum = 0.0;
            for (int j = 0; j < K; ++j) rowsum += xi_doy[base + i * K + j];
            if (rowsum == 0.0) continue;
            for (int j = 0; j < K - 1; ++j) {
                double p = 0.0;
                const size_t xb = (static_cast<size_t>(i) * (K - 1) + j) * B;
                for (int l = 0; l < B; ++l) p += x[xb + l] * b[l];
                logits[j] = p;
            }
            logits[K - 1] = 0.0;
            const double mx = *std::max_element(logits.begin(), logits.end());
            double denom = 0.0;
            for (int j = 0; j < K; ++j) {
                qrow[j] = std::exp(logits[j] - mx);
                denom += qrow[j];
            }
            const double log_denom = std::log(denom);
            for (int j = 0; j < K; ++j) {
                qrow[j] /= denom;
                const double xi = xi_doy[base + i * K + j];
                if (xi > 0.0) obj += xi * (logits[j] - mx - log_denom);
            }
            for (int j = 0; j < K - 1; ++j) {
                const double g = xi_doy[base + i * K + j] - rowsum * qrow[j];
                const size_t xb = (static_cast<size_t>(i) * (K - 1) + j) * B;
                for (int l = 0; l < B; ++l) grad[xb + l] -= g * b[l];
            }
        }
    }
    return -obj;
}

void update_transition(Parameters& params, const EStepResult& es, const FitWorkspace& ws,
                       const ModelSpec& spec, const EmConfig& cfg) {
    if (spec.n_states == 1) return;
    LbfgsOptions opts;
    opts.max_evals = cfg.mstep_max_evals;
    const ObjectiveFn fn = [&](std::span<const double> x, std::span<double> g) {
        return transition_objective(x, g, es.xi_doy, ws, spec);
    };
    LbfgsResult r = lbfgs_minimize(fn, params.transition.coeffs, opts);
    params.transition.coeffs = std::move(r.x);
}

// Precipitation intensity block of one state: x = [log rate_m ...,
// seasonal log-scale coefficients].
void update_precip_block(Parameters& params, int k, const EStepResult& es,
                         const FitWorkspace& ws, const DailySeries& series,
                         const ModelSpec& spec, const EmConfig& cfg) {
    const int M = spec.n_components;
    const int M1 = spec.n_dirac;
    const int W = M - M1;
    const int B = spec.n_harmonic_coeffs();
    if (W == 0 || ws.wet_days.empty()) return;
    StateEmissionParams& st = params.emission[k];

    std::vector<double> x0(W + B);
    for (int m = 0; m < W; ++m) x0[m] = std::log(st.rate_base[m]);
    for (int l = 0; l < B; ++l) x0[W + l] = st.precip_season[l];

    const long nw = static_cast<long>(ws.wet_days.size());
    const int dim = 1 + W + B;
    std::vector<double> out(dim);
    const ObjectiveFn fn = [&](std::span<const double> x, std::span<double> grad) {
        chunked_accumulate(
            nw, dim, out.data(),
            [&](long idx, std::span<double> acc) {
                const long t = ws.wet_days[static_cast<size_t>(idx)];
                const double y = series.precip[static_cast<size_t>(t)];
                const int r = series.calendar.day_of_year(t + 1) - 1;
                const double* b = ws.basis_doy.row_ptr(r);
                double s = 0.0;
                for (int l = 0; l < B; ++l) s += x[W + l] * b[l];
                const double es_t = std::exp(-s);
                const double* wrow = es.resp.row_ptr(t);
                double glvl = 0.0;
                for (int m = 0; m < W; ++m) {
                    const double w = wrow[k * M + M1 + m];
                    if (w == 0.0) continue;
                    const double lam = std::exp(x[m]);
                    const double ey = lam * es_t * y;
                    acc[0] += w * (x[m] - s - ey);
                    acc[1 + m] += w * (1.0 - ey);
                    glvl += w * (ey - 1.0);
                }
                for (int l = 0; l < B; ++l) acc[1 + W + l] += glvl * b[l];
            },
            cfg.policy);
        for (int i = 0; i < W + B; ++i) grad[i] = -out[1 + i];
        return -out[0];
    };
    LbfgsOptions opts;
    opts.max_evals = cfg.mstep_max_evals;
    LbfgsResult r = lbfgs_minimize(fn, std::move(x0), opts);
    for (int m = 0; m < W; ++m) st.rate_base[m] = std::exp(r.x[m]);
    for (int l = 0; l < B; ++l) st.precip_season[l] = r.x[W + l];
}

// Temperature block of one state: x = [mu_m ..., nu_m ... (var = floor +
// exp(nu)), seasonal coefficients, trend in the centred parameterization].
void update_temp_block(Parameters& params, int k, const EStepResult& es, const FitWorkspace& ws,
                       const DailySeries& series, const ModelSpec& spec, const EmConfig& cfg) {
    const int M = spec.n_components;
    const int B = spec.n_harmonic_coeffs();
    const int D = spec.trend.dof();
    if (ws.temp_days.empty()) return;
    StateEmissionParams& st = params.emission[k];

    std::vector<double> x0(2 * M + B + D);
    for (int m = 0; m < M; ++m) x0[m] = st.temp_mean[m];
    for (int m = 0; m < M; ++m)
        x0[M + m] = std::log(std::max(st.temp_var[m] - kVarFloor, 1e-12));
    for (int l = 0; l < B; ++l) x0[2 * M + l] = st.temp_season[l];
    // Raw trend (a, b, c) -> centred (value at the reference year, slopes).
    {
        const double a = st.trend_coeffs[0];
        const double b2 = D > 1 ? st.trend_coeffs[1] : 0.0;
        const double c = D > 2 ? st.trend_coeffs[2] : 0.0;
        x0[2 * M + B] = a + b2 * ws.ref_year + c * ws.ref_hinge;
        if (D > 1) x0[2 * M + B + 1] = b2;
        if (D > 2) x0[2 * M + B + 2] = c;
    }

    const long nt = static_cast<long>(ws.temp_days.size());
    const int nx = 2 * M + B + D;
    const int dim = 1 + nx;
    std::vector<double> out(dim);
    std::vector<double> var(M), iv(M), lnc(M), expnu(M);
    const ObjectiveFn fn = [&](std::span<const double> x, std::span<double> grad) {
        for (int m = 0; m < M; ++m) {
            expnu[m] = std::exp(x[M + m]);
            var[m] = kVarFloor + expnu[m];
            iv[m] = 1.0 / var[m];
            lnc[m] = -0.5 * (kLog2Pi + std::log(var[m]));
        }
        chunked_accumulate(
            nt, dim, out.data(),
            [&](long idx, std::span<double> acc) {
                const long t = ws.temp_days[static_cast<size_t>(idx)];
                const double y = series.temp[static_cast<size_t>(t)];
                const int r = series.calendar.day_of_year(t + 1) - 1;
                const int yi = series.calendar.year_index(t + 1);
                const double* b = ws.basis_doy.row_ptr(r);
                double base = x[2 * M + B];
                if (D > 1) base += x[2 * M + B + 1] * ws.u_year[yi];
                if (D > 2) base += x[2 * M + B + 2] * ws.h_year[yi];
                for (int l = 0; l < B; ++l) base += x[2 * M + l] * b[l];
                const double* wrow = es.resp.row_ptr(t);
                double glvl = 0.0;
                for (int m = 0; m < M; ++m) {
                    const double w = wrow[k * M + m];
                    if (w == 0.0) continue;
                    const double e = y - base - x[m];
                    const double eiv = e * iv[m];
                    acc[0] += w * (lnc[m] - 0.5 * e * eiv);
                    acc[1 + m] += w * eiv;
                    acc[1 + M + m] += w * 0.5 * (e * eiv - 1.0) * iv[m] * expnu[m];
                    glvl += w * eiv;
                }
                for (int l = 0; l < B; ++l) acc[1 + 2 * M + l] += glvl * b[l];
                acc[1 + 2 * M + B] += glvl;
                if (D > 1) acc[1 + 2 * M + B + 1] += glvl * ws.u_year[yi];
                if (D > 2) acc[1 + 2 * M + B + 2] += glvl * ws.h_year[yi];
            },
            cfg.policy);
        for (int i = 0; i < nx; ++i) grad[i] = -out[1 + i];
        return -out[0];
    };
    LbfgsOptions opts;
    opts.max_evals = cfg.mstep_max_evals;
    LbfgsResult r = lbfgs_minimize(fn, std::move(x0), opts);

    for (int m = 0; m < M; ++m) st.temp_mean[m] = r.x[m];
    for (int m = 0; m < M; ++m) st.temp_var[m] = kVarFloor + std::exp(r.x[M + m]);
    for (int l = 0; l < B; ++l) st.temp_season[l] = r.x[2 * M + l];
    const double p0 = r.x[2 * M + B];
    const double p1 = D > 1 ? r.x[2 * M + B + 1] : 0.0;
    const double p2 = D > 2 ? r.x[2 * M + B + 2] : 0.0;
    st.trend_coeffs[0] = p0 - p1 * ws.ref_year - p2 * ws.ref_hinge;
    if (D > 1) st.trend_coeffs[1] = p1;
    if (D > 2) st.trend_coeffs[2] = p2;
}

void m_step(Parameters& params, const EStepResult& es, const FitWorkspace& ws,
            const DailySeries& series, const ModelSpec& spec, const EmConfig& cfg) {
    const int K = spec.n_states;
    const int M = spec.n_components;
    const long n = series.n_days();

    for (int k = 0; k < K; ++k) params.initial[k] = es.gamma(0, k);

    // Closed-form mixture weight update; a state with no posterior mass
    // keeps its previous parameters.
    for (int k = 0; k < K; ++k) {
        double denom = 0.0;
        for (long t = 0; t < n; ++t) denom += es.gamma(t, k);
        if (denom <= 0.0) continue;
        std::vector<double>& w = params.emission[k].weights;
        for (int m = 0; m < M; ++m) {
            double num = 0.0;
            for (long t = 0; t < n; ++t) num += es.resp(t, k * M + m);
            w[m] = num / denom;
        }
        // Guard the normalization against accumulated rounding.
        double s = std::accumulate(w.begin(), w.end(), 0.0);
        if (s > 0.0)
            for (double& x : w) x /= s;
    }

    update_transition(params, es, ws, spec, cfg);
    for (int k = 0; k < K; ++k) {
        update_precip_block(params, k, es, ws, series, spec, cfg);
        update_temp_block(params, k, es, ws, series, spec, cfg);
    }
}

}  // namespace

EmRun em_run(const DailySeries& series, const ModelSpec& spec, const Parameters& init,
             const EmConfig& cfg) {
    validate_parameters(init, spec);
    if (series.n_days() == 0) throw InvalidParameterError("em_run: empty series");
    const FitWorkspace ws = build_workspace(series, spec);

    EmRun run;
    run.params = init;
    while (true) {
        EStepResult es = e_step(run.params, series, spec, cfg.policy);
        run.loglik_trace.push_back(es.ll);
        const size_t it = run.loglik_trace.size();
        if (it >= 2) {
            const double prev = run.loglik_trace[it - 2];
            if (std::fabs(es.ll - prev) / (1.0 + std::fabs(es.ll)) < cfg.rel_tol) {
                run.converged = true;
                break;
            }
        }
        if (static_cast<int>(it) >= cfg.max_iters) break;
        m_step(run.params, es, ws, series, spec, cfg);
    }
    run.loglik = run.loglik_trace.back();
    run.iterations = static_cast<int>(run.loglik_trace.size());
    return run;
}

Parameters random_initial_parameters(const DailySeries& series, const ModelSpec& spec,
                                     RngStream& rng) {
    validate_spec(spec);
    const int K = spec.n_states;
    const int M = spec.n_components;
    const int M1 = spec.n_dirac;
    const int B = spec.n_harmonic_coeffs();
    const int P = spec.period;
    const long n = series.n_days();
    const Calendar& cal = series.calendar;

    // Day-of-year temperature climatology with overall-mean fallback.
    std::vector<double> csum(P, 0.0);
    std::vector<long> ccnt(P, 0);
    double tsum = 0.0;
    long tcnt = 0;
    for (long t = 0; t < n; ++t) {
        const double y = series.temp[static_cast<size_t>(t)];
        if (is_missing(y)) continue;
        const int r = cal.day_of_year(t + 1) - 1;
        csum[r] += y;
        ++ccnt[r];
        tsum += y;
        ++tcnt;
    }
    const double overall = tcnt > 0 ? tsum / tcnt : 0.0;
    std::vector<double> clim(P);
    for (int r = 0; r < P; ++r) clim[r] = ccnt[r] > 0 ? csum[r] / ccnt[r] : overall;

    // Harmonic projection of the climatology (the basis is orthogonal on the
    // equispaced day grid).
    std::vector<double> proj(B, 0.0);
    proj[0] = std::accumulate(clim.begin(), clim.end(), 0.0) / P;
    for (int l = 1; l <= spec.degree; ++l) {
        double pc = 0.0, ps = 0.0;
        for (int r = 1; r <= P; ++r) {
            const double w = 2.0 * M_PI * l * r / P;
            pc += clim[r - 1] * std::cos(w);
            ps += clim[r - 1] * std::sin(w);
        }
        proj[2 * l - 1] = 2.0 * pc / P;
        proj[2 * l] = 2.0 * ps / P;
    }

    // Residuals around the climatology drive the component offsets.
    std::vector<double> res;
    res.reserve(static_cast<size_t>(tcnt));
    for (long t = 0; t < n; ++t) {
        const double y = series.temp[static_cast<size_t>(t)];
        if (is_missing(y)) continue;
        res.push_back(y - clim[cal.day_of_year(t + 1) - 1]);
    }
    std::sort(res.begin(), res.end());
    double res_var = 1.0;
    if (res.size() >= 2) {
        const Moments mm = moments(res);
        if (std::isfinite(mm.sd) && mm.sd > 0.0) res_var = mm.sd * mm.sd;
    }

    // Yearly mean slope for the linear and piecewise starting points.
    double slope = 0.0;
    {
        const int Y = std::max(1, cal.n_years);
        std::vector<double> ysum(Y, 0.0);
        std::vector<long> ycnt(Y, 0);
        for (long t = 0; t < n; ++t) {
            const double y = series.temp[static_cast<size_t>(t)];
            if (is_missing(y)) continue;
            ysum[cal.year_index(t + 1)] += y;
            ++ycnt[cal.year_index(t + 1)];
        }
        double sy = 0.0, sx = 0.0, sxy = 0.0, sxx = 0.0;
        long cnt = 0;
        for (int y = 0; y < Y; ++y) {
            if (ycnt[y] == 0) continue;
            const double xv = static_cast<double>(y);
            const double yv = ysum[y] / ycnt[y];
            sx += xv;
            sy += yv;
            sxy += xv * yv;
            sxx += xv * xv;
            ++cnt;
        }
        if (cnt >= 2) {
            const double d = cnt * sxx - sx * sx;
            if (d > 0.0) slope = (cnt * sxy - sx * sy) / d;
        }
    }

    double mean_pos = 1.0;
    {
        double s = 0.0;
        long c = 0;
        for (long t = 0; t < n; ++t) {
            const double p = series.precip[static_cast<size_t>(t)];
            if (!is_missing(p) && p > 0.0) {
                s += p;
                ++c;
            }
        }
        if (c > 0) mean_pos = s / c;
    }
    const double year_mid = cal.reference_year();

    Parameters params;
    params.emission.resize(K);
    for (int k = 0; k < K; ++k) {
        StateEmissionParams& st = params.emission[k];
        st.trend_coeffs.resize(spec.trend.dof());
        switch (spec.trend.kind) {
            case TrendKind::Constant: st.trend_coeffs[0] = rng.normal(0.0, 0.5); break;
            case TrendKind::Linear:
                st.trend_coeffs[1] = slope + rng.normal(0.0, 0.005);
                st.trend_coeffs[0] = -st.trend_coeffs[1] * year_mid + rng.normal(0.0, 0.5);
                break;
            case TrendKind::PiecewiseLinear:
                st.trend_coeffs[1] = slope + rng.normal(0.0, 0.005);
                st.trend_coeffs[0] = -st.trend_coeffs[1] * year_mid + rng.normal(0.0, 0.5);
                st.trend_coeffs[2] = rng.normal(0.0, 0.005);
                break;
        }
        st.temp_season.resize(B);
        for (int l = 0; l < B; ++l)
            st.temp_season[l] = proj[l] + rng.normal(0.0, 0.1 * (1.0 + std::fabs(proj[l])));
        st.temp_mean.resize(M);
        for (int m = 0; m < M; ++m) {
            const double u = rng.uniform(0.05, 0.95);
            const double base = res.empty() ? 0.0 : quantile_sorted(res, u);
            st.temp_mean[m] = base + rng.normal(0.0, 0.3);
        }
        st.temp_var.resize(M);
        for (int m = 0; m < M; ++m) st.temp_var[m] = kVarFloor + res_var * rng.uniform(0.4, 1.2);
        st.weights.resize(M);
        double wsum = 0.0;
        for (int m = 0; m < M; ++m) {
            st.weights[m] = rng.uniform(0.5, 1.5);
            wsum += st.weights[m];
        }
        for (double& w : st.weights) w /= wsum;
        st.rate_base.resize(M - M1);
        for (int m = 0; m < M - M1; ++m)
            st.rate_base[m] = std::exp(rng.normal(0.0, 0.4)) / mean_pos;
        st.precip_season.resize(B);
        st.precip_season[0] = rng.normal(0.0, 0.3);
        for (int l = 1; l < B; ++l) st.precip_season[l] = rng.normal(0.0, 0.15);
    }
    params.transition = TransitionParams(K, spec.degree);
    for (double& c : params.transition.coeffs) c = rng.normal(0.0, 0.3);
    params.initial.assign(K, 1.0 / K);
    return params;
}

FittedModel em_fit(const DailySeries& series, const ModelSpec& spec, const EmConfig& cfg) {
    validate_spec(spec);
    if (series.n_days() == 0) throw InvalidParameterError("em_fit: empty series");
    const int R = std::max(1, cfg.n_restarts);
    std::vector<std::optional<EmRun>> runs(R);
    std::vector<std::string> errors(R);

#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic, 1) if (cfg.policy.parallel && R > 1)
#endif
    for (int r = 0; r < R; ++r) {
        try {
            RngStream rng(cfg.seed, static_cast<std::uint64_t>(r));
            const Parameters init = random_initial_parameters(series, spec, rng);
            runs[r] = em_run(series, spec, init, cfg);
        } catch (const std::exception& e) {
            errors[r] = e.what();
        }
    }

    int best = -1;
    for (int r = 0; r < R; ++r) {
        if (!runs[r] || !std::isfinite(runs[r]->loglik)) continue;
        if (best < 0 || runs[r]->loglik > runs[best]->loglik) best = r;
    }
    if (best < 0) {
        std::string msg = "every EM restart failed";
        for (int r = 0; r < R; ++r)
            if (!errors[r].empty()) {
                msg += "; first error: " + errors[r];
                break;
            }
        throw FitFailureError(msg);
    }

    FittedModel fm;
    fm.station = series.station;
    fm.spec = spec;
    fm.calendar = series.calendar;
    fm.dryness_threshold = series.dryness_threshold;
    fm.params = runs[best]->params;
    fm.loglik = runs[best]->loglik;
    fm.n_params = count_parameters(spec);
    fm.n_obs = series.n_observed();
    fm.bic = bic(fm.loglik, fm.n_params, fm.n_obs);
    fm.iterations = runs[best]->iterations;
    fm.converged = runs[best]->converged;
    for (int r = 0; r < R; ++r)
        if (runs[r] && std::isfinite(runs[r]->loglik))
            fm.restart_logliks.push_back(runs[r]->loglik);
    std::sort(fm.restart_logliks.begin(), fm.restart_logliks.end(), std::greater<>());
    return fm;
}

SelectionResult select_spec(const DailySeries& series, const std::vector<ModelSpec>& candidates,
                            const EmConfig& cfg) {
    if (candidates.empty()) throw InvalidParameterError("select_spec: no candidate specs");
    SelectionResult sel;
    int best = -1;
    std::vector<FittedModel> fits(candidates.size());
    for (size_t i = 0; i < candidates.size(); ++i) {
        SelectionRow row;
        row.spec = candidates[i];
        try {
            fits[i] = em_fit(series, candidates[i], cfg);
            row.loglik = fits[i].loglik;
            row.n_params = fits[i].n_params;
            row.bic = fits[i].bic;
            row.ok = true;
            if (best < 0 || row.bic < sel.table[best].bic) best = static_cast<int>(i);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        sel.table.push_back(std::move(row));
    }
    if (best < 0) throw FitFailureError("select_spec: every candidate fit failed");
    sel.best = std::move(fits[best]);
    return sel;
}

}  // namespace swg
